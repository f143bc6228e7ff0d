//! Level-set trace of Horowitz–Myers cross-sections, where `J` is constant
//! and equal to `2π`.

use std::f64::consts::TAU;

use systolab::comparison::{build_profile, eval_f};
use systolab::levelset::{standard_grid, trace};
use systolab::surfaces::{hm_cross_section, Surface};

fn main() -> systolab::Result<()> {
    for n in 3..=7 {
        let l = eval_f(10.0, n)?;
        let profile = build_profile(n, l, 1e-3)?;
        let surface: Surface = hm_cross_section(&profile, 1.0, l)?.into();
        let tr = trace(&surface, &profile, &standard_grid(l))?;
        let mid = &tr.rows[tr.rows.len() / 2];
        println!(
            "n = {n}: l = {l:.6}, area {:.6}, at s = {:.4}: L = {:.6}, J = {:.12}, max |J - 2π| = {:.2e}",
            tr.total_area,
            mid.s,
            mid.length,
            mid.j,
            tr.max_deviation_from(TAU)
        );
    }
    let l = eval_f(5.0, 3)?;
    let profile = build_profile(3, l, 1e-3)?;
    let tr = trace(&hm_cross_section(&profile, 1.0, l)?.into(), &profile, &standard_grid(l))?;
    let path = std::env::temp_dir().join("hm_trace_n3.csv");
    tr.write_csv(std::fs::File::create(&path)?)?;
    println!("trace for n = 3, l = F(5) written to {}", path.display());
    Ok(())
}
