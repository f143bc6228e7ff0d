//! Monotonicity of `J` on randomly perturbed hyperbolic disks, meshed and
//! refined once.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use systolab::comparison::build_profile;
use systolab::levelset::{empirical_constants, inradius, monotonicity_report, standard_grid, trace, MonotonicityOptions};
use systolab::surfaces::{perturbed_poincare_disk, SmoothPerturbation, Surface};

fn main() -> systolab::Result<()> {
    let profile = build_profile(3, 1.2, 1e-3)?;
    let opts = MonotonicityOptions {
        tolerance: 1e-3,
        hypothesis_tolerance: 0.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut done = 0;
    while done < 3 {
        let dl = SmoothPerturbation::random(&mut rng, 4, 3.0, 0.06);
        let dp = SmoothPerturbation::random(&mut rng, 4, 3.0, 0.06);
        for rings in [20, 40] {
            let s: Surface = perturbed_poincare_disk(3, rings, 1.0, &dl, &dp)?.into();
            let residual = s.hypothesis_residual().min().map_or(f64::NAN, |m| m.1);
            if residual < 0.0 {
                println!("skipping draw: hypothesis residual {residual:.3e}");
                break;
            }
            let l = inradius(&s)?;
            let tr = trace(&s, &profile, &standard_grid(l))?;
            let rep = monotonicity_report(&s, &tr, opts)?;
            let c = empirical_constants(&tr);
            println!(
                "disk {done}, {rings} rings: l = {l:.4}, min ΔJ = {:+.3e}, J(end) = {:.6}, flagged {}, C_A = {:.3}",
                rep.min_increment,
                rep.j_end,
                rep.flagged_levels.len(),
                c.area
            );
            if rings == 40 {
                done += 1;
            }
        }
    }
    Ok(())
}
