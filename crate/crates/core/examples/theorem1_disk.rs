//! Both sides of the boundary inequality on disks, including the
//! Horowitz–Myers cross-sections that approach equality.

use systolab::comparison::{build_profile, eval_f};
use systolab::levelset::theorem1_disk_report;
use systolab::surfaces::{euclidean_disk, hm_cross_section, hyperbolic_disk, poincare_disk, Surface};

fn main() -> systolab::Result<()> {
    let named: Vec<(&str, Surface)> = vec![
        ("hyperbolic disk, radius 1", hyperbolic_disk(3, 1.0)?.into()),
        ("hyperbolic disk, radius 3", hyperbolic_disk(3, 3.0)?.into()),
        ("euclidean disk, radius 0.5", euclidean_disk(3, 0.5)?.into()),
        ("meshed Poincaré disk", poincare_disk(3, 30, 1.0)?.into()),
    ];
    for (name, s) in &named {
        let r = theorem1_disk_report(s, 1e-4)?;
        println!("{name:<28} ratio (inf) {:>10.6}  ratio (integral) {:>10.6}", r.ratio_inf, r.ratio_integral);
    }
    println!("\nHorowitz–Myers cross-sections, r0 = 1");
    for n in [3, 5, 7] {
        for z in [2.0, 5.0, 10.0, 20.0] {
            let l = eval_f(z, n)?;
            let profile = build_profile(n, l, 1e-3)?;
            let r = theorem1_disk_report(&hm_cross_section(&profile, 1.0, l)?.into(), 1e-4)?;
            println!("n = {n}, l = F({z:>4}) = {l:.5}: ratio {:.8}", r.ratio_inf);
        }
    }
    Ok(())
}
