//! Stable weighted free-boundary geodesics on annuli and the endpoint bound
//! for `w = ψ∘γ + log v`.

use systolab::comparison::{build_profile, eval_f};
use systolab::stability::{theorem1_nondisk_analysis, GeodesicOptions};
use systolab::surfaces::{flat_cylinder, hm_annulus, hyperbolic_annulus, AngularMode, Surface};

fn main() -> systolab::Result<()> {
    let (s_in, l) = (eval_f(1.5, 4)?, eval_f(5.0, 4)?);
    let profile = build_profile(4, l, 1e-3)?;
    let named: Vec<(&str, Surface)> = vec![
        ("flat cylinder", flat_cylinder(3, 2.0, 6.0)?.into()),
        (
            "weighted cylinder",
            flat_cylinder(3, 2.0, 6.0)?
                .with_angular_psi(vec![AngularMode { k: 1, cos: 0.1, sin: 0.0 }])
                .into(),
        ),
        ("hyperbolic cylinder", hyperbolic_annulus(3, 0.8)?.into()),
        ("Horowitz–Myers annulus n=4", hm_annulus(&profile, 1.0, s_in, l)?.into()),
    ];
    for (name, s) in &named {
        let (rep, geo, stab) = theorem1_nondisk_analysis(s, None, GeodesicOptions::default(), 1e-6)?;
        println!("{name}");
        println!(
            "  length {:.6}, weighted length {:.6}, λ = {:.3e}",
            geo.length, geo.weighted_length, rep.eigenvalue
        );
        println!(
            "  w'(0) = {:+.6}, w'(l) = {:+.6}, min{{-w'(0), w'(l)}} = {:.6} ≤ {}",
            rep.w_prime[0], rep.w_prime[1], rep.endpoint_min, rep.bound
        );
        println!("  min Riccati residual {:.3e}, boundary inf {:.6}", stab.min_riccati, rep.boundary_inf);
    }
    Ok(())
}
