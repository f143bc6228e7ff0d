//! Shortest lattice vectors with nonzero winding on flat tori, checked
//! against exhaustive search.

use std::f64::consts::PI;

use systolab::systole::{brute_force_systole, constrained_systole, hm_sigma, hm_sigma_sheared, FlatTorus};

fn main() -> systolab::Result<()> {
    let tori = [
        ("rectangular", FlatTorus::rectangular(&[2.0, 0.5, 0.7])?),
        ("skew", FlatTorus::new(vec![vec![1.0, 0.0], vec![0.9, 0.1]])?),
        ("hexagonal", FlatTorus::new(vec![vec![1.0, 0.0], vec![0.5, 3f64.sqrt() / 2.0]])?),
    ];
    for (name, t) in &tori {
        let s = constrained_systole(t);
        let b = brute_force_systole(t, 5);
        println!(
            "{name:<12} σ = {:.12} witness {:?} ({} leaves), brute force σ = {:.12}",
            s.sigma, s.witness, s.visited, b.sigma
        );
    }
    let s = hm_sigma(5, 1.0, &[3.0, 3.0, 3.0])?;
    println!("\nHorowitz–Myers n = 5: σ = {:.12} (4π/5 = {:.12})", s.sigma, 0.8 * PI);
    let s = hm_sigma_sheared(4, 1.0, &[0.4, 1.5], &[0.9 * PI, 0.0])?;
    println!(
        "sheared n = 4: σ = {:.6} below nominal {:.6}, witness {:?}, flagged {}",
        s.sigma, s.nominal, s.witness, s.flagged
    );
    Ok(())
}
