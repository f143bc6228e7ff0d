//! Collapsing the torus fibers of the Horowitz–Myers metric into a weight on
//! its two-dimensional cross-section.

use systolab::comparison::{build_profile, eval_f};
use systolab::surfaces::{hm_ansatz, hm_cross_section, reduce_warped_product, Surface};

fn main() -> systolab::Result<()> {
    let n = 5;
    let l = eval_f(5.0, n)?;
    let profile = build_profile(n, l, 1e-3)?;
    let ansatz = hm_ansatz(&profile, 1.0, l)?;
    let reduced = reduce_warped_product(&ansatz)?;
    let direct = hm_cross_section(&profile, 1.0, l)?;
    let worst_r = (1..ansatz.s.len())
        .map(|i| ansatz.scalar_curvature(i).map(|r| (r + (n * (n - 1)) as f64).abs()))
        .try_fold(0.0f64, |m, r| r.map(|r| m.max(r)))?;
    let worst_psi = ansatz
        .s
        .iter()
        .map(|&s| Ok((reduced.psi(s, 0.0)? - direct.psi(s, 0.0)?).abs()))
        .try_fold(0.0f64, |m, r: systolab::Result<f64>| r.map(|r| m.max(r)))?;
    println!("n = {n}, {} nodes on [0, {l:.5}]", ansatz.s.len());
    println!("max |R + n(n-1)| = {worst_r:.3e}, max |ψ_reduced - ψ_direct| = {worst_psi:.3e}");
    let residual = Surface::from(reduced).hypothesis_residual();
    println!("min hypothesis residual {:.3e}", residual.min().map_or(f64::NAN, |m| m.1));
    Ok(())
}
