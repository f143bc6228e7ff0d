//! Scaled mean-curvature residuals of the Horowitz–Myers slices and of a
//! graph over a synthetic end with nonconstant charge.

use systolab::asymptotics::{hm_slice_residual, AsymptoticProblem, FourierField, TensorField};
use systolab::systole::FlatTorus;

fn main() -> systolab::Result<()> {
    let radii = [10.0, 20.0, 40.0];
    println!("exact Horowitz–Myers slices, r0 = 1");
    println!("{:>3} {:>8} {:>14} {:>10}", "n", "r_hat", "residual", "ratio");
    for n in 3..=7 {
        let mut prev: Option<f64> = None;
        for &r in &radii {
            let s = hm_slice_residual(n, 1.0, r)?;
            let ratio = prev.map_or(f64::NAN, |p| s.scaled_residual / p);
            println!("{n:>3} {r:>8.1} {:>14.6e} {ratio:>10.4}", s.scaled_residual);
            prev = Some(s.scaled_residual);
        }
    }

    let torus = FlatTorus::rectangular(&[2.0, 1.5])?;
    let mut q = TensorField::zero(&torus);
    q.set_component(0, 0, FourierField::new(&torus, [(vec![0, 0], [-0.3, 0.0]), (vec![1, 0], [0.4, 0.1])])?);
    q.set_component(1, 1, FourierField::new(&torus, [(vec![0, 1], [0.3, 0.0])])?);
    let problem = AsymptoticProblem::new(3, torus, q)?;
    println!("\nsynthetic end, n = 3, mu = {:.6}", problem.mu);
    println!("{:>8} {:>14} {:>14} {:>14}", "r_hat", "residual", "min r^n(H-2)", "max r^n(H-2)");
    for s in problem.mean_curvature_sweep(&radii, 12)? {
        println!(
            "{:>8.1} {:>14.6e} {:>14.6e} {:>14.6e}",
            s.r_hat, s.scaled_residual, s.scaled_h_min, s.scaled_h_max
        );
    }
    Ok(())
}
