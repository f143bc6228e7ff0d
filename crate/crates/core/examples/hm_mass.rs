//! The mass integral of the Horowitz–Myers ends vanishes.

use std::f64::consts::PI;

use systolab::asymptotics::{hm_gauge_defect, hm_problem};
use systolab::systole::hm_sigma;

fn main() -> systolab::Result<()> {
    println!("{:>3} {:>5} {:>14} {:>10} {:>12} {:>12}", "n", "r0", "sigma", "mu", "mass", "gauge@1e3");
    for n in 3..=7u32 {
        for r0 in [0.5, 1.0, 2.0] {
            let fibers = vec![8.0 * PI / (n as f64 * r0); n as usize - 2];
            let problem = hm_problem(n, r0, &fibers)?;
            let sigma = hm_sigma(n, r0, &fibers)?.sigma;
            let mass = problem.mass_integral(sigma)?;
            let defect = hm_gauge_defect(n, r0, 1e3 * r0)?;
            println!("{n:>3} {r0:>5.1} {sigma:>14.10} {:>10.6} {mass:>12.3e} {defect:>12.3e}", problem.mu);
        }
    }
    Ok(())
}
