//! Mass inequality audits: the Horowitz–Myers end, a random charge, and a
//! doubled charge whose negative mass triggers the contradiction bookkeeping.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use systolab::asymptotics::{hm_charge, random_band_limited, theorem3_report, AsymptoticProblem, TensorField};
use systolab::systole::FlatTorus;

fn main() -> systolab::Result<()> {
    let torus = FlatTorus::rectangular(&[4.0 * std::f64::consts::PI / 3.0, 8.0])?;
    let hm = TensorField::constant(&torus, &hm_charge(3, 1.0)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cases = [
        ("Horowitz–Myers", hm.clone()),
        ("random charge", random_band_limited(&mut rng, &torus, 2, 3, 0.1)),
        ("doubled charge", hm.scaled(2.0)),
    ];
    for (name, q) in cases {
        let problem = AsymptoticProblem::new(3, torus.clone(), q)?;
        let rep = theorem3_report(&problem, 1e-9)?;
        println!(
            "{name:<16} σ = {:.6}, μ = {:+.6}, mass = {:+.6e}, holds {}",
            rep.sigma, rep.mu, rep.mass, rep.holds
        );
        if let Some(a) = rep.contradiction {
            println!(
                "  ε = {:.4} (max {:.4}), critical r̂ = {:.3}, systole ratio ≥ {:.6}, H margin {:.3e}",
                a.epsilon, a.epsilon_max, a.r_hat_critical, a.systole_ratio_bound, a.mean_curvature_margin
            );
        }
    }
    Ok(())
}
