//! Tabulates the inverse comparison function `G` and checks it against the
//! forward quadrature `F`.

use systolab::comparison::{build_profile, eval_f, rate};

fn main() -> systolab::Result<()> {
    for n in 3..=7 {
        let profile = build_profile(n, 3.0, 1e-3)?;
        let (mut residual, mut roundtrip) = (0.0f64, 0.0f64);
        for i in 1..=100 {
            let s = 0.03 * i as f64;
            let (g, dg) = profile.eval(s)?;
            residual = residual.max((dg - g * rate(g, n)).abs());
            roundtrip = roundtrip.max((eval_f(g, n)? - s).abs());
        }
        println!(
            "n = {n}: F(2) = {:.12}, G(3) = {:.9}, ODE residual {residual:.2e}, |F(G(s)) - s| {roundtrip:.2e}",
            eval_f(2.0, n)?,
            profile.g(3.0)?
        );
    }
    Ok(())
}
