use proptest::prelude::*;
use systolab::comparison::{build_profile, eval_f, rate, ComparisonProfile};

/// Closed-form antiderivative: `F(z) = (2/n) arccosh(z^{n/2})`.
fn f_closed(z: f64, n: u32) -> f64 {
    2.0 / n as f64 * (z.powf(n as f64 / 2.0)).acosh()
}

/// `G(s) = cosh(n s / 2)^{2/n}`.
fn g_closed(s: f64, n: u32) -> f64 {
    (n as f64 * s / 2.0).cosh().powf(2.0 / n as f64)
}

/// Tanh–sinh quadrature of the original integrand on `[1, z]`; handles the
/// inverse-square-root endpoint without any substitution.
fn f_tanh_sinh(z: f64, n: u32) -> f64 {
    let h = 1.0 / 64.0;
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut sum = 0.0;
    for k in -400i32..=400 {
        let t = k as f64 * h;
        let u = half_pi * t.sinh();
        let cu = u.cosh();
        let w = half_pi * t.cosh() / (cu * cu);
        // 1 + x with x = tanh(u), computed without cancellation.
        let one_plus_x = 2.0 / ((-2.0 * u).exp() + 1.0);
        let excess = (z - 1.0) * one_plus_x / 2.0;
        if excess <= 0.0 || !w.is_finite() || w == 0.0 {
            continue;
        }
        let zeta = 1.0 + excess;
        let deficit = -(-(n as f64) * excess.ln_1p()).exp_m1();
        sum += w / (zeta * deficit.sqrt());
    }
    sum * h * (z - 1.0) / 2.0
}

#[test]
fn f_at_two_agrees_with_independent_rules() {
    for n in 3..=7 {
        let v = eval_f(2.0, n).unwrap();
        assert!((v - f_tanh_sinh(2.0, n)).abs() < 1e-10, "n={n}");
        assert!((v - f_closed(2.0, n)).abs() < 1e-12, "n={n}");
    }
    // frozen from the closed form: (2/3) arccosh(2^{3/2})
    assert!((eval_f(2.0, 3).unwrap() - 1.133_361_471_371_113).abs() < 1e-12);
}

#[test]
fn f_grows_like_log_at_infinity() {
    for n in 3..=7 {
        for z in [1e3, 1e4] {
            let d = eval_f(2.0 * z, n).unwrap() - eval_f(z, n).unwrap();
            assert!((d - std::f64::consts::LN_2).abs() < 1e-9, "n={n} z={z} d={d}");
        }
    }
}

#[test]
fn profile_satisfies_ode_at_every_sample() {
    for n in 3..=7 {
        let p = build_profile(n, 3.0, 1e-3).unwrap();
        for q in p.samples() {
            let residual = (q.dg - q.g * rate(q.g, n)).abs();
            assert!(residual <= 1e-9, "n={n} s={}", q.s);
            let exact = g_closed(q.s, n);
            assert!(((q.g - exact) / exact).abs() < 1e-11, "n={n} s={}", q.s);
        }
    }
}

#[test]
fn inverse_roundtrip_on_hundred_points() {
    for n in 3..=7 {
        let p = build_profile(n, 3.0, 1e-3).unwrap();
        for i in 1..=100 {
            let s = 3.0 * i as f64 / 100.0;
            let g = p.g(s).unwrap();
            let back = eval_f(g, n).unwrap();
            assert!((back - s).abs() <= 1e-8, "n={n} s={s} err={}", back - s);
        }
    }
}

#[test]
fn g_at_f_of_two_is_two() {
    let p = build_profile(3, 2.0, 1e-3).unwrap();
    let s = eval_f(2.0, 3).unwrap();
    assert!((p.g(s).unwrap() - 2.0).abs() < 1e-8);
}

#[test]
fn tip_series_coefficient() {
    for n in 3..=7 {
        let p = build_profile(n, 1.0, 1e-3).unwrap();
        let nf = n as f64;
        for s in [1e-2, 1e-3] {
            let g = p.g(s).unwrap();
            let quartic = (g - 1.0 - 0.25 * nf * s * s) / s.powi(4);
            // next coefficient is n²(3 − n)/96
            assert!(quartic.abs() <= nf * nf * (nf - 2.0) / 96.0 + 1.0, "n={n} s={s}");
        }
    }
}

fn richardson_derivative(f: impl Fn(f64) -> f64, s: f64, h: f64) -> f64 {
    let d1 = (f(s + h) - f(s - h)) / (2.0 * h);
    let d2 = (f(s + h / 2.0) - f(s - h / 2.0)) / h;
    (4.0 * d2 - d1) / 3.0
}

#[test]
fn power_derivative_identity() {
    for n in 3..=7 {
        let p = build_profile(n, 3.0, 1e-3).unwrap();
        let m = (n - 1) as i32;
        for q in p.samples().iter().filter(|q| q.s > 0.05 && q.s < 2.95).step_by(97) {
            let fd = richardson_derivative(|s| p.g(s).unwrap().powi(m), q.s, 1e-3);
            let expected = (n - 1) as f64 * q.g.powi(m) * rate(q.g, n);
            assert!(((fd - expected) / expected).abs() < 1e-8, "n={n} s={}", q.s);
        }
    }
}

#[test]
fn rate_derivative_identity() {
    for n in 3..=7 {
        let p = build_profile(n, 3.0, 1e-3).unwrap();
        for q in p.samples().iter().filter(|q| q.s > 0.05 && q.s < 2.95).step_by(89) {
            let fd = richardson_derivative(|s| p.rate(s).unwrap(), q.s, 1e-3);
            let expected = n as f64 / 2.0 * q.g.powi(-(n as i32));
            assert!((fd - expected).abs() < 1e-7, "n={n} s={} fd={fd} exp={expected}", q.s);
        }
    }
}

/// Classical RK4 from the nearest table entry, used as an independent
/// re-integration oracle for off-grid evaluations.
fn reintegrate(p: &ComparisonProfile, s: f64) -> f64 {
    let n = p.n();
    let start = p
        .samples()
        .iter()
        .min_by(|a, b| (a.s - s).abs().total_cmp(&(b.s - s).abs()))
        .unwrap();
    let steps = 2000;
    let h = (s - start.s) / steps as f64;
    let f = |g: f64| g * rate(g, n);
    let mut g = start.g;
    for _ in 0..steps {
        let k1 = f(g);
        let k2 = f(g + 0.5 * h * k1);
        let k3 = f(g + 0.5 * h * k2);
        let k4 = f(g + h * k3);
        g += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    g
}

#[test]
fn off_grid_values_match_local_reintegration() {
    for n in [3, 5, 7] {
        let p = build_profile(n, 3.0, 1e-3).unwrap();
        for s in [0.0137, 0.5551, 1.23456, 2.98765] {
            let g = p.g(s).unwrap();
            let oracle = reintegrate(&p, s);
            assert!(((g - oracle) / oracle).abs() < 1e-9, "n={n} s={s}");
        }
    }
}

proptest! {
    #[test]
    fn table_is_strictly_increasing(n in 3u32..=7, s_max in 0.5f64..4.0) {
        let p = build_profile(n, s_max, s_max / 200.0).unwrap();
        for w in p.samples().windows(2) {
            prop_assert!(w[1].s > w[0].s);
            prop_assert!(w[1].g > w[0].g);
        }
    }

    #[test]
    fn interpolant_is_monotone(n in 3u32..=7, a in 0.001f64..2.0, d in 1e-6f64..0.5) {
        let p = build_profile(n, 2.6, 1e-2).unwrap();
        prop_assert!(p.g(a + d).unwrap() > p.g(a).unwrap());
    }
}
