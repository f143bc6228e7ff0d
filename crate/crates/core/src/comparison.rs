//! The comparison function `F(z) = ∫_1^z ζ⁻¹ (1 − ζ⁻ⁿ)^{-1/2} dζ`, its
//! inverse `G`, and tabulated profiles of `G` used by the level-set and
//! model-metric code.
//!
//! `G` solves the autonomous equation `G' = G (1 − G⁻ⁿ)^{1/2}` with
//! `G(0⁺) = 1`. The right-hand side vanishes at `G = 1`, so the integration
//! starts from the series `G ≈ 1 + (n/4)s² + n²(3 − n)s⁴/96` at a small
//! seed point and carries the excess `G − 1` as the state variable to keep
//! full relative precision near the tip.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{DormandPrince, OdeOptions};
use crate::quadrature::{integrate, QuadratureOptions};

/// Arc length at which the tabulated profile takes over from the series.
pub const SEED_S: f64 = 1e-4;
/// Version tag of the profile JSON document.
pub const PROFILE_VERSION: u32 = 1;

/// `(1 − G⁻ⁿ)^{1/2}` evaluated from the excess `e = G − 1` without
/// cancellation.
pub fn rate_from_excess(excess: f64, n: u32) -> f64 {
    (-(-(n as f64) * excess.ln_1p()).exp_m1()).max(0.0).sqrt()
}

/// `(1 − G⁻ⁿ)^{1/2}`.
pub fn rate(g: f64, n: u32) -> f64 {
    rate_from_excess(g - 1.0, n)
}

/// Right-hand side `G (1 − G⁻ⁿ)^{1/2}` of the comparison equation.
pub fn ode_rhs(g: f64, n: u32) -> f64 {
    g * rate(g, n)
}

fn check_dimension(n: u32) -> Result<()> {
    if n < 3 {
        return Err(Error::Domain(format!("dimension n = {n} must be at least 3")));
    }
    Ok(())
}

/// Evaluates `F(z)` by adaptive Gauss–Kronrod quadrature after the
/// substitution `ζ = 1 + t²`, which turns the `(ζ − 1)^{-1/2}` endpoint
/// singularity into the smooth integrand
/// `2t / ((1 + t²)(1 − (1 + t²)⁻ⁿ)^{1/2})` with limit `2/√n` at `t = 0`.
pub fn eval_f(z: f64, n: u32) -> Result<f64> {
    eval_f_with(z, n, QuadratureOptions::default())
}

pub fn eval_f_with(z: f64, n: u32, opts: QuadratureOptions) -> Result<f64> {
    check_dimension(n)?;
    if !(z > 1.0) || !z.is_finite() {
        return Err(Error::Domain(format!("F(z) requires z > 1, got {z}")));
    }
    let t_max = (z - 1.0).sqrt();
    let nf = n as f64;
    let integrand = move |t: f64| {
        if t == 0.0 {
            return 2.0 / nf.sqrt();
        }
        let t2 = t * t;
        2.0 * t / ((1.0 + t2) * rate_from_excess(t2, n))
    };
    Ok(integrate(integrand, 0.0, t_max, opts)?.value)
}

/// Series expansion of `G` about the tip.
pub fn g_series(s: f64, n: u32) -> f64 {
    1.0 + g_series_excess(s, n)
}

fn g_series_excess(s: f64, n: u32) -> f64 {
    let nf = n as f64;
    let s2 = s * s;
    0.25 * nf * s2 + nf * nf * (3.0 - nf) * s2 * s2 / 96.0
}

/// One tabulated point `(s, G(s), G'(s))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSample {
    pub s: f64,
    pub g: f64,
    pub dg: f64,
}

/// Tabulated inverse comparison function for a fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonProfile {
    n: u32,
    s_max: f64,
    samples: Vec<ProfileSample>,
}

#[derive(Serialize, Deserialize)]
struct ProfileDocument {
    version: u32,
    n: u32,
    s_max: f64,
    samples: Vec<[f64; 3]>,
}

/// Integrates the comparison equation on `(0, s_max]` and tabulates `G`
/// at spacing `step`.
pub fn build_profile(n: u32, s_max: f64, step: f64) -> Result<ComparisonProfile> {
    check_dimension(n)?;
    if !(s_max > 0.0) || !s_max.is_finite() {
        return Err(Error::Domain(format!("s_max must be positive, got {s_max}")));
    }
    if !(step > 0.0) {
        return Err(Error::Domain(format!("step must be positive, got {step}")));
    }
    if s_max <= SEED_S || s_max / step < 100.0 {
        return Err(Error::Domain(format!(
            "step {step} yields fewer than 100 samples on (0, {s_max}]"
        )));
    }

    let rhs = move |_s: f64, y: &[f64; 1]| {
        let e = y[0].max(0.0);
        [(1.0 + e) * rate_from_excess(e, n)]
    };
    let mut solver = DormandPrince::new(
        rhs,
        OdeOptions {
            rel_tol: 1e-13,
            abs_tol: 1e-20,
            initial_step: 1e-6,
            max_steps: 10_000_000,
        },
    );

    let mut grid = vec![SEED_S];
    let mut k = 1usize;
    loop {
        let s = k as f64 * step;
        if s > s_max * (1.0 - 1e-12) {
            break;
        }
        if s > SEED_S {
            grid.push(s);
        }
        k += 1;
    }
    grid.push(s_max);

    let mut samples = Vec::with_capacity(grid.len());
    let mut excess = g_series_excess(SEED_S, n);
    let mut s_prev = SEED_S;
    for &s in &grid {
        if s > s_prev {
            excess = solver.advance(s_prev, [excess], s)?[0];
            s_prev = s;
        }
        let g = 1.0 + excess;
        samples.push(ProfileSample {
            s,
            g,
            dg: g * rate_from_excess(excess, n),
        });
    }
    Ok(ComparisonProfile { n, s_max, samples })
}

impl ComparisonProfile {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    pub fn samples(&self) -> &[ProfileSample] {
        &self.samples
    }

    /// `G(s)` and `G'(s)` for `s ∈ (0, s_max]`.
    ///
    /// Between samples `G` is a monotone cubic Hermite interpolant of the
    /// table; `G'` is the right-hand side of the comparison equation at the
    /// interpolated value.
    pub fn eval(&self, s: f64) -> Result<(f64, f64)> {
        let g = self.g(s)?;
        Ok((g, ode_rhs(g, self.n)))
    }

    pub fn g(&self, s: f64) -> Result<f64> {
        if !(s > 0.0) || s > self.s_max * (1.0 + 1e-12) {
            return Err(Error::Range(format!(
                "s = {s} outside the tabulated horizon (0, {}]",
                self.s_max
            )));
        }
        let first = &self.samples[0];
        if s <= first.s {
            return Ok(g_series(s, self.n));
        }
        let idx = self.samples.partition_point(|p| p.s < s).min(self.samples.len() - 1);
        let lo = &self.samples[idx - 1];
        let hi = &self.samples[idx];
        Ok(monotone_hermite(lo, hi, s))
    }

    /// `(1 − G(s)⁻ⁿ)^{1/2}`.
    pub fn rate(&self, s: f64) -> Result<f64> {
        if s > 0.0 && s <= self.samples[0].s {
            return Ok(rate_from_excess(g_series_excess(s, self.n), self.n));
        }
        Ok(rate(self.g(s)?, self.n))
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ProfileDocument {
            version: PROFILE_VERSION,
            n: self.n,
            s_max: self.s_max,
            samples: self.samples.iter().map(|p| [p.s, p.g, p.dg]).collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ProfileDocument = serde_json::from_str(text)?;
        if doc.version != PROFILE_VERSION {
            return Err(Error::Schema(format!(
                "unsupported profile version {}",
                doc.version
            )));
        }
        check_dimension(doc.n)?;
        if doc.samples.len() < 2 {
            return Err(Error::Schema("profile needs at least two samples".into()));
        }
        let samples: Vec<ProfileSample> = doc
            .samples
            .iter()
            .map(|r| ProfileSample { s: r[0], g: r[1], dg: r[2] })
            .collect();
        let increasing = samples
            .windows(2)
            .all(|w| w[1].s > w[0].s && w[1].g > w[0].g);
        if !increasing || samples[0].s <= 0.0 || samples[0].g <= 1.0 {
            return Err(Error::Schema(
                "profile samples must be strictly increasing with G > 1".into(),
            ));
        }
        if (samples.last().unwrap().s - doc.s_max).abs() > 1e-12 * doc.s_max {
            return Err(Error::Schema("last sample must sit at s_max".into()));
        }
        Ok(Self {
            n: doc.n,
            s_max: doc.s_max,
            samples,
        })
    }
}

/// Cubic Hermite interpolation on one interval with the Fritsch–Carlson
/// limiter on the endpoint slopes.
fn monotone_hermite(lo: &ProfileSample, hi: &ProfileSample, s: f64) -> f64 {
    let h = hi.s - lo.s;
    let secant = (hi.g - lo.g) / h;
    let (mut d0, mut d1) = (lo.dg, hi.dg);
    if secant > 0.0 {
        let a = d0 / secant;
        let b = d1 / secant;
        let r = a * a + b * b;
        if r > 9.0 {
            let tau = 3.0 / r.sqrt();
            d0 = tau * a * secant;
            d1 = tau * b * secant;
        }
    }
    let t = (s - lo.s) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * lo.g + h10 * h * d0 + h01 * hi.g + h11 * h * d1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_rejects_points_at_or_below_one() {
        assert!(matches!(eval_f(1.0, 3), Err(Error::Domain(_))));
        assert!(matches!(eval_f(0.5, 4), Err(Error::Domain(_))));
        assert!(matches!(eval_f(2.0, 2), Err(Error::Domain(_))));
    }

    #[test]
    fn f_vanishes_at_one() {
        let v = eval_f(1.0 + 1e-14, 3).unwrap();
        assert!(v >= 0.0 && v < 1e-6);
    }

    #[test]
    fn profile_rejects_bad_arguments() {
        assert!(build_profile(3, -1.0, 1e-3).is_err());
        assert!(build_profile(3, 1.0, 0.0).is_err());
        assert!(build_profile(3, 1.0, 0.1).is_err());
        assert!(build_profile(2, 1.0, 1e-3).is_err());
    }

    #[test]
    fn eval_outside_horizon_is_a_range_error() {
        let p = build_profile(4, 1.0, 1e-3).unwrap();
        assert!(matches!(p.g(1.5), Err(Error::Range(_))));
        assert!(matches!(p.g(0.0), Err(Error::Range(_))));
        assert!(matches!(p.g(-0.1), Err(Error::Range(_))));
    }

    #[test]
    fn tip_value_tends_to_one() {
        let p = build_profile(5, 1.0, 1e-3).unwrap();
        for s in [1e-3, 1e-5, 1e-8] {
            let g = p.g(s).unwrap();
            assert!((g - 1.0).abs() < 2.0 * s * s + 1e-15);
        }
    }

    #[test]
    fn json_roundtrip_preserves_table() {
        let p = build_profile(3, 1.0, 1e-2).unwrap();
        let back = ComparisonProfile::from_json(&p.to_json().unwrap()).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn json_rejects_non_monotone_samples() {
        let doc = r#"{"version":1,"n":3,"s_max":0.2,"samples":[[0.1,1.2,0.5],[0.2,1.1,0.5]]}"#;
        assert!(matches!(
            ComparisonProfile::from_json(doc),
            Err(Error::Schema(_))
        ));
    }
}
