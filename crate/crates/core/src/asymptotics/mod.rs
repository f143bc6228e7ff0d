//! Toroidal asymptotically hyperbolic ends `ĝ = r⁻²dr² + r²γ + r^{2−n}Q`.
//!
//! The charge equation `Δ_γ u + (n/2) tr_γ Q + μ = 0` is solved spectrally,
//! the mean curvature of the graph `r = r̂ + r̂^{3−n}u` is computed by
//! finite differences of the area flux, and the mass integral is audited
//! against the constrained systole of the boundary torus.

mod fourier;

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::systole::{constrained_systole, hm_torus, FlatTorus};

pub use fourier::{random_band_limited, torus_grid, FourierField, TensorField};

/// Version tag of the problem JSON document.
pub const PROBLEM_VERSION: u32 = 1;
/// Relative finite-difference step for the mean curvature.
pub const FD_STEP: f64 = 1e-4;

fn check_dimension(n: u32, torus: &FlatTorus) -> Result<()> {
    if n < 3 {
        return Err(Error::Domain(format!("dimension n = {n} must be at least 3")));
    }
    if torus.dimension() != n as usize - 1 {
        return Err(Error::Domain(format!(
            "torus dimension {} does not match n − 1 = {}",
            torus.dimension(),
            n - 1
        )));
    }
    Ok(())
}

/// Solution `(u, μ)` of the charge equation with `mean(u) = 0`.
pub fn solve_u(n: u32, torus: &FlatTorus, q: &TensorField) -> Result<(FourierField, f64)> {
    check_dimension(n, torus)?;
    let tr = q.trace();
    let half_n = 0.5 * n as f64;
    Ok((tr.inverse_laplacian().scaled(half_n), -half_n * tr.mean()))
}

/// An end with its solved charge data.
#[derive(Debug, Clone)]
pub struct AsymptoticProblem {
    pub n: u32,
    pub torus: FlatTorus,
    pub q: TensorField,
    pub u: FourierField,
    pub mu: f64,
}

impl AsymptoticProblem {
    pub fn new(n: u32, torus: FlatTorus, q: TensorField) -> Result<Self> {
        if q.dimension() != torus.dimension() {
            return Err(Error::Domain("charge tensor and torus dimensions differ".into()));
        }
        let (u, mu) = solve_u(n, &torus, &q)?;
        Ok(AsymptoticProblem { n, torus, q, u, mu })
    }

    /// Grid resolution per lattice direction that resolves products of two
    /// fields of the current bandwidth, capped at roughly 4096 points.
    pub fn default_grid(&self) -> usize {
        let m = self.torus.dimension() as u32;
        let need = (4 * self.q.bandwidth() + 2).max(2) as usize;
        let cap = ((4096f64).powf(1.0 / m as f64).floor() as usize).max(2);
        need.min(cap)
    }

    /// L²-norm of `Δu + (n/2) tr Q + μ` sampled on the grid.
    pub fn pde_residual(&self, per_dim: usize) -> f64 {
        let tr = self.q.trace();
        let half_n = 0.5 * self.n as f64;
        let pts = torus_grid(&self.torus, per_dim);
        let sum: f64 = pts
            .iter()
            .map(|x| {
                let r = self.u.laplacian(x) + half_n * tr.value(x) + self.mu;
                r * r
            })
            .sum();
        (sum * self.torus.volume() / pts.len() as f64).sqrt()
    }

    /// Trapezoidal quadrature of `n tr Q + 2μ` over the torus; exact for
    /// band-limited data once the grid exceeds the bandwidth.
    pub fn divergence_defect(&self, per_dim: usize) -> f64 {
        let tr = self.q.trace();
        let nf = self.n as f64;
        let pts = torus_grid(&self.torus, per_dim);
        let sum: f64 = pts.iter().map(|x| nf * tr.value(x) + 2.0 * self.mu).sum();
        sum * self.torus.volume() / pts.len() as f64
    }

    /// `∫(n tr Q + (4π/(nσ))ⁿ) dvol`.
    pub fn mass_integral(&self, sigma: f64) -> Result<f64> {
        mass_integral(self.n, &self.torus, &self.q, sigma)
    }

    pub fn from_document(doc: &ProblemDocument) -> Result<Self> {
        if doc.version != PROBLEM_VERSION {
            return Err(Error::Schema(format!(
                "unsupported problem version {} (expected {PROBLEM_VERSION})",
                doc.version
            )));
        }
        doc.torus.validate().map_err(|e| Error::Schema(e.to_string()))?;
        let m = doc.torus.dimension();
        if doc.n as usize != m + 1 {
            return Err(Error::Schema(format!("n = {} does not match torus dimension {m}", doc.n)));
        }
        let mut q = TensorField::zero(&doc.torus);
        let mut seen = vec![false; m * m];
        for comp in &doc.q_fourier {
            let [i, j] = comp.component;
            if i >= m || j >= m {
                return Err(Error::Schema(format!("component [{i}, {j}] out of range")));
            }
            let (i, j) = (i.min(j), i.max(j));
            if std::mem::replace(&mut seen[i * m + j], true) {
                return Err(Error::Schema(format!("component [{i}, {j}] given twice")));
            }
            let mut coeffs = Vec::with_capacity(comp.modes.len());
            for row in &comp.modes {
                if row.len() != m + 2 {
                    return Err(Error::Schema(format!(
                        "mode {row:?} must list {m} integers followed by re, im"
                    )));
                }
                let k = row[..m]
                    .iter()
                    .map(|&v| {
                        if v.fract() == 0.0 && v.abs() < 1e9 {
                            Ok(v as i64)
                        } else {
                            Err(Error::Schema(format!("mode index {v} is not an integer")))
                        }
                    })
                    .collect::<Result<Vec<i64>>>()?;
                coeffs.push((k, [row[m], row[m + 1]]));
            }
            q.set_component(i, j, FourierField::new(&doc.torus, coeffs)?);
        }
        AsymptoticProblem::new(doc.n, doc.torus.clone(), q)
    }

    pub fn to_document(&self) -> ProblemDocument {
        let m = self.torus.dimension();
        let mut q_fourier = Vec::new();
        for i in 0..m {
            for j in i..m {
                let modes: Vec<Vec<f64>> = self
                    .q
                    .component(i, j)
                    .coefficients()
                    .map(|(k, c)| k.iter().map(|&v| v as f64).chain(c).collect())
                    .collect();
                if !modes.is_empty() {
                    q_fourier.push(ComponentDocument { component: [i, j], modes });
                }
            }
        }
        ProblemDocument {
            version: PROBLEM_VERSION,
            n: self.n,
            torus: self.torus.clone(),
            q_fourier,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentDocument {
    pub component: [usize; 2],
    /// Rows `[k₁, …, k_m, re, im]`.
    pub modes: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDocument {
    pub version: u32,
    pub n: u32,
    pub torus: FlatTorus,
    #[serde(rename = "Q_fourier")]
    pub q_fourier: Vec<ComponentDocument>,
}

/// `∫(n tr_γ Q + (4π/(nσ))ⁿ) dvol_γ`, integrated exactly from the mean.
pub fn mass_integral(n: u32, torus: &FlatTorus, q: &TensorField, sigma: f64) -> Result<f64> {
    check_dimension(n, torus)?;
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Domain(format!("σ must be positive, got {sigma}")));
    }
    let nf = n as f64;
    Ok(torus.volume() * (nf * q.trace().mean() + (4.0 * PI / (nf * sigma)).powi(n as i32)))
}

/// Gauge-normalized charge of the Horowitz–Myers metric in the
/// coordinates `(ξ, θ₁, …)`: `r₀ⁿ[(1/n − 1)dξ² + (1/n)Σdθᵢ²]`.
pub fn hm_charge(n: u32, r0: f64) -> Result<Vec<Vec<f64>>> {
    if !(3..=7).contains(&n) {
        return Err(Error::Domain(format!("n = {n} outside 3..=7")));
    }
    if !(r0 > 0.0) || !r0.is_finite() {
        return Err(Error::Domain(format!("r0 must be positive, got {r0}")));
    }
    let m = n as usize - 1;
    let nf = n as f64;
    let c = r0.powi(n as i32);
    Ok((0..m)
        .map(|i| {
            (0..m)
                .map(|j| match (i, j) {
                    (0, 0) => c * (1.0 / nf - 1.0),
                    (i, j) if i == j => c / nf,
                    _ => 0.0,
                })
                .collect()
        })
        .collect())
}

/// The coefficient `a` of the radial change `r = ρ(1 + aρ⁻ⁿ)` that removes
/// the `ρ⁻ⁿ` correction of the radial component.
pub fn hm_gauge_coefficient(n: u32, r0: f64) -> f64 {
    r0.powi(n as i32) / (2.0 * n as f64)
}

/// `ρⁿ |g_HM − (ρ⁻²dρ² + ρ²γ + ρ^{2−n}Q)|_ḡ` after the gauge change.
pub fn hm_gauge_defect(n: u32, r0: f64, rho: f64) -> Result<f64> {
    let q = hm_charge(n, r0)?;
    let nf = n as f64;
    let a = hm_gauge_coefficient(n, r0);
    let t = rho.powf(-nf);
    let r = rho * (1.0 + a * t);
    let x = (r0 / r).powf(nf);
    if !(x < 1.0) {
        return Err(Error::Range(format!("ρ = {rho} lies inside the tip")));
    }
    // ρ² g_ρρ − 1 with g_ρρ = (dr/dρ)² / (r² f).
    let radial = (2.0 * ((1.0 - nf) * a * t).ln_1p() - 2.0 * (a * t).ln_1p() - (-x).ln_1p()).exp_m1();
    // ρ⁻² g_ξξ − 1 − ρ⁻ⁿQ_ξξ with g_ξξ = r² f.
    let xi = (2.0 * (a * t).ln_1p() + (-x).ln_1p()).exp_m1() - t * q[0][0];
    // ρ⁻² g_θθ − 1 − ρ⁻ⁿQ_θθ with g_θθ = r².
    let theta = if n > 2 && q.len() > 1 {
        (2.0 * (a * t).ln_1p()).exp_m1() - t * q[1][1]
    } else {
        0.0
    };
    let norm = (radial * radial + xi * xi + (nf - 2.0) * theta * theta).sqrt();
    Ok(norm / t)
}

/// The Horowitz–Myers end over the rectangular torus with the given fiber
/// lengths.
pub fn hm_problem(n: u32, r0: f64, fiber_lengths: &[f64]) -> Result<AsymptoticProblem> {
    let torus = hm_torus(n, r0, fiber_lengths, &[])?;
    let q = TensorField::constant(&torus, &hm_charge(n, r0)?)?;
    AsymptoticProblem::new(n, torus, q)
}

/// Scaled mean-curvature residual `r̂ⁿ sup|H − (n−1) − μr̂⁻ⁿ|` at one radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanCurvatureSample {
    pub r_hat: f64,
    pub scaled_residual: f64,
    /// Extremes of `r̂ⁿ(H − (n−1))` over the sample points.
    pub scaled_h_min: f64,
    pub scaled_h_max: f64,
}

fn richardson(f: impl Fn(f64) -> Result<f64>, h: f64) -> Result<f64> {
    let d = |h: f64| -> Result<f64> { Ok((f(h)? - f(-h)?) / (2.0 * h)) };
    let (d1, d2) = (d(h)?, d(0.5 * h)?);
    Ok((4.0 * d2 - d1) / 3.0)
}

/// `½ ln det(I + q)`, `(I + q)⁻¹` for a small symmetric `q`, accurate to
/// the relative size of `q`.
fn perturbed_identity(q: &[Vec<f64>]) -> Result<(f64, DMatrix<f64>)> {
    let m = q.len();
    let eig = SymmetricEigen::new(DMatrix::from_fn(m, m, |i, j| q[i][j]));
    if eig.eigenvalues.iter().any(|&l| !(l > -1.0 + 1e-3)) {
        return Err(Error::Range("ĝ is not positive definite near the graph".into()));
    }
    let half_log_det = 0.5 * eig.eigenvalues.iter().map(|l| l.ln_1p()).sum::<f64>();
    let inv_diag = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / (1.0 + l)));
    Ok((half_log_det, &eig.eigenvectors * inv_diag * eig.eigenvectors.transpose()))
}

impl AsymptoticProblem {
    fn metric_at(&self, t: f64, x: &[f64]) -> Result<(f64, DMatrix<f64>)> {
        let s = (-(self.n as f64) * t).exp();
        let q: Vec<Vec<f64>> = self
            .q
            .value(x)
            .into_iter()
            .map(|row| row.into_iter().map(|v| s * v).collect())
            .collect();
        perturbed_identity(&q)
    }

    /// `ln r` on the graph and its Euclidean gradient.
    fn graph(&self, r_hat: f64, x: &[f64]) -> (f64, Vec<f64>) {
        let c = r_hat.powi(3 - self.n as i32);
        let (u, du) = self.u.gradient(x);
        let r = r_hat + c * u;
        (r.ln(), du.into_iter().map(|v| c * v / r).collect())
    }

    /// `H − (n − 1)` for the graph `r = r̂ + r̂^{3−n}u` at the torus point `x`.
    ///
    /// With `t = ln r` the metric is `dt² + e^{2t}P`, `P = I + e^{−nt}Q`,
    /// and for `Φ = t − T(x)` the mean curvature is the divergence of
    /// `∇Φ/|∇Φ|`. Its `t` and `x` flux components are differenced in the
    /// form `Z − 1`, `Y` that vanish for the reference slice, so the
    /// differencing error is relative to the `O(r̂⁻ⁿ)` deviation.
    pub fn graph_mean_curvature_deviation(&self, r_hat: f64, x: &[f64]) -> Result<f64> {
        let m = self.torus.dimension();
        let mf = m as f64;
        let (t0, dt0) = self.graph(r_hat, x);
        let dt0v = nalgebra::DVector::from_column_slice(&dt0);
        let w_at = |t: f64, pinv: &DMatrix<f64>, dt: &nalgebra::DVector<f64>| {
            (-2.0 * t).exp() * (dt.transpose() * pinv * dt)[(0, 0)]
        };
        let z_minus_one = |h: f64| -> Result<f64> {
            let t = t0 + h;
            let (hld, pinv) = self.metric_at(t, x)?;
            Ok((hld - 0.5 * w_at(t, &pinv, &dt0v).ln_1p()).exp_m1())
        };
        let y = |i: usize, xs: &[f64]| -> Result<f64> {
            let (hld, pinv) = self.metric_at(t0, xs)?;
            let (_, dt) = self.graph(r_hat, xs);
            let dt = nalgebra::DVector::from_column_slice(&dt);
            let w = w_at(t0, &pinv, &dt);
            Ok(hld.exp() * (&pinv * &dt)[i] / (1.0 + w).sqrt())
        };
        let dz = richardson(z_minus_one, FD_STEP)?;
        let hx = FD_STEP
            * self
                .torus
                .basis()
                .iter()
                .map(|b| b.iter().map(|v| v * v).sum::<f64>().sqrt())
                .fold(f64::INFINITY, f64::min);
        let mut div_y = 0.0;
        for i in 0..m {
            div_y += richardson(
                |h| {
                    let mut xs = x.to_vec();
                    xs[i] += h;
                    y(i, &xs)
                },
                hx,
            )?;
        }
        let (hld, pinv) = self.metric_at(t0, x)?;
        let w0 = w_at(t0, &pinv, &dt0v);
        let sq = (1.0 + w0).sqrt();
        Ok(-mf * w0 / (sq * (1.0 + sq)) + (dz - (-2.0 * t0).exp() * div_y) / hld.exp())
    }

    /// `r̂ⁿ sup|H − (n−1) − μr̂⁻ⁿ|` over the grid.
    pub fn mean_curvature_residual(&self, r_hat: f64, per_dim: usize) -> Result<MeanCurvatureSample> {
        if !(r_hat > 0.0) || !r_hat.is_finite() {
            return Err(Error::Domain(format!("r̂ must be positive, got {r_hat}")));
        }
        let nf = self.n as f64;
        let scale = r_hat.powf(nf);
        let (mut lo, mut hi, mut worst) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
        for x in torus_grid(&self.torus, per_dim) {
            let (t, _) = self.graph(r_hat, &x);
            if !t.is_finite() {
                return Err(Error::Range(format!("graph leaves r > 0 at r̂ = {r_hat}")));
            }
            let d = scale * self.graph_mean_curvature_deviation(r_hat, &x)?;
            lo = lo.min(d);
            hi = hi.max(d);
            worst = worst.max((d - self.mu).abs());
        }
        Ok(MeanCurvatureSample {
            r_hat,
            scaled_residual: worst,
            scaled_h_min: lo,
            scaled_h_max: hi,
        })
    }

    pub fn mean_curvature_sweep(&self, radii: &[f64], per_dim: usize) -> Result<Vec<MeanCurvatureSample>> {
        radii
            .iter()
            .map(|&r| self.mean_curvature_residual(r, per_dim))
            .collect()
    }
}

/// `H − (n − 1)` of the slice `r = const` in the exact Horowitz–Myers
/// metric `dr²/(r²f) + r²f dξ² + r²Σdθᵢ²`, `f = 1 − (r₀/r)ⁿ`, from the
/// first variation `H = r√f ∂_r ln(r^{n−1}√f)` with the `½ ln f` part
/// differenced.
pub fn hm_slice_mean_curvature_deviation(n: u32, r0: f64, r: f64) -> Result<f64> {
    let nf = n as f64;
    let x = (r0 / r).powf(nf);
    if !(x < 1.0) {
        return Err(Error::Range(format!("r = {r} lies inside the tip r0 = {r0}")));
    }
    let sf = (1.0 - x).sqrt();
    let half_log_f = |h: f64| -> Result<f64> {
        let xr = (r0 / (r + h)).powf(nf);
        if !(xr < 1.0) {
            return Err(Error::Range(format!("difference stencil reaches the tip at r = {r}")));
        }
        Ok(0.5 * (-xr).ln_1p())
    };
    let d = richardson(half_log_f, FD_STEP * r)?;
    Ok(-(nf - 1.0) * x / (1.0 + sf) + r * sf * d)
}

/// Residual of the exact Horowitz–Myers slice against `μ = r₀ⁿ/2`.
pub fn hm_slice_residual(n: u32, r0: f64, r_hat: f64) -> Result<MeanCurvatureSample> {
    let nf = n as f64;
    let scale = r_hat.powf(nf);
    let d = scale * hm_slice_mean_curvature_deviation(n, r0, r_hat)?;
    let mu = 0.5 * r0.powf(nf);
    Ok(MeanCurvatureSample {
        r_hat,
        scaled_residual: (d - mu).abs(),
        scaled_h_min: d,
        scaled_h_max: d,
    })
}

pub fn write_sweep_csv(samples: &[MeanCurvatureSample], w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["r_hat", "scaled_residual", "scaled_h_min", "scaled_h_max"])?;
    for s in samples {
        out.write_record([s.r_hat, s.scaled_residual, s.scaled_h_min, s.scaled_h_max].map(|v| format!("{v:.17e}")))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_sweep_csv_file(samples: &[MeanCurvatureSample], path: impl AsRef<Path>) -> Result<()> {
    write_sweep_csv(samples, std::fs::File::create(path)?)
}

/// Bookkeeping of the contradiction argument when the mass is negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContradictionAudit {
    /// Largest ε with `∫(n tr Q + (1−ε)^{−n−1}(4π/(nσ))ⁿ) ≤ 0`.
    pub epsilon_max: f64,
    /// The ε used below, half of `epsilon_max`.
    pub epsilon: f64,
    /// `2(1−ε)^{n+1}σⁿμ`, at least `(4π/n)ⁿ`.
    pub mu_bound_lhs: f64,
    pub mu_bound_rhs: f64,
    /// Radius beyond which the boundary satisfies both
    /// `H ≥ (n−1) + (1−ε)r̂⁻ⁿμ` and `σ̂/r̂ > (1−ε)σ`, contradicting the
    /// systolic inequality.
    pub r_hat_critical: f64,
    /// Lower bound for `σ̂/(r̂σ)` at the critical radius.
    pub systole_ratio_bound: f64,
    /// `min r̂ⁿ(H − (n−1)) − (1−ε)μ` at the critical radius.
    pub mean_curvature_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem3Report {
    pub n: u32,
    pub sigma: f64,
    pub witness: Vec<i64>,
    pub volume: f64,
    pub mean_trace: f64,
    pub mu: f64,
    pub mass: f64,
    pub divergence_defect: f64,
    pub pde_residual: f64,
    /// Mass integral nonnegative within the tolerance.
    pub holds: bool,
    pub contradiction: Option<ContradictionAudit>,
}

impl AsymptoticProblem {
    /// Lower bound for `σ̂/(r̂σ)` from `φ*ĝ ≥ r²(1 − r⁻ⁿq₋)γ` with
    /// `r ≥ r̂ + r̂^{3−n} min u` and `q₋` the largest negative eigenvalue
    /// magnitude of `Q`.
    fn systole_ratio_bound(&self, r_hat: f64, u_min: f64, q_neg: f64) -> f64 {
        let r_min = r_hat + r_hat.powi(3 - self.n as i32) * u_min;
        if r_min <= 0.0 {
            return 0.0;
        }
        let shrink = 1.0 - r_min.powi(-(self.n as i32)) * q_neg;
        if shrink <= 0.0 {
            return 0.0;
        }
        r_min / r_hat * shrink.sqrt()
    }

    fn mean_curvature_margin(&self, r_hat: f64, epsilon: f64, per_dim: usize) -> Result<f64> {
        let s = self.mean_curvature_residual(r_hat, per_dim)?;
        Ok(s.scaled_h_min - (1.0 - epsilon) * self.mu)
    }
}

/// Audits the mass inequality on the given end.
pub fn theorem3_report(problem: &AsymptoticProblem, tolerance: f64) -> Result<Theorem3Report> {
    let n = problem.n;
    let nf = n as f64;
    let sys = constrained_systole(&problem.torus);
    let sigma = sys.sigma;
    let mass = problem.mass_integral(sigma)?;
    let grid = problem.default_grid();
    let volume = problem.torus.volume();
    let c = (4.0 * PI / (nf * sigma)).powf(nf);
    let contradiction = if mass < -tolerance {
        // −n mean tr Q = 2μ, so (1−ε)^{−n−1} c ≤ 2μ.
        let epsilon_max = 1.0 - (c / (2.0 * problem.mu)).powf(1.0 / (nf + 1.0));
        let epsilon = 0.5 * epsilon_max;
        let pts = torus_grid(&problem.torus, grid);
        let u_min = pts.iter().map(|x| problem.u.value(x)).fold(f64::INFINITY, f64::min);
        let q_neg = pts
            .iter()
            .map(|x| {
                let q = problem.q.value(x);
                let m = q.len();
                let e = DMatrix::from_fn(m, m, |i, j| q[i][j]).symmetric_eigenvalues();
                (-e.min()).max(0.0)
            })
            .fold(0.0, f64::max);
        let ok = |r: f64| -> bool {
            problem.systole_ratio_bound(r, u_min, q_neg) > 1.0 - epsilon
                && problem
                    .mean_curvature_margin(r, epsilon, grid)
                    .is_ok_and(|v| v >= 0.0)
        };
        let mut hi = 2.0;
        while !ok(hi) {
            hi *= 2.0;
            if hi > 1e12 {
                return Err(Error::numerical("no contradiction radius below 1e12", hi));
            }
        }
        let mut lo = 0.5 * hi;
        if !ok(lo) {
            for _ in 0..40 {
                let mid = 0.5 * (lo + hi);
                if ok(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
        }
        Some(ContradictionAudit {
            epsilon_max,
            epsilon,
            mu_bound_lhs: 2.0 * (1.0 - epsilon).powf(nf + 1.0) * sigma.powf(nf) * problem.mu,
            mu_bound_rhs: (4.0 * PI / nf).powf(nf),
            r_hat_critical: hi,
            systole_ratio_bound: problem.systole_ratio_bound(hi, u_min, q_neg),
            mean_curvature_margin: problem.mean_curvature_margin(hi, epsilon, grid)?,
        })
    } else {
        None
    };
    Ok(Theorem3Report {
        n,
        sigma,
        witness: sys.witness,
        volume,
        mean_trace: problem.q.trace().mean(),
        mu: problem.mu,
        mass,
        divergence_defect: problem.divergence_defect(grid),
        pde_residual: problem.pde_residual(grid),
        holds: mass >= -tolerance,
        contradiction,
    })
}
