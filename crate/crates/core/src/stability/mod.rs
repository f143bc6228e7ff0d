//! Weighted free-boundary geodesics across annuli, their stability operator,
//! and the boundary bound `min{−w'(0), w'(l)} ≤ n − 1` for
//! `w = ψ∘γ + log v`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{DormandPrince, OdeOptions};
use crate::surfaces::Surface;

mod chart;
mod interp;

use chart::{chart_of, Chart, Local, V2};
use interp::Uniform;

const GL5: [(f64, f64); 5] = [
    (0.0, 128.0 / 225.0),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

fn gl5(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
    GL5.iter().map(|&(x, w)| w * r * f(m + r * x)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodesicOptions {
    /// Number of intervals of the final curve.
    pub samples: usize,
    /// Allowed `|H + ⟨∇ψ, ν⟩|` at interior samples.
    pub tolerance: f64,
    /// Newton iteration budget per refinement level.
    pub max_iterations: u64,
}

impl Default for GeodesicOptions {
    fn default() -> Self {
        GeodesicOptions {
            samples: 256,
            tolerance: 1e-6,
            max_iterations: 200,
        }
    }
}

/// A weighted free-boundary geodesic sampled at uniform arclength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedGeodesic {
    pub n: u32,
    /// Length `l` in the metric `g`.
    pub length: f64,
    /// `∫ e^ψ ds`.
    pub weighted_length: f64,
    pub s: Vec<f64>,
    /// Chart coordinates of the samples.
    pub points: Vec<[f64; 2]>,
    /// Unit tangent in chart coordinates.
    pub tangent: Vec<[f64; 2]>,
    /// Unit normal in chart coordinates.
    pub normal: Vec<[f64; 2]>,
    /// Geodesic curvature `H = −⟨∇_{γ'}γ', ν⟩`.
    pub curvature: Vec<f64>,
    pub psi: Vec<f64>,
    /// `⟨∇ψ, γ'⟩`.
    pub psi_tangential: Vec<f64>,
    /// `⟨∇ψ, ν⟩`.
    pub psi_normal: Vec<f64>,
    /// `(D²ψ)(γ', γ')`.
    pub hessian_tangential: Vec<f64>,
    /// `(D²ψ)(ν, ν)`.
    pub hessian_normal: Vec<f64>,
    pub gauss_curvature: Vec<f64>,
    /// Boundary geodesic curvature at `γ(0)` and `γ(l)`.
    pub kappa: [f64; 2],
    /// Outward normal derivative of the weight at `γ(0)` and `γ(l)`.
    pub boundary_normal_derivative: [f64; 2],
    /// Boundary parameters of the endpoints.
    pub boundary_params: [f64; 2],
    /// `max |H + ⟨∇ψ, ν⟩|` over interior samples.
    pub criticality: f64,
    /// `|cos∠(γ', ∂Σ)|` at both ends.
    pub orthogonality: [f64; 2],
    /// `max ||γ'| − 1|`.
    pub speed_defect: f64,
}

impl WeightedGeodesic {
    fn field(&self, values: &[f64]) -> Uniform {
        Uniform::new(0.0, self.length / (self.s.len() - 1) as f64, values.to_vec())
    }

    /// `e^ψ` and the potential `q = −K − H² + (D²ψ)(ν, ν)`.
    fn coefficients(&self) -> (Uniform, Uniform) {
        let p: Vec<f64> = self.psi.iter().map(|x| x.exp()).collect();
        let q: Vec<f64> = (0..self.s.len())
            .map(|i| -self.gauss_curvature[i] - self.curvature[i].powi(2) + self.hessian_normal[i])
            .collect();
        (self.field(&p), self.field(&q))
    }
}

struct Energy<'a> {
    chart: &'a dyn Chart,
    segments: usize,
}

fn unpack(param: &[f64], chart: &dyn Chart, segments: usize) -> Vec<V2> {
    let mut pts = Vec::with_capacity(segments + 1);
    pts.push(chart.boundary(0, param[0]).x);
    for k in 1..segments {
        pts.push([param[2 * k], param[2 * k + 1]]);
    }
    pts.push(chart.boundary(1, param[1]).x);
    pts
}

impl Energy<'_> {
    /// `N·Σ e^{2ψ(m)} Δᵀ g(m) Δ` over the segments, `m` the midpoint.
    fn terms(&self, param: &[f64], with_gradient: bool) -> Result<(f64, Vec<f64>)> {
        let n = self.segments;
        let pts = unpack(param, self.chart, n);
        let mut energy = 0.0;
        let mut grad_pts = vec![[0.0; 2]; n + 1];
        for j in 0..n {
            let (a, b) = (pts[j], pts[j + 1]);
            let m = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
            let d = [b[0] - a[0], b[1] - a[1]];
            let loc = self.chart.local(m)?;
            let w = (2.0 * loc.psi).exp() * n as f64;
            let dd = loc.inner(d, d);
            energy += w * dd;
            if with_gradient {
                let gd = [
                    loc.g[0][0] * d[0] + loc.g[0][1] * d[1],
                    loc.g[1][0] * d[0] + loc.g[1][1] * d[1],
                ];
                for k in 0..2 {
                    let dmid = 2.0 * loc.dpsi[k] * dd
                        + (0..2)
                            .flat_map(|i| (0..2).map(move |l| (i, l)))
                            .map(|(i, l)| loc.dg[k][i][l] * d[i] * d[l])
                            .sum::<f64>();
                    grad_pts[j][k] += w * (-2.0 * gd[k] + 0.5 * dmid);
                    grad_pts[j + 1][k] += w * (2.0 * gd[k] + 0.5 * dmid);
                }
            }
        }
        let mut grad = vec![0.0; param.len()];
        if with_gradient {
            let b0 = self.chart.boundary(0, param[0]).dx;
            let b1 = self.chart.boundary(1, param[1]).dx;
            grad[0] = grad_pts[0][0] * b0[0] + grad_pts[0][1] * b0[1];
            grad[1] = grad_pts[n][0] * b1[0] + grad_pts[n][1] * b1[1];
            for k in 1..n {
                grad[2 * k] = grad_pts[k][0];
                grad[2 * k + 1] = grad_pts[k][1];
            }
        }
        Ok((energy, grad))
    }
}

fn pack(pts: &[V2], t: [f64; 2]) -> Vec<f64> {
    let n = pts.len() - 1;
    let mut p = vec![0.0; 2 * n];
    p[0] = t[0];
    p[1] = t[1];
    for k in 1..n {
        p[2 * k] = pts[k][0];
        p[2 * k + 1] = pts[k][1];
    }
    p
}

/// Resamples a polyline to `segments` pieces of equal chord length.
fn resample_polyline(seed: &[V2], segments: usize) -> Vec<V2> {
    let mut acc = vec![0.0];
    for w in seed.windows(2) {
        acc.push(acc.last().unwrap() + (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]));
    }
    let total = *acc.last().unwrap();
    (0..=segments)
        .map(|k| {
            let t = total * k as f64 / segments as f64;
            let i = acc.partition_point(|&a| a <= t).clamp(1, acc.len() - 1) - 1;
            let w = if acc[i + 1] > acc[i] { (t - acc[i]) / (acc[i + 1] - acc[i]) } else { 0.0 };
            [
                seed[i][0] + w * (seed[i + 1][0] - seed[i][0]),
                seed[i][1] + w * (seed[i + 1][1] - seed[i][1]),
            ]
        })
        .collect()
}

/// Doubles the number of segments with four-point midpoint insertion.
fn refine(pts: &[V2]) -> Vec<V2> {
    let n = pts.len() - 1;
    let mut out = Vec::with_capacity(2 * n + 1);
    for j in 0..n {
        out.push(pts[j]);
        let mid = if j == 0 || j + 1 == n {
            [0.5 * (pts[j][0] + pts[j + 1][0]), 0.5 * (pts[j][1] + pts[j + 1][1])]
        } else {
            let c = |k: usize| {
                (-pts[j - 1][k] + 9.0 * pts[j][k] + 9.0 * pts[j + 1][k] - pts[j + 2][k]) / 16.0
            };
            [c(0), c(1)]
        };
        out.push(mid);
    }
    out.push(pts[n]);
    out
}

fn point_of_var(i: usize, segments: usize) -> usize {
    match i {
        0 => 0,
        1 => segments,
        _ => i / 2,
    }
}

fn var_of(k: usize, d: usize, segments: usize) -> Option<usize> {
    if k == 0 || k == segments {
        (d == 0).then_some(if k == 0 { 0 } else { 1 })
    } else {
        Some(2 * k + d)
    }
}

/// Hessian of the energy by central differences of the gradient; points
/// three apart do not interact, so one perturbation per colour class and
/// coordinate recovers every entry.
fn fd_hessian(problem: &Energy, param: &[f64]) -> Result<DMatrix<f64>> {
    let n = problem.segments;
    let nvar = param.len();
    let mut hess = DMatrix::zeros(nvar, nvar);
    for color in 0..3 {
        for d in 0..2 {
            let vars: Vec<(usize, usize)> = (color..=n)
                .step_by(3)
                .filter_map(|k| var_of(k, d, n).map(|v| (k, v)))
                .collect();
            if vars.is_empty() {
                continue;
            }
            let steps: Vec<f64> = vars.iter().map(|&(_, v)| 1e-6 * param[v].abs().max(1.0)).collect();
            let mut plus = param.to_vec();
            let mut minus = param.to_vec();
            for (&(_, v), &h) in vars.iter().zip(&steps) {
                plus[v] += h;
                minus[v] -= h;
            }
            let gp = problem.terms(&plus, true)?.1;
            let gm = problem.terms(&minus, true)?.1;
            for (&(k, v), &h) in vars.iter().zip(&steps) {
                for row in 0..nvar {
                    let kr = point_of_var(row, n);
                    if kr + 1 >= k && kr <= k + 1 {
                        hess[(row, v)] = (gp[row] - gm[row]) / (2.0 * h);
                    }
                }
            }
        }
    }
    Ok(0.5 * (&hess + hess.transpose()))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Damped Newton iteration on the discrete energy.
fn minimize(chart: &dyn Chart, pts: &[V2], t: [f64; 2], max_iterations: u64) -> Result<(Vec<V2>, [f64; 2])> {
    let segments = pts.len() - 1;
    let problem = Energy { chart, segments };
    let mut param = pack(pts, t);
    let (mut energy, mut grad) = problem.terms(&param, true)?;
    let scale = param.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let mut mu = 0.0;
    for _ in 0..max_iterations {
        let hess = fd_hessian(&problem, &param)?;
        let diag = (0..hess.nrows()).fold(0.0f64, |m, i| m.max(hess[(i, i)].abs()));
        if mu == 0.0 {
            mu = 1e-8 * diag;
        }
        let rhs = DVector::from_iterator(grad.len(), grad.iter().map(|g| -g));
        let mut accepted = false;
        let mut step_size = 0.0;
        while mu <= 1e12 * diag {
            let damped = &hess + DMatrix::identity(hess.nrows(), hess.ncols()) * mu;
            let Some(chol) = damped.cholesky() else {
                mu *= 10.0;
                continue;
            };
            let step = chol.solve(&rhs);
            let trial: Vec<f64> = param.iter().zip(step.iter()).map(|(p, d)| p + d).collect();
            match problem.terms(&trial, true) {
                Ok((e, g)) if e.is_finite() => {
                    let flat = (e - energy).abs() <= 1e-13 * energy.abs();
                    if e < energy - 1e-15 * energy.abs() || (flat && norm(&g) < norm(&grad)) {
                        step_size = step.amax();
                        param = trial;
                        energy = e;
                        grad = g;
                        mu = (mu / 4.0).max(1e-14 * diag);
                        accepted = true;
                        break;
                    }
                    mu *= 10.0;
                }
                _ => mu *= 10.0,
            }
        }
        if !accepted || step_size < 1e-13 * scale {
            break;
        }
    }
    let t = [param[0], param[1]];
    Ok((unpack(&param, chart, segments), t))
}

fn speed(loc: &Local, d: V2) -> f64 {
    loc.inner(d, d).sqrt()
}

/// Finds a local minimizer of `∫ e^ψ` among curves joining the inner to
/// the outer boundary, starting from `seed` (chart coordinates).
pub fn find_free_boundary_geodesic(
    surface: &Surface,
    seed: &[[f64; 2]],
    opts: GeodesicOptions,
) -> Result<WeightedGeodesic> {
    let chart = chart_of(surface)?;
    let chart = chart.as_ref();
    if seed.len() < 2 {
        return Err(Error::Domain("seed polyline needs at least two points".into()));
    }
    if opts.samples < 16 || !opts.samples.is_power_of_two() {
        return Err(Error::Domain("sample count must be a power of two ≥ 16".into()));
    }
    let mut t = [chart.project(0, seed[0]), chart.project(1, *seed.last().unwrap())];
    let mut pts = resample_polyline(seed, 16);
    pts[0] = chart.boundary(0, t[0]).x;
    *pts.last_mut().unwrap() = chart.boundary(1, t[1]).x;
    loop {
        pts = reparametrize(chart, &pts, t, true)?.0;
        let (p, tt) = minimize(chart, &pts, t, opts.max_iterations)?;
        pts = p;
        t = tt;
        if pts.len() - 1 >= opts.samples {
            break;
        }
        pts = refine(&pts);
    }
    analyse(surface.n(), chart, &pts, t, opts)
}

/// Reparametrizes the minimizer by arclength and evaluates the geometry
/// along it.
fn analyse(n: u32, chart: &dyn Chart, pts: &[V2], t: [f64; 2], opts: GeodesicOptions) -> Result<WeightedGeodesic> {
    // each pass starts closer to uniform spacing, so the interpolation
    // error shrinks until the samples stop moving
    let (mut cur, mut length) = reparametrize(chart, pts, t, false)?;
    for _ in 0..6 {
        let (next, len) = reparametrize(chart, &cur, t, false)?;
        let moved = cur
            .iter()
            .zip(&next)
            .fold(0.0f64, |m, (a, b)| m.max((a[0] - b[0]).abs()).max((a[1] - b[1]).abs()));
        cur = next;
        length = len;
        if moved < 1e-14 * length.max(1.0) {
            break;
        }
    }
    evaluate(n, chart, cur, length, t, opts)
}

/// Resamples the curve at uniform arclength, or uniform weighted arclength
/// as the energy minimizer is parametrized; returns the samples and the
/// total length.
fn reparametrize(chart: &dyn Chart, pts: &[V2], t: [f64; 2], weighted: bool) -> Result<(Vec<V2>, f64)> {
    let segs = pts.len() - 1;
    let hu = 1.0 / segs as f64;
    let xs = Uniform::new(0.0, hu, pts.iter().map(|p| p[0]).collect());
    let ys = Uniform::new(0.0, hu, pts.iter().map(|p| p[1]).collect());
    let sigma = |u: f64| -> Result<f64> {
        let (x, y) = (xs.eval(u), ys.eval(u));
        let loc = chart.local([x[0], y[0]])?;
        let w = if weighted { loc.psi.exp() } else { 1.0 };
        Ok(w * speed(&loc, [x[1], y[1]]))
    };
    let mut cum = vec![0.0];
    for k in 0..segs {
        let (a, b) = (k as f64 * hu, (k + 1) as f64 * hu);
        let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
        let mut part = 0.0;
        for &(x, w) in &GL5 {
            part += w * r * sigma(m + r * x)?;
        }
        cum.push(cum[k] + part);
    }
    let length = cum[segs];
    let h = length / segs as f64;
    let mut new_pts = Vec::with_capacity(segs + 1);
    for j in 0..=segs {
        let target = h * j as f64;
        let k = cum.partition_point(|&c| c <= target).clamp(1, segs) - 1;
        let mut u = k as f64 * hu + hu * (target - cum[k]) / (cum[k + 1] - cum[k]);
        for _ in 0..30 {
            let base = k as f64 * hu;
            let (m, r) = (0.5 * (base + u), 0.5 * (u - base));
            let mut val = cum[k] - target;
            for &(x, w) in &GL5 {
                val += w * r * sigma(m + r * x)?;
            }
            let step = val / sigma(u)?;
            u -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let u = u.clamp(0.0, 1.0);
        new_pts.push([xs.eval(u)[0], ys.eval(u)[0]]);
    }
    new_pts[0] = chart.boundary(0, t[0]).x;
    new_pts[segs] = chart.boundary(1, t[1]).x;
    Ok((new_pts, length))
}

fn evaluate(
    n: u32,
    chart: &dyn Chart,
    new_pts: Vec<V2>,
    length: f64,
    t: [f64; 2],
    opts: GeodesicOptions,
) -> Result<WeightedGeodesic> {
    let segs = new_pts.len() - 1;
    let h = length / segs as f64;
    let xs = Uniform::new(0.0, h, new_pts.iter().map(|p| p[0]).collect());
    let ys = Uniform::new(0.0, h, new_pts.iter().map(|p| p[1]).collect());
    let mut g = WeightedGeodesic {
        n,
        length,
        weighted_length: 0.0,
        s: (0..=segs).map(|j| h * j as f64).collect(),
        points: new_pts.clone(),
        tangent: Vec::new(),
        normal: Vec::new(),
        curvature: Vec::new(),
        psi: Vec::new(),
        psi_tangential: Vec::new(),
        psi_normal: Vec::new(),
        hessian_tangential: Vec::new(),
        hessian_normal: Vec::new(),
        gauss_curvature: Vec::new(),
        kappa: [0.0; 2],
        boundary_normal_derivative: [0.0; 2],
        boundary_params: t,
        criticality: 0.0,
        orthogonality: [0.0; 2],
        speed_defect: 0.0,
    };
    for (j, &p) in new_pts.iter().enumerate() {
        let (x, y) = (xs.eval_node(j), ys.eval_node(j));
        let loc = chart.local(p)?;
        let d1 = [x[1], y[1]];
        let gam = loc.christoffel();
        let mut acc = [x[2], y[2]];
        for k in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    acc[k] += gam[k][a][b] * d1[a] * d1[b];
                }
            }
        }
        let sp = speed(&loc, d1);
        let gi = loc.inverse();
        let omega = [-d1[1], d1[0]];
        let mut nu = [
            gi[0][0] * omega[0] + gi[0][1] * omega[1],
            gi[1][0] * omega[0] + gi[1][1] * omega[1],
        ];
        let nn = speed(&loc, nu);
        nu = [nu[0] / nn, nu[1] / nn];
        let tan = [d1[0] / sp, d1[1] / sp];
        let curv = -loc.inner(acc, nu) / (sp * sp);
        let psi_nu = loc.dpsi[0] * nu[0] + loc.dpsi[1] * nu[1];
        g.speed_defect = g.speed_defect.max((sp - 1.0).abs());
        g.tangent.push(tan);
        g.normal.push(nu);
        g.curvature.push(curv);
        g.psi.push(loc.psi);
        g.psi_tangential.push(loc.dpsi[0] * tan[0] + loc.dpsi[1] * tan[1]);
        g.psi_normal.push(psi_nu);
        g.hessian_tangential.push(loc.hessian(tan, tan));
        g.hessian_normal.push(loc.hessian(nu, nu));
        g.gauss_curvature.push(loc.k);
        if j > 0 && j < segs {
            g.criticality = g.criticality.max((curv + psi_nu).abs());
        }
        if j == 0 || j == segs {
            let side = (j == segs) as usize;
            let b = chart.boundary(side, t[side]);
            g.kappa[side] = b.kappa;
            g.boundary_normal_derivative[side] = b.normal_derivative;
            g.orthogonality[side] = (loc.inner(tan, b.dx) / speed(&loc, b.dx)).abs();
        }
    }
    let weights: Vec<f64> = g.psi.iter().map(|x| x.exp()).collect();
    g.weighted_length = (0..segs / 2)
        .map(|k| h / 3.0 * (weights[2 * k] + 4.0 * weights[2 * k + 1] + weights[2 * k + 2]))
        .sum();
    let orth = g.orthogonality[0].max(g.orthogonality[1]);
    if g.criticality > opts.tolerance || orth > opts.tolerance.sqrt() {
        return Err(Error::numerical(
            format!(
                "geodesic not critical: |H + ∂νψ| = {:.3e}, endpoint cosine {:.3e}",
                g.criticality, orth
            ),
            g.criticality.max(orth),
        ));
    }
    Ok(g)
}

/// A straight seed from the inner to the outer boundary: for warped annuli
/// the radial segment at the minimum of the angular weight, for meshes the
/// segment from the first inner boundary vertex to the nearest outer one.
pub fn default_seed(surface: &Surface) -> Result<Vec<[f64; 2]>> {
    match surface {
        Surface::Warped(w) => {
            chart_of(surface)?;
            let xi = (0..720)
                .map(|k| w.period() * k as f64 / 720.0)
                .min_by(|a, b| w.psi_angular(*a)[0].total_cmp(&w.psi_angular(*b)[0]))
                .unwrap();
            Ok(vec![[w.s_lo(), xi], [w.l(), xi]])
        }
        Surface::Conformal(c) => {
            let chart = chart::MeshChart::new(c)?;
            let start = chart.boundary(0, 0.0).x;
            let t1 = chart.project(1, start);
            Ok(vec![start, chart.boundary(1, t1).x])
        }
    }
}

/// First eigenpair of the stability operator with `w = ψ∘γ + log v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub n: u32,
    /// Smallest eigenvalue `λ`.
    pub eigenvalue: f64,
    /// The finite-element value used to start the shooting refinement.
    pub fe_eigenvalue: f64,
    pub s: Vec<f64>,
    /// Eigenfunction with `max v = 1`.
    pub v: Vec<f64>,
    pub dv: Vec<f64>,
    pub w: Vec<f64>,
    pub dw: Vec<f64>,
    /// `−w'' − n/(2(n−1))·w'² + n(n−1)/2`.
    pub riccati: Vec<f64>,
    pub min_riccati: f64,
    /// `[w'(0), w'(l)]`.
    pub w_prime: [f64; 2],
    /// `[−v'(0) − κ₀v(0), v'(l) − κ_l v(l)]`.
    pub boundary_residual: [f64; 2],
    /// `[w'(0) − ⟨∇ψ,γ'(0)⟩ + κ₀, w'(l) − ⟨∇ψ,γ'(l)⟩ − κ_l]`.
    pub endpoint_identity: [f64; 2],
    /// `min{−w'(0), w'(l)}`.
    pub endpoint_min: f64,
    /// Whether `−w'(0) > n−1` implies `w'(l) < −(n−1)` on this run.
    pub comparison_holds: bool,
}

impl StabilityReport {
    /// `(v, v')` at arclength `s`.
    pub fn eigenfunction(&self, s: f64) -> (f64, f64) {
        let h = self.s[1] - self.s[0];
        let v = Uniform::new(0.0, h, self.v.clone()).eval(s)[0];
        let dv = Uniform::new(0.0, h, self.dv.clone()).eval(s)[0];
        (v, dv)
    }
}

const FE_INTERVALS: usize = 4096;

struct Pencil {
    a: Vec<f64>,
    a_off: Vec<f64>,
    b: Vec<f64>,
    b_off: Vec<f64>,
}

impl Pencil {
    /// Number of eigenvalues below `mu`, by Sylvester inertia of `A − μB`.
    fn count_below(&self, mu: f64) -> usize {
        let mut neg = 0;
        let mut d = 0.0;
        for i in 0..self.a.len() {
            let diag = self.a[i] - mu * self.b[i];
            d = if i == 0 {
                diag
            } else {
                let off = self.a_off[i - 1] - mu * self.b_off[i - 1];
                diag - off * off / d
            };
            if d == 0.0 {
                d = -1e-300;
            }
            if d < 0.0 {
                neg += 1;
            }
        }
        neg
    }
}

fn assemble(geo: &WeightedGeodesic, p: &Uniform, q: &Uniform) -> Pencil {
    let m = FE_INTERVALS;
    let h = geo.length / m as f64;
    let mut pen = Pencil {
        a: vec![0.0; m + 1],
        a_off: vec![0.0; m],
        b: vec![0.0; m + 1],
        b_off: vec![0.0; m],
    };
    let g = 0.5 / 3f64.sqrt();
    for e in 0..m {
        for xi in [0.5 - g, 0.5 + g] {
            let x = h * (e as f64 + xi);
            let (pv, qv) = (p.eval(x)[0], q.eval(x)[0]);
            let (n0, n1) = (1.0 - xi, xi);
            let w = 0.5 * h;
            let stiff = w * pv / (h * h);
            pen.a[e] += stiff + w * pv * qv * n0 * n0;
            pen.a[e + 1] += stiff + w * pv * qv * n1 * n1;
            pen.a_off[e] += -stiff + w * pv * qv * n0 * n1;
            pen.b[e] += w * pv * n0 * n0;
            pen.b[e + 1] += w * pv * n1 * n1;
            pen.b_off[e] += w * pv * n0 * n1;
        }
    }
    pen.a[0] -= p.eval(0.0)[0] * geo.kappa[0];
    pen.a[m] -= p.eval(geo.length)[0] * geo.kappa[1];
    pen
}

fn smallest_eigenvalue(pen: &Pencil) -> f64 {
    let mut lo = -1.0;
    while pen.count_below(lo) > 0 {
        lo = 2.0 * lo - 1.0;
    }
    let mut hi = 1.0;
    while pen.count_below(hi) == 0 {
        hi = 2.0 * hi + 1.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pen.count_below(mid) == 0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Integrates `(p v')' = p(q − λ)v` from `v(0) = 1`, `v'(0) = −κ₀`, returning
/// `(v, p v')` at the samples.
fn shoot(geo: &WeightedGeodesic, p: &Uniform, q: &Uniform, lambda: f64) -> Result<Vec<[f64; 2]>> {
    let rhs = |s: f64, y: &[f64; 2]| {
        let pv = p.eval(s)[0];
        [y[1] / pv, pv * (q.eval(s)[0] - lambda) * y[0]]
    };
    let opts = OdeOptions {
        rel_tol: 1e-12,
        abs_tol: 1e-14,
        initial_step: geo.length * 1e-4,
        max_steps: 2_000_000,
    };
    let mut dp = DormandPrince::new(rhs, opts);
    let mut y = [1.0, -p.eval(0.0)[0] * geo.kappa[0]];
    let mut out = vec![y];
    for w in geo.s.windows(2) {
        y = dp.advance(w[0], y, w[1])?;
        out.push(y);
    }
    Ok(out)
}

/// Smallest eigenvalue and positive eigenfunction of
/// `−v'' − ⟨∇ψ,γ'⟩v' + (−K − H² + (D²ψ)(ν,ν))v = λv` with
/// `−v'(0) = κ(γ(0))v(0)` and `v'(l) = κ(γ(l))v(l)`.
pub fn stability_spectrum(geo: &WeightedGeodesic, n: u32) -> Result<StabilityReport> {
    if n < 3 {
        return Err(Error::Domain(format!("dimension must be at least 3, got {n}")));
    }
    let (p, q) = geo.coefficients();
    let pen = assemble(geo, &p, &q);
    let fe = smallest_eigenvalue(&pen);
    let pl = p.eval(geo.length)[0];
    let mismatch = |lam: f64| -> Result<(f64, Vec<[f64; 2]>)> {
        let sol = shoot(geo, &p, &q, lam)?;
        let end = *sol.last().unwrap();
        let scale = end[0].abs() + end[1].abs();
        Ok(((end[1] - pl * geo.kappa[1] * end[0]) / scale, sol))
    };
    let (mut l0, mut l1) = (fe, fe + 1e-7 * fe.abs().max(1.0));
    let (mut m0, mut sol) = mismatch(l0)?;
    let mut best = (m0.abs(), l0, sol.clone());
    for _ in 0..60 {
        let (m1, s1) = mismatch(l1)?;
        if m1.abs() < best.0 {
            best = (m1.abs(), l1, s1.clone());
        }
        if m1 == m0 || (l1 - l0).abs() < 1e-15 * l1.abs().max(1.0) {
            break;
        }
        let next = l1 - m1 * (l1 - l0) / (m1 - m0);
        (l0, m0) = (l1, m1);
        l1 = next;
        sol = s1;
        let _ = &sol;
    }
    let (_, lambda, sol) = best;
    if (lambda - fe).abs() > 1e-3 * fe.abs().max(1.0) {
        return Err(Error::numerical(
            format!("shooting refinement left the finite-element eigenvalue {fe}"),
            lambda - fe,
        ));
    }
    let vmax = sol.iter().map(|y| y[0]).fold(f64::NEG_INFINITY, f64::max);
    let v: Vec<f64> = sol.iter().map(|y| y[0] / vmax).collect();
    let dv: Vec<f64> = sol
        .iter()
        .enumerate()
        .map(|(i, y)| y[1] / (vmax * p.eval(geo.s[i])[0]))
        .collect();
    if let Some(i) = v.iter().position(|&x| !(x > 0.0)) {
        return Err(Error::numerical(
            format!("eigenfunction not positive at s = {}", geo.s[i]),
            v[i],
        ));
    }
    let nf = n as f64;
    let (a, b) = (nf / (2.0 * (nf - 1.0)), nf * (nf - 1.0) / 2.0);
    let mut w = Vec::with_capacity(v.len());
    let mut dw = Vec::with_capacity(v.len());
    let mut riccati = Vec::with_capacity(v.len());
    for i in 0..v.len() {
        let r = dv[i] / v[i];
        let ps = geo.psi_tangential[i];
        let pss = geo.hessian_tangential[i] - geo.curvature[i] * geo.psi_normal[i];
        let qi = q.values()[i];
        w.push(geo.psi[i] + v[i].ln());
        dw.push(ps + r);
        riccati.push(-pss + ps * r - qi + lambda + r * r - a * (ps + r).powi(2) + b);
    }
    let last = v.len() - 1;
    let w_prime = [dw[0], dw[last]];
    let boundary_residual = [-dv[0] - geo.kappa[0] * v[0], dv[last] - geo.kappa[1] * v[last]];
    let endpoint_identity = [
        w_prime[0] - geo.psi_tangential[0] + geo.kappa[0],
        w_prime[1] - geo.psi_tangential[last] - geo.kappa[1],
    ];
    let endpoint_min = (-w_prime[0]).min(w_prime[1]);
    let comparison_holds = !(-w_prime[0] > nf - 1.0) || w_prime[1] < -(nf - 1.0);
    Ok(StabilityReport {
        n,
        eigenvalue: lambda,
        fe_eigenvalue: fe,
        s: geo.s.clone(),
        min_riccati: riccati.iter().copied().fold(f64::INFINITY, f64::min),
        v,
        dv,
        w,
        dw,
        riccati,
        w_prime,
        boundary_residual,
        endpoint_identity,
        endpoint_min,
        comparison_holds,
    })
}

/// `∫ e^ψ (ζ'² + qζ²) − e^{ψ(0)}κ₀ζ(0)² − e^{ψ(l)}κ_lζ(l)²`, with `zeta`
/// returning `(ζ, ζ')`.
pub fn second_variation_form(geo: &WeightedGeodesic, zeta: impl Fn(f64) -> (f64, f64)) -> f64 {
    let (p, q) = geo.coefficients();
    let cells = 4 * (geo.s.len() - 1);
    let h = geo.length / cells as f64;
    let interior: f64 = (0..cells)
        .map(|k| {
            gl5(
                |s| {
                    let (z, dz) = zeta(s);
                    p.eval(s)[0] * (dz * dz + q.eval(s)[0] * z * z)
                },
                k as f64 * h,
                (k + 1) as f64 * h,
            )
        })
        .sum();
    let (z0, zl) = (zeta(0.0).0, zeta(geo.length).0);
    interior - p.eval(0.0)[0] * geo.kappa[0] * z0 * z0 - p.eval(geo.length)[0] * geo.kappa[1] * zl * zl
}

/// `∫ e^ψ ζ²`.
pub fn weighted_norm_sq(geo: &WeightedGeodesic, zeta: impl Fn(f64) -> f64) -> f64 {
    let (p, _) = geo.coefficients();
    let cells = 4 * (geo.s.len() - 1);
    let h = geo.length / cells as f64;
    (0..cells)
        .map(|k| gl5(|s| p.eval(s)[0] * zeta(s).powi(2), k as f64 * h, (k + 1) as f64 * h))
        .sum()
}

/// The boundary bound for an annulus, from its stable geodesic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonDiskReport {
    pub n: u32,
    pub eigenvalue: f64,
    pub w_prime: [f64; 2],
    /// `min{−w'(0), w'(l)}`.
    pub endpoint_min: f64,
    /// `n − 1`.
    pub bound: f64,
    /// `inf (⟨∇ψ,η⟩ + κ)` over the whole boundary.
    pub boundary_inf: f64,
    /// `⟨∇ψ,η⟩ + κ` at the two endpoints of the geodesic.
    pub boundary_at_endpoints: [f64; 2],
    pub min_riccati: f64,
    pub endpoint_identity: [f64; 2],
    pub criticality: f64,
    pub comparison_holds: bool,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn theorem1_nondisk_report(
    surface: &Surface,
    seed: Option<&[[f64; 2]]>,
    opts: GeodesicOptions,
    tolerance: f64,
) -> Result<NonDiskReport> {
    Ok(theorem1_nondisk_analysis(surface, seed, opts, tolerance)?.0)
}

/// The report together with the geodesic and its stability data.
pub fn theorem1_nondisk_analysis(
    surface: &Surface,
    seed: Option<&[[f64; 2]]>,
    opts: GeodesicOptions,
    tolerance: f64,
) -> Result<(NonDiskReport, WeightedGeodesic, StabilityReport)> {
    let n = surface.n();
    let default;
    let seed = match seed {
        Some(s) => s,
        None => {
            default = default_seed(surface)?;
            &default
        }
    };
    let geo = find_free_boundary_geodesic(surface, seed, opts)?;
    let rep = stability_spectrum(&geo, n)?;
    let data = surface.boundary_data();
    let boundary_inf = data.inf_shifted(0.0);
    let bound = n as f64 - 1.0;
    let pass = rep.endpoint_min <= bound + tolerance
        && boundary_inf <= bound + tolerance
        && rep.eigenvalue >= -1e-8
        && rep.min_riccati >= -tolerance;
    let report = NonDiskReport {
        n,
        eigenvalue: rep.eigenvalue,
        w_prime: rep.w_prime,
        endpoint_min: rep.endpoint_min,
        bound,
        boundary_inf,
        boundary_at_endpoints: [
            geo.boundary_normal_derivative[0] + geo.kappa[0],
            geo.boundary_normal_derivative[1] + geo.kappa[1],
        ],
        min_riccati: rep.min_riccati,
        endpoint_identity: rep.endpoint_identity,
        criticality: geo.criticality,
        comparison_holds: rep.comparison_holds,
        tolerance,
        pass,
    };
    Ok((report, geo, rep))
}
