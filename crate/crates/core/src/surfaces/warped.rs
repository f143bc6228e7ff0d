//! Rotationally symmetric weighted surfaces `ds² + φ(s)² dξ²`, `ξ ∈ ℝ/Tℤ`.
//!
//! Profiles are stored as tables of `(f, f', f'')` at increasing `s` and
//! interpolated by quintic Hermite polynomials, so first and second
//! derivatives are available everywhere and integrals of polynomial
//! combinations of the jets are exact on each cell under Gauss–Kronrod.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::comparison::{rate_from_excess, ComparisonProfile};
use crate::error::{Error, Result};
use crate::quadrature::gk15;
use crate::surfaces::{BoundaryData, SampledField};

/// Value, first and second derivative of a function of one variable.
pub type Jet = [f64; 3];

pub const WARPED_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarpedKind {
    /// `s ∈ [0, l]` with a smooth tip at `s = 0`.
    Disk,
    /// `s ∈ [s_lo, l]` with two boundary circles.
    Annulus,
}

/// Angular term `c·cos(2πkξ/T) + d·sin(2πkξ/T)` added to the weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularMode {
    pub k: i32,
    pub cos: f64,
    pub sin: f64,
}

#[derive(Serialize, Deserialize)]
struct WarpedDocument {
    version: u32,
    n: u32,
    warped_kind: WarpedKind,
    period: f64,
    samples: Vec<[f64; 7]>,
    #[serde(default)]
    angular_psi: Vec<AngularMode>,
}

/// A warped surface `ds² + φ(s)² dξ²` with weight `ψ(s) + Σ angular modes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WarpedDocument", into = "WarpedDocument")]
pub struct WarpedDiskMetric {
    n: u32,
    kind: WarpedKind,
    period: f64,
    s: Vec<f64>,
    phi: Vec<Jet>,
    psi: Vec<Jet>,
    angular: Vec<AngularMode>,
    area_prefix: Vec<f64>,
    model: Option<Arc<HmModel>>,
}

/// Analytic backing of the Horowitz–Myers surface: jets are evaluated from
/// `G(s)` directly instead of from the interpolated tables, so that values
/// and derivatives at arbitrary `s` share the same `G`.
#[derive(Debug, PartialEq)]
struct HmModel {
    profile: ComparisonProfile,
    r0: f64,
}

impl TryFrom<WarpedDocument> for WarpedDiskMetric {
    type Error = Error;

    fn try_from(doc: WarpedDocument) -> Result<Self> {
        if doc.version != WARPED_VERSION {
            return Err(Error::Schema(format!("unsupported surface version {}", doc.version)));
        }
        let s = doc.samples.iter().map(|r| r[0]).collect();
        let phi = doc.samples.iter().map(|r| [r[1], r[2], r[3]]).collect();
        let psi = doc.samples.iter().map(|r| [r[4], r[5], r[6]]).collect();
        Ok(WarpedDiskMetric::from_jets(doc.n, doc.warped_kind, doc.period, s, phi, psi)?
            .with_angular_psi(doc.angular_psi))
    }
}

impl From<WarpedDiskMetric> for WarpedDocument {
    fn from(m: WarpedDiskMetric) -> Self {
        let samples = (0..m.s.len())
            .map(|i| {
                let (p, q) = (m.phi[i], m.psi[i]);
                [m.s[i], p[0], p[1], p[2], q[0], q[1], q[2]]
            })
            .collect();
        WarpedDocument {
            version: WARPED_VERSION,
            n: m.n,
            warped_kind: m.kind,
            period: m.period,
            samples,
            angular_psi: m.angular,
        }
    }
}

// Quintic Hermite basis on [0, 1], coefficients of t⁰..t⁵.
const BASIS: [[f64; 6]; 6] = [
    [1.0, 0.0, 0.0, -10.0, 15.0, -6.0],
    [0.0, 1.0, 0.0, -6.0, 8.0, -3.0],
    [0.0, 0.0, 0.5, -1.5, 1.5, -0.5],
    [0.0, 0.0, 0.0, 10.0, -15.0, 6.0],
    [0.0, 0.0, 0.0, -4.0, 7.0, -3.0],
    [0.0, 0.0, 0.0, 0.5, -1.0, 0.5],
];

fn poly_jet(c: &[f64; 6], t: f64) -> Jet {
    let mut p = 0.0;
    let mut d = 0.0;
    let mut dd = 0.0;
    for k in (0..6).rev() {
        dd = dd * t + 2.0 * d;
        d = d * t + p;
        p = p * t + c[k];
    }
    [p, d, dd]
}

fn quintic(a: &Jet, b: &Jet, h: f64, t: f64) -> Jet {
    let w = [a[0], h * a[1], h * h * a[2], b[0], h * b[1], h * h * b[2]];
    let mut out = [0.0; 3];
    for (wk, c) in w.iter().zip(BASIS.iter()) {
        let j = poly_jet(c, t);
        out[0] += wk * j[0];
        out[1] += wk * j[1];
        out[2] += wk * j[2];
    }
    [out[0], out[1] / h, out[2] / (h * h)]
}

/// Neumaier-compensated running sums.
fn compensated_prefix(terms: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut out = vec![0.0];
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for x in terms {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
        out.push(sum + comp);
    }
    out
}

impl WarpedDiskMetric {
    /// Builds a surface from tabulated jets of `φ` and the radial weight.
    pub fn from_jets(
        n: u32,
        kind: WarpedKind,
        period: f64,
        s: Vec<f64>,
        phi: Vec<Jet>,
        psi: Vec<Jet>,
    ) -> Result<Self> {
        if n < 3 {
            return Err(Error::Domain(format!("dimension n = {n} must be at least 3")));
        }
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::Domain(format!("period must be positive, got {period}")));
        }
        if s.len() < 2 || phi.len() != s.len() || psi.len() != s.len() {
            return Err(Error::Domain("profile tables must have matching lengths ≥ 2".into()));
        }
        if s.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("sample positions must be strictly increasing".into()));
        }
        if phi.iter().chain(psi.iter()).flatten().any(|v| !v.is_finite()) {
            return Err(Error::Domain("profile tables contain non-finite values".into()));
        }
        let first_positive = match kind {
            WarpedKind::Disk => {
                if s[0] != 0.0 || phi[0][0] != 0.0 {
                    return Err(Error::Domain("a disk profile must start with φ(0) = 0".into()));
                }
                let tip = period * phi[0][1];
                if (tip - std::f64::consts::TAU).abs() > 1e-8 * std::f64::consts::TAU {
                    return Err(Error::Domain(format!("tip is not smooth: T·φ'(0) = {tip}")));
                }
                1
            }
            WarpedKind::Annulus => 0,
        };
        if let Some(i) = phi[first_positive..].iter().position(|p| !(p[0] > 0.0)) {
            return Err(Error::Domain(format!(
                "φ must be positive away from the tip (s = {})",
                s[i + first_positive]
            )));
        }
        let mut m = WarpedDiskMetric {
            n,
            kind,
            period,
            s,
            phi,
            psi,
            angular: Vec::new(),
            area_prefix: Vec::new(),
            model: None,
        };
        m.area_prefix = compensated_prefix((0..m.s.len() - 1).map(|i| m.cell_area(i, 1.0)));
        Ok(m)
    }

    /// Tabulates `φ` and `ψ` from closures returning jets at `count` uniform
    /// nodes of `[s_lo, l]`.
    #[allow(clippy::too_many_arguments)]
    pub fn tabulate(
        n: u32,
        kind: WarpedKind,
        period: f64,
        s_lo: f64,
        l: f64,
        count: usize,
        phi: impl Fn(f64) -> Jet,
        psi: impl Fn(f64) -> Jet,
    ) -> Result<Self> {
        if !(l > s_lo) || count < 2 {
            return Err(Error::Domain(format!("empty profile domain [{s_lo}, {l}]")));
        }
        let s: Vec<f64> = (0..count)
            .map(|i| {
                if i + 1 == count {
                    l
                } else {
                    s_lo + (l - s_lo) * i as f64 / (count - 1) as f64
                }
            })
            .collect();
        let ph = s.iter().map(|&x| phi(x)).collect();
        let ps = s.iter().map(|&x| psi(x)).collect();
        Self::from_jets(n, kind, period, s, ph, ps)
    }

    /// Replaces the angular part of the weight.
    pub fn with_angular_psi(mut self, modes: Vec<AngularMode>) -> Self {
        self.angular = modes.into_iter().filter(|m| m.k != 0).collect();
        self
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn kind(&self) -> WarpedKind {
        self.kind
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn s_lo(&self) -> f64 {
        self.s[0]
    }

    pub fn l(&self) -> f64 {
        *self.s.last().unwrap()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.s
    }

    pub fn angular_modes(&self) -> &[AngularMode] {
        &self.angular
    }

    fn locate(&self, s: f64) -> Result<(usize, f64)> {
        let (lo, hi) = (self.s_lo(), self.l());
        let slack = 1e-12 * (hi - lo).max(1.0);
        if !(s >= lo - slack && s <= hi + slack) {
            return Err(Error::Range(format!("s = {s} outside the profile domain [{lo}, {hi}]")));
        }
        let s = s.clamp(lo, hi);
        let i = self.s.partition_point(|&x| x <= s).clamp(1, self.s.len() - 1) - 1;
        let h = self.s[i + 1] - self.s[i];
        Ok((i, (s - self.s[i]) / h))
    }

    fn interp(&self, table: &[Jet], i: usize, t: f64) -> Jet {
        quintic(&table[i], &table[i + 1], self.s[i + 1] - self.s[i], t)
    }

    fn model_jets(&self, model: &HmModel, s: f64) -> Result<(Jet, Jet)> {
        self.locate(s)?;
        let s = s.clamp(self.s_lo(), self.l());
        let excess = if s > 0.0 { model.profile.g(s)? - 1.0 } else { 0.0 };
        Ok(hm_jets(excess, self.n, model.r0))
    }

    /// `(φ, φ', φ'')` at `s`.
    pub fn phi(&self, s: f64) -> Result<Jet> {
        if let Some(model) = &self.model {
            return Ok(self.model_jets(model, s)?.0);
        }
        let (i, t) = self.locate(s)?;
        Ok(self.interp(&self.phi, i, t))
    }

    /// `(ψ, ψ', ψ'')` of the radial part of the weight at `s`.
    pub fn psi_radial(&self, s: f64) -> Result<Jet> {
        if let Some(model) = &self.model {
            return Ok(self.model_jets(model, s)?.1);
        }
        let (i, t) = self.locate(s)?;
        Ok(self.interp(&self.psi, i, t))
    }

    /// Angular part of the weight and its first two `ξ` derivatives.
    pub fn psi_angular(&self, xi: f64) -> Jet {
        let w = std::f64::consts::TAU / self.period;
        let mut out = [0.0; 3];
        for m in &self.angular {
            let k = w * m.k as f64;
            let (sn, cs) = (k * xi).sin_cos();
            out[0] += m.cos * cs + m.sin * sn;
            out[1] += k * (-m.cos * sn + m.sin * cs);
            out[2] -= k * k * (m.cos * cs + m.sin * sn);
        }
        out
    }

    /// Full weight `ψ(s, ξ)`.
    pub fn psi(&self, s: f64, xi: f64) -> Result<f64> {
        Ok(self.psi_radial(s)?[0] + self.psi_angular(xi)[0])
    }

    /// Gaussian curvature `−φ''/φ`; at a disk tip the limit is taken from
    /// the nearest node.
    pub fn gaussian_curvature(&self, s: f64) -> Result<f64> {
        let p = self.phi(s)?;
        if p[0] > 0.0 {
            return Ok(-p[2] / p[0]);
        }
        let q = self.phi(self.s[1].min(self.l()))?;
        Ok(-q[2] / q[0])
    }

    fn cell_area(&self, i: usize, frac: f64) -> f64 {
        let h = self.s[i + 1] - self.s[i];
        let f = |x: f64| self.interp(&self.phi, i, x)[0];
        self.period * h * gk15(&f, 0.0, frac).0
    }

    /// Area of `{s_lo ≤ σ ≤ s}`.
    pub fn area_below(&self, s: f64) -> Result<f64> {
        let (i, t) = self.locate(s)?;
        Ok(self.area_prefix[i] + if t > 0.0 { self.cell_area(i, t) } else { 0.0 })
    }

    /// `∫ (Δψ − K)` over `{s_lo ≤ σ ≤ s}`.
    ///
    /// On a warped surface `(Δψ − K)φ = (φψ')' + φ''` and the angular part
    /// of `Δψ` integrates to zero over each circle, so the integral is the
    /// boundary flux `T·[φψ' + φ']` between the two circles.
    pub fn source_below(&self, s: f64) -> Result<f64> {
        let flux = |x: f64| -> Result<f64> {
            let p = self.phi(x)?;
            let q = self.psi_radial(x)?;
            Ok(p[0] * q[1] + p[1])
        };
        Ok(self.period * (flux(s)? - flux(self.s_lo())?))
    }

    pub fn total_area(&self) -> f64 {
        *self.area_prefix.last().unwrap()
    }

    /// Length of the outer boundary circle `T·φ(l)`.
    pub fn outer_length(&self) -> f64 {
        self.period * self.phi.last().unwrap()[0]
    }

    /// Sample angles used for fields that vary along the circle.
    fn xi_samples(&self) -> Vec<f64> {
        if self.angular.is_empty() {
            vec![0.0]
        } else {
            (0..64).map(|j| self.period * j as f64 / 64.0).collect()
        }
    }

    /// `−2Δψ − ((n−1)/(n−2))|∇ψ|² + n(n−1) + 2K` at the table nodes
    /// (excluding a disk tip), sampled in `ξ` when the weight is not radial.
    pub fn hypothesis_residual(&self) -> SampledField {
        let nf = self.n as f64;
        let c = (nf - 1.0) / (nf - 2.0);
        let xis = self.xi_samples();
        let mut field = SampledField::default();
        for i in 0..self.s.len() {
            let (p, q) = (self.phi[i], self.psi[i]);
            if !(p[0] > 0.0) {
                continue;
            }
            let k = -p[2] / p[0];
            for &xi in &xis {
                let a = self.psi_angular(xi);
                let lap = q[2] + p[1] / p[0] * q[1] + a[2] / (p[0] * p[0]);
                let grad2 = q[1] * q[1] + a[1] * a[1] / (p[0] * p[0]);
                field.points.push([self.s[i], xi]);
                field.values.push(-2.0 * lap - c * grad2 + nf * (nf - 1.0) + 2.0 * k);
            }
        }
        field
    }

    /// Boundary length, geodesic curvature and outward normal derivative of
    /// the weight, one entry per boundary circle (both are constant along
    /// each circle).
    pub fn boundary_data(&self) -> BoundaryData {
        let mut data = BoundaryData::default();
        let last = self.s.len() - 1;
        let mut push = |i: usize, sign: f64| {
            let (p, q) = (self.phi[i], self.psi[i]);
            let arc = self.period * p[0];
            data.length += arc;
            data.points.push([self.s[i], 0.0]);
            data.arc.push(arc);
            data.kappa.push(sign * p[1] / p[0]);
            data.normal_derivative.push(sign * q[1]);
        };
        if self.kind == WarpedKind::Annulus {
            push(0, -1.0);
        }
        push(last, 1.0);
        data
    }
}

/// Horowitz–Myers cross-section of dimension `n` truncated at `s = l`:
/// `φ = r0·G·(1 − G⁻ⁿ)^{1/2}`, `ψ = (n−2)·log(r0·G)`, `T = 4π/(n·r0)`.
pub fn hm_cross_section(profile: &ComparisonProfile, r0: f64, l: f64) -> Result<WarpedDiskMetric> {
    hm_surface(profile, r0, 0.0, l)
}

/// The Horowitz–Myers surface restricted to the annulus `s_in ≤ s ≤ l`.
pub fn hm_annulus(
    profile: &ComparisonProfile,
    r0: f64,
    s_in: f64,
    l: f64,
) -> Result<WarpedDiskMetric> {
    if !(s_in > 0.0) {
        return Err(Error::Domain(format!("inner radius must be positive, got {s_in}")));
    }
    hm_surface(profile, r0, s_in, l)
}

/// Jets `(G, y, z)` of the comparison function with `y = (1 − G⁻ⁿ)^{1/2}`
/// and `z = G⁻ⁿ`, evaluated from the excess `G − 1`.
pub(crate) fn hm_jets(excess: f64, n: u32, r0: f64) -> (Jet, Jet) {
    let nf = n as f64;
    let g = 1.0 + excess;
    let y = rate_from_excess(excess, n);
    let z = (-nf * excess.ln_1p()).exp();
    let phi = r0 * g * y;
    let phi_jet = [
        phi,
        r0 * g * (y * y + 0.5 * nf * z),
        phi * (1.0 - 0.5 * (nf - 1.0) * (nf - 2.0) * z),
    ];
    let psi_jet = [
        (nf - 2.0) * (r0.ln() + excess.ln_1p()),
        (nf - 2.0) * y,
        (nf - 2.0) * 0.5 * nf * z,
    ];
    (phi_jet, psi_jet)
}

fn hm_surface(profile: &ComparisonProfile, r0: f64, s_lo: f64, l: f64) -> Result<WarpedDiskMetric> {
    if !(r0 > 0.0) || !r0.is_finite() {
        return Err(Error::Domain(format!("r0 must be positive, got {r0}")));
    }
    if !(l > s_lo) {
        return Err(Error::Domain(format!("empty interval [{s_lo}, {l}]")));
    }
    if l > profile.s_max() * (1.0 + 1e-12) {
        return Err(Error::Range(format!(
            "l = {l} exceeds the profile horizon {}",
            profile.s_max()
        )));
    }
    let n = profile.n();
    let mut s = Vec::new();
    let mut excess = Vec::new();
    if s_lo == 0.0 {
        s.push(0.0);
        excess.push(0.0);
    } else {
        s.push(s_lo);
        excess.push(profile.g(s_lo)? - 1.0);
    }
    let tol = 1e-9 * profile.s_max();
    for q in profile.samples() {
        if q.s > s_lo + tol && q.s < l - tol {
            s.push(q.s);
            excess.push(q.g - 1.0);
        }
    }
    s.push(l);
    excess.push(profile.g(l)? - 1.0);
    let (phi, psi): (Vec<Jet>, Vec<Jet>) = excess.iter().map(|&e| hm_jets(e, n, r0)).unzip();
    let kind = if s_lo == 0.0 { WarpedKind::Disk } else { WarpedKind::Annulus };
    let period = 4.0 * std::f64::consts::PI / (n as f64 * r0);
    let mut m = WarpedDiskMetric::from_jets(n, kind, period, s, phi, psi)?;
    m.model = Some(Arc::new(HmModel {
        profile: profile.clone(),
        r0,
    }));
    Ok(m)
}

/// Geodesic disk of radius `radius` in the hyperbolic plane, weight zero.
pub fn hyperbolic_disk(n: u32, radius: f64) -> Result<WarpedDiskMetric> {
    let count = ((radius * 2000.0).ceil() as usize).max(200);
    WarpedDiskMetric::tabulate(
        n,
        WarpedKind::Disk,
        std::f64::consts::TAU,
        0.0,
        radius,
        count,
        |s| [s.sinh(), s.cosh(), s.sinh()],
        |_| [0.0; 3],
    )
}

/// Hyperbolic annulus `ds² + cosh²s dξ²` on `s ∈ [−half_width, half_width]`.
pub fn hyperbolic_annulus(n: u32, half_width: f64) -> Result<WarpedDiskMetric> {
    let count = ((half_width * 4000.0).ceil() as usize).max(200);
    WarpedDiskMetric::tabulate(
        n,
        WarpedKind::Annulus,
        std::f64::consts::TAU,
        -half_width,
        half_width,
        count,
        |s| [s.cosh(), s.sinh(), s.cosh()],
        |_| [0.0; 3],
    )
}

/// Euclidean disk of radius `radius`, weight zero.
pub fn euclidean_disk(n: u32, radius: f64) -> Result<WarpedDiskMetric> {
    WarpedDiskMetric::tabulate(
        n,
        WarpedKind::Disk,
        std::f64::consts::TAU,
        0.0,
        radius,
        200,
        |s| [s, 1.0, 0.0],
        |_| [0.0; 3],
    )
}

/// Flat cylinder `[0, length] × ℝ/circumference·ℤ`, weight zero.
pub fn flat_cylinder(n: u32, length: f64, circumference: f64) -> Result<WarpedDiskMetric> {
    WarpedDiskMetric::tabulate(
        n,
        WarpedKind::Annulus,
        circumference,
        0.0,
        length,
        200,
        |_| [1.0, 0.0, 0.0],
        |_| [0.0; 3],
    )
}

/// Flat annulus `r_in ≤ r ≤ r_out` in polar form, weight zero.
pub fn flat_annulus(n: u32, r_in: f64, r_out: f64) -> Result<WarpedDiskMetric> {
    if !(r_in > 0.0) {
        return Err(Error::Domain(format!("inner radius must be positive, got {r_in}")));
    }
    WarpedDiskMetric::tabulate(
        n,
        WarpedKind::Annulus,
        std::f64::consts::TAU,
        r_in,
        r_out,
        400,
        |s| [s, 1.0, 0.0],
        |_| [0.0; 3],
    )
}
