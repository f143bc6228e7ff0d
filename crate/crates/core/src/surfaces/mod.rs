//! Weighted surfaces `(Σ, g, ψ)`: warped disks and annuli, conformal
//! triangulations, and the warped-product reduction from `n` dimensions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod conformal;
pub mod mesh;
pub mod warped;

pub use conformal::{
    euclidean_mesh_disk, perturbed_poincare_disk, poincare_disk, ConformalSurface,
    SmoothPerturbation,
};
pub use mesh::{annulus, hex_disk, Topology, TriangleMesh};
pub use warped::{
    euclidean_disk, flat_annulus, flat_cylinder, hm_annulus, hm_cross_section, hyperbolic_annulus,
    hyperbolic_disk, AngularMode, Jet, WarpedDiskMetric, WarpedKind,
};

/// Values of a scalar field at sample points of the parameter domain.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SampledField {
    pub points: Vec<[f64; 2]>,
    pub values: Vec<f64>,
}

impl SampledField {
    /// Smallest value and its sample index.
    pub fn min(&self) -> Option<(usize, f64)> {
        self.values
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Boundary samples with their arc-length weights.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundaryData {
    /// Total boundary length `|∂Σ|`.
    pub length: f64,
    pub points: Vec<[f64; 2]>,
    pub arc: Vec<f64>,
    /// Geodesic curvature, positive on the boundary of a round disk.
    pub kappa: Vec<f64>,
    /// `⟨∇ψ, η⟩` with `η` the outward unit normal.
    pub normal_derivative: Vec<f64>,
}

impl BoundaryData {
    /// `inf (⟨∇ψ,η⟩ + κ − shift)` over the boundary samples.
    pub fn inf_shifted(&self, shift: f64) -> f64 {
        self.kappa
            .iter()
            .zip(&self.normal_derivative)
            .map(|(k, d)| d + k - shift)
            .fold(f64::INFINITY, f64::min)
    }

    /// `∫ (⟨∇ψ,η⟩ + κ − shift)` over the boundary.
    pub fn integral_shifted(&self, shift: f64) -> f64 {
        self.kappa
            .iter()
            .zip(&self.normal_derivative)
            .zip(&self.arc)
            .map(|((k, d), a)| (d + k - shift) * a)
            .sum()
    }
}

/// Either kind of weighted surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Surface {
    Warped(WarpedDiskMetric),
    Conformal(ConformalSurface),
}

impl Surface {
    pub fn n(&self) -> u32 {
        match self {
            Surface::Warped(w) => w.n(),
            Surface::Conformal(c) => c.n(),
        }
    }

    pub fn is_disk(&self) -> bool {
        match self {
            Surface::Warped(w) => w.kind() == WarpedKind::Disk,
            Surface::Conformal(c) => c.is_disk(),
        }
    }

    pub fn hypothesis_residual(&self) -> SampledField {
        match self {
            Surface::Warped(w) => w.hypothesis_residual(),
            Surface::Conformal(c) => c.hypothesis_residual(),
        }
    }

    pub fn boundary_data(&self) -> BoundaryData {
        match self {
            Surface::Warped(w) => w.boundary_data(),
            Surface::Conformal(c) => c.boundary_data(),
        }
    }
}

impl From<WarpedDiskMetric> for Surface {
    fn from(w: WarpedDiskMetric) -> Self {
        Surface::Warped(w)
    }
}

impl From<ConformalSurface> for Surface {
    fn from(c: ConformalSurface) -> Self {
        Surface::Conformal(c)
    }
}

/// A rotationally symmetric metric `ds² + φ(s)² dξ² + Σ_j ℓ_j(s)² dθ_j²` on
/// `Σ × T^{n−2}`, tabulated by jets at the nodes `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarpedProductAnsatz {
    pub n: u32,
    pub kind: WarpedKind,
    pub period: f64,
    pub s: Vec<f64>,
    pub phi: Vec<Jet>,
    /// One table per fiber direction, each with one jet per node.
    pub fibers: Vec<Vec<Jet>>,
}

impl WarpedProductAnsatz {
    fn check(&self) -> Result<()> {
        if self.fibers.len() + 2 != self.n as usize {
            return Err(Error::Domain(format!(
                "{} fiber tables given for dimension {}",
                self.fibers.len(),
                self.n
            )));
        }
        for (j, f) in self.fibers.iter().enumerate() {
            if f.len() != self.s.len() {
                return Err(Error::Domain(format!("fiber {j} has the wrong number of samples")));
            }
            if let Some(i) = f.iter().position(|q| !(q[0] > 0.0)) {
                return Err(Error::Domain(format!(
                    "fiber {j} has non-positive length at s = {}",
                    self.s[i]
                )));
            }
        }
        Ok(())
    }

    /// Scalar curvature of the `n`-dimensional metric at node `i`
    /// (requires `φ > 0` there).
    pub fn scalar_curvature(&self, i: usize) -> Result<f64> {
        self.check()?;
        let p = self.phi[i];
        let k = -p[2] / p[0];
        let mut lap = 0.0;
        let mut sum_sq = 0.0;
        let mut dpsi = 0.0;
        for f in &self.fibers {
            let q = f[i];
            let du = q[1] / q[0];
            let ddu = q[2] / q[0] - du * du;
            lap += ddu + p[1] / p[0] * du;
            sum_sq += du * du;
            dpsi += du;
        }
        Ok(2.0 * k - 2.0 * lap - sum_sq - dpsi * dpsi)
    }
}

/// Collapses the fiber directions into the weight `ψ = Σ_j log ℓ_j`.
pub fn reduce_warped_product(ansatz: &WarpedProductAnsatz) -> Result<WarpedDiskMetric> {
    ansatz.check()?;
    let psi = (0..ansatz.s.len())
        .map(|i| {
            let mut out = [0.0; 3];
            for f in &ansatz.fibers {
                let q = f[i];
                let du = q[1] / q[0];
                out[0] += q[0].ln();
                out[1] += du;
                out[2] += q[2] / q[0] - du * du;
            }
            out
        })
        .collect();
    WarpedDiskMetric::from_jets(
        ansatz.n,
        ansatz.kind,
        ansatz.period,
        ansatz.s.clone(),
        ansatz.phi.clone(),
        psi,
    )
}

/// The Horowitz–Myers metric written as a warped product over its
/// `(s, ξ)` cross-section: every fiber has length `r0·G(s)`.
pub fn hm_ansatz(
    profile: &crate::comparison::ComparisonProfile,
    r0: f64,
    l: f64,
) -> Result<WarpedProductAnsatz> {
    let section = hm_cross_section(profile, r0, l)?;
    let n = profile.n();
    let nf = n as f64;
    let s = section.nodes().to_vec();
    let mut phi = Vec::with_capacity(s.len());
    let mut fiber = Vec::with_capacity(s.len());
    for &x in &s {
        phi.push(section.phi(x)?);
        let g = if x > 0.0 { profile.g(x)? } else { 1.0 };
        let y = crate::comparison::rate(g, n);
        let z = g.powf(-nf);
        fiber.push([r0 * g, r0 * g * y, r0 * g * (y * y + 0.5 * nf * z)]);
    }
    Ok(WarpedProductAnsatz {
        n,
        kind: WarpedKind::Disk,
        period: section.period(),
        s,
        phi,
        fibers: vec![fiber; n as usize - 2],
    })
}
