//! Triangulated surfaces with a conformal metric `e^{2λ}|dz|²` and a weight
//! `ψ`, both sampled at vertices.
//!
//! Edge lengths are `|z_i − z_j|·e^{(λ_i + λ_j)/2}`; every geometric quantity
//! below is computed from these intrinsic lengths. Vertex areas are one
//! third of the incident triangle areas, which makes the piecewise-linear
//! integral of a vertex field agree with the lumped sum.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::surfaces::mesh::{edge_key, hex_disk, Topology, TriangleMesh};
use crate::surfaces::{BoundaryData, SampledField};

pub const CONFORMAL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ConformalDocument {
    version: u32,
    n: u32,
    mesh: TriangleMesh,
    lambda: Vec<f64>,
    psi: Vec<f64>,
}

#[derive(Debug, Clone)]
struct Geometry {
    topology: Topology,
    neighbors: Vec<Vec<usize>>,
    /// Intrinsic layout of each triangle: first vertex at the origin, second
    /// on the positive x axis, third in the upper half plane.
    layout: Vec<[[f64; 2]; 3]>,
    angles: Vec<[f64; 3]>,
    areas: Vec<f64>,
    vertex_area: Vec<f64>,
    curvature: Vec<f64>,
    kappa: Vec<f64>,
    boundary_share: Vec<f64>,
    laplacian: Vec<f64>,
    normal_derivative: Vec<f64>,
    grad_sq: Vec<f64>,
    boundary_length: f64,
}

/// A weighted surface given by a triangulated parameter domain and vertex
/// samples of the conformal factor and the weight.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ConformalDocument", into = "ConformalDocument")]
pub struct ConformalSurface {
    n: u32,
    mesh: TriangleMesh,
    lambda: Vec<f64>,
    psi: Vec<f64>,
    #[serde(skip)]
    geo: Box<Geometry>,
}

impl PartialEq for ConformalSurface {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.mesh == other.mesh
            && self.lambda == other.lambda
            && self.psi == other.psi
    }
}

impl TryFrom<ConformalDocument> for ConformalSurface {
    type Error = Error;

    fn try_from(doc: ConformalDocument) -> Result<Self> {
        if doc.version != CONFORMAL_VERSION {
            return Err(Error::Schema(format!("unsupported surface version {}", doc.version)));
        }
        ConformalSurface::new(doc.n, doc.mesh, doc.lambda, doc.psi)
    }
}

impl From<ConformalSurface> for ConformalDocument {
    fn from(s: ConformalSurface) -> Self {
        ConformalDocument {
            version: CONFORMAL_VERSION,
            n: s.n,
            mesh: s.mesh,
            lambda: s.lambda,
            psi: s.psi,
        }
    }
}

fn layout_triangle(a: f64, b: f64, c: f64) -> Option<[[f64; 2]; 3]> {
    // a = |v1 v2|, b = |v0 v2|, c = |v0 v1|
    let x = (b * b + c * c - a * a) / (2.0 * c);
    let y2 = b * b - x * x;
    if !(y2 > 0.0) || !(a + b > c && a + c > b && b + c > a) {
        return None;
    }
    Some([[0.0, 0.0], [c, 0.0], [x, y2.sqrt()]])
}

/// Gradient of the linear interpolant of `f` over a laid-out triangle.
pub(crate) fn layout_gradient(p: &[[f64; 2]; 3], f: [f64; 3]) -> [f64; 2] {
    let gx = (f[1] - f[0]) / p[1][0];
    let gy = (f[2] - f[0] - gx * p[2][0]) / p[2][1];
    [gx, gy]
}

fn angle_from_sides(opposite: f64, s1: f64, s2: f64) -> f64 {
    ((s1 * s1 + s2 * s2 - opposite * opposite) / (2.0 * s1 * s2))
        .clamp(-1.0, 1.0)
        .acos()
}

impl ConformalSurface {
    pub fn new(n: u32, mesh: TriangleMesh, lambda: Vec<f64>, psi: Vec<f64>) -> Result<Self> {
        if n < 3 {
            return Err(Error::Domain(format!("dimension n = {n} must be at least 3")));
        }
        let nv = mesh.vertices.len();
        if lambda.len() != nv || psi.len() != nv {
            return Err(Error::Mesh(format!(
                "field lengths ({}, {}) do not match vertex count {nv}",
                lambda.len(),
                psi.len()
            )));
        }
        if lambda.iter().chain(psi.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Mesh("vertex fields contain non-finite values".into()));
        }
        let topology = mesh.topology()?;
        let geo = Box::new(Self::build_geometry(&mesh, topology, &lambda, &psi)?);
        Ok(ConformalSurface {
            n,
            mesh,
            lambda,
            psi,
            geo,
        })
    }

    /// Samples `λ` and `ψ` from closures on the parameter plane.
    pub fn from_fields(
        n: u32,
        mesh: TriangleMesh,
        lambda: impl Fn([f64; 2]) -> f64,
        psi: impl Fn([f64; 2]) -> f64,
    ) -> Result<Self> {
        let l = mesh.vertices.iter().map(|&z| lambda(z)).collect();
        let p = mesh.vertices.iter().map(|&z| psi(z)).collect();
        Self::new(n, mesh, l, p)
    }

    fn build_geometry(
        mesh: &TriangleMesh,
        topology: Topology,
        lambda: &[f64],
        psi: &[f64],
    ) -> Result<Geometry> {
        let nv = mesh.vertices.len();
        let nt = mesh.triangles.len();
        let len = |a: usize, b: usize| {
            let (p, q) = (mesh.vertices[a], mesh.vertices[b]);
            (p[0] - q[0]).hypot(p[1] - q[1]) * (0.5 * (lambda[a] + lambda[b])).exp()
        };
        let mut layout = Vec::with_capacity(nt);
        let mut angles = Vec::with_capacity(nt);
        let mut areas = Vec::with_capacity(nt);
        let mut vertex_area = vec![0.0; nv];
        let mut angle_sum = vec![0.0; nv];
        let mut laplacian = vec![0.0; nv];
        let mut grad_weighted = vec![0.0; nv];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let a = len(tri[1], tri[2]);
            let b = len(tri[0], tri[2]);
            let c = len(tri[0], tri[1]);
            let p = layout_triangle(a, b, c).ok_or_else(|| {
                Error::Mesh(format!("triangle {t} is degenerate in the conformal metric"))
            })?;
            let area = 0.5 * c * p[2][1];
            let th = [angle_from_sides(a, b, c), angle_from_sides(b, a, c), angle_from_sides(c, a, b)];
            let g = layout_gradient(&p, [psi[tri[0]], psi[tri[1]], psi[tri[2]]]);
            let g2 = g[0] * g[0] + g[1] * g[1];
            for k in 0..3 {
                let v = tri[k];
                vertex_area[v] += area / 3.0;
                angle_sum[v] += th[k];
                grad_weighted[v] += area * g2;
                // cotangent weight of the edge opposite vertex k
                let (i, j) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                let w = 0.5 / th[k].tan();
                laplacian[i] += w * (psi[j] - psi[i]);
                laplacian[j] += w * (psi[i] - psi[j]);
            }
            layout.push(p);
            angles.push(th);
            areas.push(area);
        }

        let mut neighbors = vec![Vec::new(); nv];
        for &(a, b) in topology.edge_triangles.keys() {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for nb in &mut neighbors {
            nb.sort_unstable();
        }

        let mut curvature = vec![0.0; nv];
        for v in 0..nv {
            if !mesh.boundary[v] {
                curvature[v] = (std::f64::consts::TAU - angle_sum[v]) / vertex_area[v];
            }
        }
        for v in 0..nv {
            if mesh.boundary[v] {
                let interior: Vec<f64> = neighbors[v]
                    .iter()
                    .filter(|&&u| !mesh.boundary[u])
                    .map(|&u| curvature[u])
                    .collect();
                if !interior.is_empty() {
                    curvature[v] = interior.iter().sum::<f64>() / interior.len() as f64;
                }
            }
        }

        let mut kappa = vec![0.0; nv];
        let mut boundary_share = vec![0.0; nv];
        let mut normal_derivative = vec![0.0; nv];
        let mut boundary_length = 0.0;
        for lp in &topology.loops {
            let m = lp.len();
            let mut edge_len = Vec::with_capacity(m);
            let mut edge_dn = Vec::with_capacity(m);
            for k in 0..m {
                let (a, b) = (lp[k], lp[(k + 1) % m]);
                let t = topology.edge_triangles[&edge_key(a, b)][0];
                let tri = mesh.triangles[t];
                // rotate so the boundary edge is (tri[r], tri[r+1]) = (a, b)
                let r = (0..3).find(|&r| tri[r] == a && tri[(r + 1) % 3] == b).ok_or_else(|| {
                    Error::Mesh(format!("boundary edge ({a}, {b}) has inconsistent orientation"))
                })?;
                let c = tri[(r + 2) % 3];
                let la = len(b, c);
                let lb = len(a, c);
                let lc = len(a, b);
                let p = layout_triangle(la, lb, lc)
                    .ok_or_else(|| Error::Mesh(format!("triangle {t} is degenerate")))?;
                let g = layout_gradient(&p, [psi[a], psi[b], psi[c]]);
                edge_len.push(lc);
                edge_dn.push(-g[1]);
                boundary_length += lc;
            }
            for k in 0..m {
                let v = lp[k];
                let prev = (k + m - 1) % m;
                let share = 0.5 * (edge_len[prev] + edge_len[k]);
                boundary_share[v] = share;
                normal_derivative[v] =
                    (edge_len[prev] * edge_dn[prev] + edge_len[k] * edge_dn[k]) / (2.0 * share);
                kappa[v] = (std::f64::consts::PI - angle_sum[v] - curvature[v] * vertex_area[v]) / share;
                laplacian[v] += share * normal_derivative[v];
            }
        }

        let grad_sq = (0..nv)
            .map(|v| grad_weighted[v] / (3.0 * vertex_area[v]))
            .collect();

        Ok(Geometry {
            topology,
            neighbors,
            layout,
            angles,
            areas,
            vertex_area,
            curvature,
            kappa,
            boundary_share,
            laplacian,
            normal_derivative,
            grad_sq,
            boundary_length,
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn mesh(&self) -> &TriangleMesh {
        &self.mesh
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    pub fn topology(&self) -> &Topology {
        &self.geo.topology
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.geo.neighbors[v]
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.geo.topology.euler_characteristic
    }

    pub fn is_disk(&self) -> bool {
        self.euler_characteristic() == 1 && self.geo.topology.loops.len() == 1
    }

    pub fn is_annulus(&self) -> bool {
        self.euler_characteristic() == 0 && self.geo.topology.loops.len() == 2
    }

    /// Intrinsic planar layout of triangle `t`, vertices in mesh order.
    pub fn layout(&self, t: usize) -> &[[f64; 2]; 3] {
        &self.geo.layout[t]
    }

    pub fn angles(&self, t: usize) -> [f64; 3] {
        self.geo.angles[t]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        self.geo.areas[t]
    }

    pub fn vertex_area(&self) -> &[f64] {
        &self.geo.vertex_area
    }

    pub fn total_area(&self) -> f64 {
        self.geo.areas.iter().sum()
    }

    /// Intrinsic length of the segment between two vertices.
    pub fn edge_length(&self, a: usize, b: usize) -> f64 {
        let (p, q) = (self.mesh.vertices[a], self.mesh.vertices[b]);
        (p[0] - q[0]).hypot(p[1] - q[1]) * (0.5 * (self.lambda[a] + self.lambda[b])).exp()
    }

    /// Pointwise Gaussian curvature at vertices.
    pub fn curvature(&self) -> &[f64] {
        &self.geo.curvature
    }

    /// Geodesic curvature at boundary vertices (zero elsewhere).
    pub fn kappa(&self) -> &[f64] {
        &self.geo.kappa
    }

    /// Pointwise `Δψ` at vertices (cell integral over vertex area).
    pub fn laplacian_psi(&self) -> Vec<f64> {
        (0..self.psi.len())
            .map(|v| self.geo.laplacian[v] / self.geo.vertex_area[v])
            .collect()
    }

    /// Area-weighted `|∇ψ|²` at vertices.
    pub fn grad_psi_sq(&self) -> &[f64] {
        &self.geo.grad_sq
    }

    /// `Δψ − K` at vertices, the integrand of the level-set source term.
    pub fn source_density(&self) -> Vec<f64> {
        self.laplacian_psi()
            .iter()
            .zip(&self.geo.curvature)
            .map(|(l, k)| l - k)
            .collect()
    }

    pub fn boundary_length(&self) -> f64 {
        self.geo.boundary_length
    }

    /// `(∫K + ∫κ, 2πχ)`.
    pub fn gauss_bonnet(&self) -> (f64, f64) {
        let area_part: f64 = self
            .geo
            .curvature
            .iter()
            .zip(&self.geo.vertex_area)
            .map(|(k, a)| k * a)
            .sum();
        let boundary_part: f64 = self
            .geo
            .kappa
            .iter()
            .zip(&self.geo.boundary_share)
            .map(|(k, s)| k * s)
            .sum();
        (
            area_part + boundary_part,
            std::f64::consts::TAU * self.euler_characteristic() as f64,
        )
    }

    /// `−2Δψ − ((n−1)/(n−2))|∇ψ|² + n(n−1) + 2K` at interior vertices.
    pub fn hypothesis_residual(&self) -> SampledField {
        let nf = self.n as f64;
        let c = (nf - 1.0) / (nf - 2.0);
        let lap = self.laplacian_psi();
        let mut field = SampledField::default();
        for v in 0..self.psi.len() {
            if self.mesh.boundary[v] {
                continue;
            }
            field.points.push(self.mesh.vertices[v]);
            field.values.push(
                -2.0 * lap[v] - c * self.geo.grad_sq[v] + nf * (nf - 1.0) + 2.0 * self.geo.curvature[v],
            );
        }
        field
    }

    /// Boundary samples: one per boundary vertex, with arc weight equal to
    /// half the two adjacent boundary edges.
    pub fn boundary_data(&self) -> BoundaryData {
        let mut data = BoundaryData {
            length: self.geo.boundary_length,
            ..Default::default()
        };
        for lp in &self.geo.topology.loops {
            for &v in lp {
                data.points.push(self.mesh.vertices[v]);
                data.arc.push(self.geo.boundary_share[v]);
                data.kappa.push(self.geo.kappa[v]);
                data.normal_derivative.push(self.geo.normal_derivative[v]);
            }
        }
        data
    }
}

/// A smooth scalar field on the plane: a finite sum of plane waves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothPerturbation {
    /// Rows `[kx, ky, amplitude, phase]`.
    pub waves: Vec<[f64; 4]>,
}

impl SmoothPerturbation {
    pub fn zero() -> Self {
        SmoothPerturbation { waves: Vec::new() }
    }

    /// `count` waves with frequencies up to `max_frequency` and amplitudes
    /// uniform in `[−amplitude, amplitude]`.
    pub fn random(rng: &mut impl Rng, count: usize, max_frequency: f64, amplitude: f64) -> Self {
        let waves = (0..count)
            .map(|_| {
                [
                    rng.gen_range(-max_frequency..=max_frequency),
                    rng.gen_range(-max_frequency..=max_frequency),
                    rng.gen_range(-amplitude..=amplitude),
                    rng.gen_range(0.0..std::f64::consts::TAU),
                ]
            })
            .collect();
        SmoothPerturbation { waves }
    }

    pub fn value(&self, z: [f64; 2]) -> f64 {
        self.waves
            .iter()
            .map(|w| w[2] * (w[0] * z[0] + w[1] * z[1] + w[3]).cos())
            .sum()
    }
}

/// Geodesic disk of radius `inradius` in the Poincaré model, meshed by a
/// hexagonal disk with `rings` rings, with additive perturbations of the
/// conformal factor and the weight.
pub fn perturbed_poincare_disk(
    n: u32,
    rings: usize,
    inradius: f64,
    d_lambda: &SmoothPerturbation,
    psi: &SmoothPerturbation,
) -> Result<ConformalSurface> {
    if !(inradius > 0.0) {
        return Err(Error::Domain(format!("inradius must be positive, got {inradius}")));
    }
    let a = (0.5 * inradius).tanh();
    ConformalSurface::from_fields(
        n,
        hex_disk(rings, a),
        |z| std::f64::consts::LN_2 - (1.0 - z[0] * z[0] - z[1] * z[1]).ln() + d_lambda.value(z),
        |z| psi.value(z),
    )
}

/// Unperturbed hyperbolic disk in the Poincaré model.
pub fn poincare_disk(n: u32, rings: usize, inradius: f64) -> Result<ConformalSurface> {
    let zero = SmoothPerturbation::zero();
    perturbed_poincare_disk(n, rings, inradius, &zero, &zero)
}

/// Flat disk of the given radius with zero weight.
pub fn euclidean_mesh_disk(n: u32, rings: usize, radius: f64) -> Result<ConformalSurface> {
    ConformalSurface::from_fields(n, hex_disk(rings, radius), |_| 0.0, |_| 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_disk_has_zero_interior_curvature() {
        let s = euclidean_mesh_disk(3, 8, 1.0).unwrap();
        for (v, k) in s.curvature().iter().enumerate() {
            if !s.mesh().boundary[v] {
                assert!(k.abs() < 1e-9, "v={v} K={k}");
            }
        }
        let (lhs, rhs) = s.gauss_bonnet();
        assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn cotan_laplacian_of_linear_function_vanishes_inside() {
        let mesh = hex_disk(6, 1.0);
        let s = ConformalSurface::from_fields(3, mesh, |_| 0.0, |z| 2.0 * z[0] - z[1]).unwrap();
        let lap = s.laplacian_psi();
        for v in 0..lap.len() {
            if !s.mesh().boundary[v] {
                assert!(lap[v].abs() < 1e-9);
                assert!((s.grad_psi_sq()[v] - 5.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn document_roundtrip() {
        let s = poincare_disk(3, 3, 1.0).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        let back: ConformalSurface = serde_json::from_str(&text).unwrap();
        assert_eq!(s, back);
        assert_eq!(s.curvature(), back.curvature());
    }
}
