//! Coordinate charts of annuli: metric, weight and curvature at arbitrary
//! points, plus the two boundary curves.

use nalgebra::{SMatrix, SVector};

use super::interp::{fornberg, WINDOW};
use crate::error::{Error, Result};
use crate::surfaces::{ConformalSurface, Surface, WarpedDiskMetric, WarpedKind};

pub(crate) type V2 = [f64; 2];

/// Local geometry at a point of the chart.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Local {
    pub g: [[f64; 2]; 2],
    /// `dg[k][i][j] = ∂_k g_ij`.
    pub dg: [[[f64; 2]; 2]; 2],
    pub psi: f64,
    pub dpsi: V2,
    pub ddpsi: [[f64; 2]; 2],
    pub k: f64,
}

impl Local {
    pub fn inverse(&self) -> [[f64; 2]; 2] {
        let g = self.g;
        let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        [[g[1][1] / det, -g[0][1] / det], [-g[1][0] / det, g[0][0] / det]]
    }

    /// `Γ^k_ij`.
    pub fn christoffel(&self) -> [[[f64; 2]; 2]; 2] {
        let gi = self.inverse();
        let dg = self.dg;
        let mut out = [[[0.0; 2]; 2]; 2];
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    let mut s = 0.0;
                    for l in 0..2 {
                        s += 0.5 * gi[k][l] * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]);
                    }
                    out[k][i][j] = s;
                }
            }
        }
        out
    }

    pub fn inner(&self, a: V2, b: V2) -> f64 {
        let g = self.g;
        a[0] * (g[0][0] * b[0] + g[0][1] * b[1]) + a[1] * (g[1][0] * b[0] + g[1][1] * b[1])
    }

    /// Covariant Hessian of the weight applied to `(a, b)`.
    pub fn hessian(&self, a: V2, b: V2) -> f64 {
        let gam = self.christoffel();
        let mut s = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let cov = self.ddpsi[i][j] - gam[0][i][j] * self.dpsi[0] - gam[1][i][j] * self.dpsi[1];
                s += cov * a[i] * b[j];
            }
        }
        s
    }
}

/// A point of a boundary curve.
#[derive(Debug, Clone, Copy)]
pub(crate) struct BoundaryPoint {
    pub x: V2,
    /// Coordinate derivative of the curve in its parameter.
    pub dx: V2,
    pub kappa: f64,
    /// `⟨∇ψ, η⟩` with `η` the outward normal.
    pub normal_derivative: f64,
}

pub(crate) trait Chart {
    fn local(&self, x: V2) -> Result<Local>;
    /// `side` 0 is the inner boundary, 1 the outer one.
    fn boundary(&self, side: usize, t: f64) -> BoundaryPoint;
    /// Parameter of the boundary point closest to `x`.
    fn project(&self, side: usize, x: V2) -> f64;
}

pub(crate) struct WarpedChart<'a> {
    pub metric: &'a WarpedDiskMetric,
}

impl Chart for WarpedChart<'_> {
    fn local(&self, x: V2) -> Result<Local> {
        let m = self.metric;
        // trial points slightly past a boundary circle use the Taylor
        // extension of the tables
        let c = x[0].clamp(m.s_lo(), m.l());
        let d = x[0] - c;
        let ext = |j: [f64; 3]| [j[0] + d * (j[1] + 0.5 * d * j[2]), j[1] + d * j[2], j[2]];
        let p = ext(m.phi(c)?);
        let r = ext(m.psi_radial(c)?);
        let a = m.psi_angular(x[1]);
        Ok(Local {
            g: [[1.0, 0.0], [0.0, p[0] * p[0]]],
            dg: [[[0.0, 0.0], [0.0, 2.0 * p[0] * p[1]]], [[0.0; 2]; 2]],
            psi: r[0] + a[0],
            dpsi: [r[1], a[1]],
            ddpsi: [[r[2], 0.0], [0.0, a[2]]],
            k: -p[2] / p[0],
        })
    }

    fn boundary(&self, side: usize, t: f64) -> BoundaryPoint {
        let m = self.metric;
        let (s, sign) = if side == 0 { (m.s_lo(), -1.0) } else { (m.l(), 1.0) };
        let p = m.phi(s).expect("boundary inside the table");
        let r = m.psi_radial(s).expect("boundary inside the table");
        BoundaryPoint {
            x: [s, t],
            dx: [0.0, 1.0],
            kappa: sign * p[1] / p[0],
            normal_derivative: sign * r[1],
        }
    }

    fn project(&self, _side: usize, x: V2) -> f64 {
        x[1]
    }
}

/// Moving-least-squares chart of a conformal annulus: `λ` and `ψ` are fitted
/// by weighted quadratics around each query point.
pub(crate) struct MeshChart<'a> {
    surface: &'a ConformalSurface,
    radius: f64,
    origin: V2,
    cell: f64,
    cells: usize,
    buckets: Vec<Vec<usize>>,
    loops: [Vec<usize>; 2],
    kappa: Vec<f64>,
    normal_derivative: Vec<f64>,
}

fn loop_area(surface: &ConformalSurface, lp: &[usize]) -> f64 {
    let v = &surface.mesh().vertices;
    let mut a = 0.0;
    for k in 0..lp.len() {
        let (p, q) = (v[lp[k]], v[lp[(k + 1) % lp.len()]]);
        a += p[0] * q[1] - p[1] * q[0];
    }
    0.5 * a.abs()
}

impl<'a> MeshChart<'a> {
    pub fn new(surface: &'a ConformalSurface) -> Result<Self> {
        if !surface.is_annulus() {
            return Err(Error::Domain("geodesics between boundary circles need an annulus".into()));
        }
        let verts = &surface.mesh().vertices;
        let mut h: f64 = 0.0;
        for tri in &surface.mesh().triangles {
            for k in 0..3 {
                let (p, q) = (verts[tri[k]], verts[tri[(k + 1) % 3]]);
                h = h.max((p[0] - q[0]).hypot(p[1] - q[1]));
            }
        }
        let radius = 2.5 * h;
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in verts {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(radius);
        let cells = ((span / radius).ceil() as usize).clamp(1, 2048);
        let mut buckets = vec![Vec::new(); cells * cells];
        let cell = span / cells as f64;
        for (i, p) in verts.iter().enumerate() {
            let cx = (((p[0] - lo[0]) / cell) as usize).min(cells - 1);
            let cy = (((p[1] - lo[1]) / cell) as usize).min(cells - 1);
            buckets[cy * cells + cx].push(i);
        }
        let topo = surface.topology();
        let mut loops = [topo.loops[0].clone(), topo.loops[1].clone()];
        if loop_area(surface, &loops[0]) > loop_area(surface, &loops[1]) {
            loops.swap(0, 1);
        }
        let data = surface.boundary_data();
        let mut kappa = vec![0.0; verts.len()];
        let mut normal_derivative = vec![0.0; verts.len()];
        let mut idx = 0;
        for lp in &topo.loops {
            for &v in lp {
                kappa[v] = data.kappa[idx];
                normal_derivative[v] = data.normal_derivative[idx];
                idx += 1;
            }
        }
        Ok(MeshChart {
            surface,
            radius,
            origin: lo,
            cell,
            cells,
            buckets,
            loops,
            kappa,
            normal_derivative,
        })
    }

    fn neighbours(&self, x: V2, radius: f64) -> Vec<(usize, f64)> {
        let cell = self.cell;
        let reach = (radius / cell).ceil() as isize;
        let cx = ((x[0] - self.origin[0]) / cell).floor() as isize;
        let cy = ((x[1] - self.origin[1]) / cell).floor() as isize;
        let verts = &self.surface.mesh().vertices;
        let mut out = Vec::new();
        for j in cy - reach..=cy + reach {
            for i in cx - reach..=cx + reach {
                if i < 0 || j < 0 || i >= self.cells as isize || j >= self.cells as isize {
                    continue;
                }
                for &v in &self.buckets[j as usize * self.cells + i as usize] {
                    let p = verts[v];
                    let d = (p[0] - x[0]).hypot(p[1] - x[1]);
                    if d < radius {
                        out.push((v, d));
                    }
                }
            }
        }
        out
    }

    /// Weighted quadratic fits of `λ` and `ψ` around `x`: value, gradient
    /// and Hessian of each.
    fn fit(&self, x: V2) -> Result<[(f64, V2, [[f64; 2]; 2]); 2]> {
        let mut radius = self.radius;
        let near = loop {
            let near = self.neighbours(x, radius);
            if near.len() >= 12 {
                break near;
            }
            radius *= 1.5;
            if radius > 1e3 * self.radius {
                return Err(Error::Mesh(format!("no mesh vertices near ({}, {})", x[0], x[1])));
            }
        };
        let verts = &self.surface.mesh().vertices;
        let mut ata = SMatrix::<f64, 6, 6>::zeros();
        let mut atb = SMatrix::<f64, 6, 2>::zeros();
        for &(v, d) in &near {
            let q = d / radius;
            let w = (1.0 - q).powi(4) * (4.0 * q + 1.0);
            let (dx, dy) = ((verts[v][0] - x[0]) / self.radius, (verts[v][1] - x[1]) / self.radius);
            let row = SVector::<f64, 6>::from([1.0, dx, dy, 0.5 * dx * dx, dx * dy, 0.5 * dy * dy]);
            ata += w * row * row.transpose();
            let vals = SMatrix::<f64, 1, 2>::new(self.surface.lambda()[v], self.surface.psi()[v]);
            atb += w * row * vals;
        }
        let sol = ata
            .cholesky()
            .ok_or_else(|| Error::Mesh(format!("degenerate local fit at ({}, {})", x[0], x[1])))?
            .solve(&atb);
        let (h, h2) = (self.radius, self.radius * self.radius);
        let out = [0, 1].map(|c| {
            let a = sol.column(c);
            (
                a[0],
                [a[1] / h, a[2] / h],
                [[a[3] / h2, a[4] / h2], [a[4] / h2, a[5] / h2]],
            )
        });
        Ok(out)
    }

    /// Periodic interpolation of per-vertex values around a boundary loop,
    /// in the vertex-index parameter: value and derivative.
    fn periodic(&self, side: usize, t: f64, f: impl Fn(usize) -> [f64; 4]) -> ([f64; 4], [f64; 4]) {
        let lp = &self.loops[side];
        let m = lp.len() as isize;
        let start = t.round() as isize - WINDOW as isize / 2;
        let nodes: Vec<f64> = (0..WINDOW).map(|k| (start + k as isize) as f64).collect();
        let c = fornberg(t, &nodes);
        let (mut val, mut der) = ([0.0; 4], [0.0; 4]);
        for (k, w) in c.iter().enumerate() {
            let v = f(lp[(start + k as isize).rem_euclid(m) as usize]);
            for d in 0..4 {
                val[d] += w[0] * v[d];
                der[d] += w[1] * v[d];
            }
        }
        (val, der)
    }
}

impl Chart for MeshChart<'_> {
    fn local(&self, x: V2) -> Result<Local> {
        let [(lam, dl, ddl), (psi, dpsi, ddpsi)] = self.fit(x)?;
        let e = (2.0 * lam).exp();
        Ok(Local {
            g: [[e, 0.0], [0.0, e]],
            dg: [
                [[2.0 * e * dl[0], 0.0], [0.0, 2.0 * e * dl[0]]],
                [[2.0 * e * dl[1], 0.0], [0.0, 2.0 * e * dl[1]]],
            ],
            psi,
            dpsi,
            ddpsi,
            k: -(ddl[0][0] + ddl[1][1]) / e,
        })
    }

    fn boundary(&self, side: usize, t: f64) -> BoundaryPoint {
        let verts = &self.surface.mesh().vertices;
        let (val, der) = self.periodic(side, t, |v| {
            [verts[v][0], verts[v][1], self.kappa[v], self.normal_derivative[v]]
        });
        BoundaryPoint {
            x: [val[0], val[1]],
            dx: [der[0], der[1]],
            kappa: val[2],
            normal_derivative: val[3],
        }
    }

    fn project(&self, side: usize, x: V2) -> f64 {
        let lp = &self.loops[side];
        let verts = &self.surface.mesh().vertices;
        let dist = |v: usize| (verts[v][0] - x[0]).hypot(verts[v][1] - x[1]);
        let mut t = (0..lp.len()).min_by(|&a, &b| dist(lp[a]).total_cmp(&dist(lp[b]))).unwrap() as f64;
        // Newton on ⟨b(t) − x, b'(t)⟩ with a finite-difference derivative
        let f = |t: f64| {
            let b = self.boundary(side, t);
            (b.x[0] - x[0]) * b.dx[0] + (b.x[1] - x[1]) * b.dx[1]
        };
        for _ in 0..20 {
            let h = 1e-5;
            let d = (f(t + h) - f(t - h)) / (2.0 * h);
            if !(d > 0.0) {
                break;
            }
            let step = (f(t) / d).clamp(-0.5, 0.5);
            t -= step;
            if step.abs() < 1e-14 {
                break;
            }
        }
        t
    }
}

/// Chart of an annulus-type surface.
pub(crate) fn chart_of(surface: &Surface) -> Result<Box<dyn Chart + '_>> {
    match surface {
        Surface::Warped(w) if w.kind() == WarpedKind::Annulus => Ok(Box::new(WarpedChart { metric: w })),
        Surface::Conformal(c) => Ok(Box::new(MeshChart::new(c)?)),
        _ => Err(Error::Domain("geodesics between boundary circles need an annulus".into())),
    }
}
