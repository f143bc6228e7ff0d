//! Level sets of the distance to the boundary: the area, length and source
//! statistics `A(s)`, `L(s)`, `∫_{Ω(s)}(Δψ − K)`, the monotone quantity
//! `J(s) = G(l − s)^{n−1} I(s)`, and the disk case of the boundary
//! inequality.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::comparison::{rate, ComparisonProfile};
use crate::error::{Error, Result};
use crate::surfaces::{ConformalSurface, Surface, WarpedKind};

mod fmm;

pub use fmm::distance_field;

/// Statistics of one level `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub s: f64,
    /// Area of `{u ≤ s}`.
    pub area: f64,
    /// Length of `{u = s}` seen from `{u > s}`.
    pub length: f64,
    /// `∫_{Ω(s)} (Δψ − K)` with `Ω(s) = {u > s}`.
    pub source: f64,
    pub i: f64,
    pub j: f64,
    /// Connected components of the level set.
    pub components: usize,
    pub flagged: bool,
}

/// Level-set statistics of one surface on a grid of levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSetTrace {
    pub n: u32,
    /// Inradius `max u`.
    pub l: f64,
    pub total_area: f64,
    pub rows: Vec<TraceRow>,
}

/// `count` uniform levels in `(0, l)` leaving out bands of relative width
/// `band` at both ends.
pub fn default_grid(l: f64, count: usize, band: f64) -> Vec<f64> {
    let (a, b) = (band * l, (1.0 - band) * l);
    (0..count)
        .map(|i| a + (b - a) * i as f64 / (count - 1).max(1) as f64)
        .collect()
}

/// The 512-level grid with 1% end bands.
pub fn standard_grid(l: f64) -> Vec<f64> {
    default_grid(l, 512, 0.01)
}

/// Inradius of a surface: `l − s_lo` for warped disks, `max u` on meshes.
pub fn inradius(surface: &Surface) -> Result<f64> {
    match surface {
        Surface::Warped(w) => Ok(w.l() - w.s_lo()),
        Surface::Conformal(c) => Ok(distance_field(c)?.into_iter().fold(0.0, f64::max)),
    }
}

struct LevelStats {
    area_above: f64,
    length: f64,
    source: f64,
    components: usize,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn mesh_level(surface: &ConformalSurface, u: &[f64], density: &[f64], s: f64) -> LevelStats {
    let mesh = surface.mesh();
    let mut area_above = 0.0;
    let mut length = 0.0;
    let mut source = 0.0;
    let mut edge_ids = std::collections::HashMap::new();
    let mut links = Vec::new();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let p = surface.layout(t);
        let uv = [u[tri[0]], u[tri[1]], u[tri[2]]];
        let fv = [density[tri[0]], density[tri[1]], density[tri[2]]];
        let inside: Vec<usize> = (0..3).filter(|&k| uv[k] > s).collect();
        if inside.is_empty() {
            continue;
        }
        if inside.len() == 3 {
            let a = surface.triangle_area(t);
            area_above += a;
            source += a * (fv[0] + fv[1] + fv[2]) / 3.0;
            continue;
        }
        // crossing points on edges (k, m) with exactly one endpoint above s
        let mut cuts = Vec::with_capacity(2);
        for k in 0..3 {
            let m = (k + 1) % 3;
            if (uv[k] > s) != (uv[m] > s) {
                let w = (s - uv[k]) / (uv[m] - uv[k]);
                let pt = [p[k][0] + w * (p[m][0] - p[k][0]), p[k][1] + w * (p[m][1] - p[k][1])];
                let f = fv[k] + w * (fv[m] - fv[k]);
                let key = crate::surfaces::mesh::edge_key(tri[k], tri[m]);
                cuts.push((k, m, pt, f, key));
            }
        }
        let (a, b) = (cuts[0].2, cuts[1].2);
        length += (a[0] - b[0]).hypot(a[1] - b[1]);
        let next = edge_ids.len();
        let ia = *edge_ids.entry(cuts[0].4).or_insert(next);
        let next = edge_ids.len();
        let ib = *edge_ids.entry(cuts[1].4).or_insert(next);
        links.push((ia, ib));
        // polygon of the part above s, in boundary order of the triangle
        let mut poly: Vec<([f64; 2], f64)> = Vec::with_capacity(4);
        for k in 0..3 {
            if uv[k] > s {
                poly.push((p[k], fv[k]));
            }
            for c in &cuts {
                if c.0 == k {
                    poly.push((c.2, c.3));
                }
            }
        }
        for w in 1..poly.len() - 1 {
            let (p0, p1, p2) = (poly[0].0, poly[w].0, poly[w + 1].0);
            let ar = 0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0])).abs();
            area_above += ar;
            source += ar * (poly[0].1 + poly[w].1 + poly[w + 1].1) / 3.0;
        }
    }
    let mut parent: Vec<usize> = (0..edge_ids.len()).collect();
    for (a, b) in links {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
        }
    }
    let components = (0..parent.len()).filter(|&x| find(&mut parent, x) == x).count();
    LevelStats {
        area_above,
        length,
        source,
        components,
    }
}

fn check_grid(grid: &[f64], l: f64) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Range("empty level grid".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Range("level grid must be strictly increasing".into()));
    }
    if !(grid[0] > 0.0) || !(*grid.last().unwrap() < l) {
        return Err(Error::Range(format!("level grid must lie inside (0, {l})")));
    }
    Ok(())
}

fn assemble(n: u32, l: f64, profile: &ComparisonProfile, s: f64, length: f64, source: f64) -> Result<(f64, f64)> {
    let g = profile.g(l - s)?;
    let i = std::f64::consts::TAU - (n as f64 - 1.0) * rate(g, n) * length + source;
    Ok((i, g.powi(n as i32 - 1) * i))
}

fn flag_topology_changes(rows: &mut [TraceRow]) {
    let m = rows.len();
    for k in 0..m {
        let prev = k > 0 && rows[k - 1].components != rows[k].components;
        let next = k + 1 < m && rows[k + 1].components != rows[k].components;
        rows[k].flagged = prev || next;
    }
}

/// Samples the level-set statistics of a disk on the given levels.
pub fn trace(surface: &Surface, profile: &ComparisonProfile, grid: &[f64]) -> Result<LevelSetTrace> {
    let n = surface.n();
    if profile.n() != n {
        return Err(Error::Domain(format!(
            "profile dimension {} does not match surface dimension {n}",
            profile.n()
        )));
    }
    if !surface.is_disk() {
        return Err(Error::Domain("level-set traces are defined for disks".into()));
    }
    match surface {
        Surface::Warped(w) => {
            let l = w.l();
            check_grid(grid, l)?;
            if l > profile.s_max() * (1.0 + 1e-12) {
                return Err(Error::Range(format!("inradius {l} exceeds the profile horizon")));
            }
            debug_assert_eq!(w.kind(), WarpedKind::Disk);
            let total = w.total_area();
            let rows = grid
                .iter()
                .map(|&s| {
                    let t = l - s;
                    let length = w.period() * w.phi(t)?[0];
                    let source = w.source_below(t)?;
                    let (i, j) = assemble(n, l, profile, s, length, source)?;
                    Ok(TraceRow {
                        s,
                        area: total - w.area_below(t)?,
                        length,
                        source,
                        i,
                        j,
                        components: 1,
                        flagged: false,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(LevelSetTrace {
                n,
                l,
                total_area: total,
                rows,
            })
        }
        Surface::Conformal(c) => {
            let u = distance_field(c)?;
            let l = u.iter().copied().fold(0.0, f64::max);
            check_grid(grid, l)?;
            if l > profile.s_max() * (1.0 + 1e-12) {
                return Err(Error::Range(format!("inradius {l} exceeds the profile horizon")));
            }
            let density = c.source_density();
            let total = c.total_area();
            let mut rows = grid
                .iter()
                .map(|&s| {
                    let st = mesh_level(c, &u, &density, s);
                    let (i, j) = assemble(n, l, profile, s, st.length, st.source)?;
                    Ok(TraceRow {
                        s,
                        area: total - st.area_above,
                        length: st.length,
                        source: st.source,
                        i,
                        j,
                        components: st.components,
                        flagged: false,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            flag_topology_changes(&mut rows);
            Ok(LevelSetTrace {
                n,
                l,
                total_area: total,
                rows,
            })
        }
    }
}

impl LevelSetTrace {
    /// Writes the columns `s, A, L, I, J, flagged`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["s", "A", "L", "I", "J", "flagged"])?;
        for r in &self.rows {
            w.write_record([
                format!("{:.17e}", r.s),
                format!("{:.17e}", r.area),
                format!("{:.17e}", r.length),
                format!("{:.17e}", r.i),
                format!("{:.17e}", r.j),
                (r.flagged as u8).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Largest deviation of `J` from a constant.
    pub fn max_deviation_from(&self, value: f64) -> f64 {
        self.rows.iter().fold(0.0, |m, r| m.max((r.j - value).abs()))
    }
}

/// Empirical constants for the almost-monotonicity of `A`, `L` and `I`:
/// the smallest `C` with `A − Cs` and `L − Cs` nonincreasing and `I + Cs`
/// nondecreasing on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlmostMonotoneConstants {
    pub area: f64,
    pub length: f64,
    pub i: f64,
}

pub fn empirical_constants(trace: &LevelSetTrace) -> AlmostMonotoneConstants {
    let mut c = AlmostMonotoneConstants {
        area: 0.0,
        length: 0.0,
        i: 0.0,
    };
    for w in trace.rows.windows(2) {
        let ds = w[1].s - w[0].s;
        c.area = c.area.max((w[1].area - w[0].area) / ds);
        c.length = c.length.max((w[1].length - w[0].length) / ds);
        c.i = c.i.max(-(w[1].i - w[0].i) / ds);
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityOptions {
    /// Allowed decrease of `J` between consecutive unflagged levels.
    pub tolerance: f64,
    /// Allowed negativity of the hypothesis residual.
    pub hypothesis_tolerance: f64,
}

impl Default for MonotonicityOptions {
    fn default() -> Self {
        MonotonicityOptions {
            tolerance: 1e-5,
            hypothesis_tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    /// Smallest `J(s₁) − J(s₀)` over consecutive unflagged levels.
    pub min_increment: f64,
    /// Level `s₀` where the smallest increment occurs.
    pub worst_level: f64,
    pub flagged_levels: Vec<f64>,
    /// `J` at the last level, to be compared with `2π`.
    pub j_end: f64,
    pub min_hypothesis_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Checks that `J` is nondecreasing; refuses surfaces that violate the
/// hypothesis.
pub fn monotonicity_report(
    surface: &Surface,
    trace: &LevelSetTrace,
    opts: MonotonicityOptions,
) -> Result<MonotonicityReport> {
    let residual = surface.hypothesis_residual();
    let (idx, min_res) = residual
        .min()
        .ok_or_else(|| Error::Precondition("hypothesis residual has no samples".into()))?;
    if min_res < -opts.hypothesis_tolerance {
        let p = residual.points[idx];
        return Err(Error::Precondition(format!(
            "hypothesis residual {min_res:.6e} < 0 at sample {idx} ({:.6}, {:.6})",
            p[0], p[1]
        )));
    }
    let mut min_increment = f64::INFINITY;
    let mut worst_level = f64::NAN;
    for w in trace.rows.windows(2) {
        if w[0].flagged || w[1].flagged {
            continue;
        }
        let d = w[1].j - w[0].j;
        if d < min_increment {
            min_increment = d;
            worst_level = w[0].s;
        }
    }
    Ok(MonotonicityReport {
        min_increment,
        worst_level,
        flagged_levels: trace.rows.iter().filter(|r| r.flagged).map(|r| r.s).collect(),
        j_end: trace.rows.last().map_or(f64::NAN, |r| r.j),
        min_hypothesis_residual: min_res,
        tolerance: opts.tolerance,
        pass: min_increment >= -opts.tolerance,
    })
}

/// Both sides of the boundary inequality for a disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiskInequalityReport {
    pub n: u32,
    pub boundary_length: f64,
    /// `inf (⟨∇ψ,η⟩ + κ − (n−1))`.
    pub inf_margin: f64,
    /// `∫ (⟨∇ψ,η⟩ + κ − (n−1))`.
    pub integral_margin: f64,
    /// `2|∂Σ|ⁿ·inf(…)`.
    pub lhs_inf: f64,
    /// `2|∂Σ|^{n−1}·∫(…)`.
    pub lhs_integral: f64,
    /// `(4π/n)ⁿ`.
    pub rhs: f64,
    pub ratio_inf: f64,
    pub ratio_integral: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn theorem1_disk_report(surface: &Surface, tolerance: f64) -> Result<DiskInequalityReport> {
    if !surface.is_disk() {
        return Err(Error::Domain("the disk inequality needs a disk".into()));
    }
    let n = surface.n();
    let nf = n as f64;
    let data = surface.boundary_data();
    let inf_margin = data.inf_shifted(nf - 1.0);
    let integral_margin = data.integral_shifted(nf - 1.0);
    let len = data.length;
    let lhs_inf = 2.0 * len.powi(n as i32) * inf_margin;
    let lhs_integral = 2.0 * len.powi(n as i32 - 1) * integral_margin;
    let rhs = (4.0 * std::f64::consts::PI / nf).powi(n as i32);
    let (ratio_inf, ratio_integral) = (lhs_inf / rhs, lhs_integral / rhs);
    Ok(DiskInequalityReport {
        n,
        boundary_length: len,
        inf_margin,
        integral_margin,
        lhs_inf,
        lhs_integral,
        rhs,
        ratio_inf,
        ratio_integral,
        tolerance,
        pass: ratio_inf <= 1.0 + tolerance && ratio_integral <= 1.0 + tolerance,
    })
}

/// `G(l)^{n−1}·(−(n−1)(1 − G(l)⁻ⁿ)^{1/2}|∂Σ| + ∫(⟨∇ψ,η⟩ + κ))`, the limit of
/// `J` at `s = 0` predicted by Gauss–Bonnet and the divergence theorem.
pub fn j_limit_at_zero(surface: &Surface, profile: &ComparisonProfile, l: f64) -> Result<f64> {
    let n = surface.n();
    let data = surface.boundary_data();
    let g = profile.g(l)?;
    let inner = -(n as f64 - 1.0) * rate(g, n) * data.length + data.integral_shifted(0.0);
    Ok(g.powi(n as i32 - 1) * inner)
}
