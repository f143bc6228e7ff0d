//! Fast marching for the distance to the boundary on a triangulated
//! surface, with unfolding of obtuse triangles.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::surfaces::mesh::edge_key;
use crate::surfaces::ConformalSurface;

#[derive(Clone, Copy, PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // reversed so the heap pops the smallest distance first
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

type P = [f64; 2];

fn sub(a: P, b: P) -> P {
    [a[0] - b[0], a[1] - b[1]]
}

fn dot(a: P, b: P) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn norm(a: P) -> f64 {
    a[0].hypot(a[1])
}

fn cross(a: P, b: P) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Planar-front update of `C` from known values at `A` and `B`; `None`
/// when the characteristic through `C` does not cross the segment `AB`.
fn two_point(pa: P, ua: f64, pb: P, ub: f64, pc: P) -> Option<f64> {
    let e = sub(pb, pa);
    let c = norm(e);
    let delta = ub - ua;
    if !(delta.abs() < c) {
        return None;
    }
    let eh = [e[0] / c, e[1] / c];
    let ac = sub(pc, pa);
    let side = if cross(e, ac) >= 0.0 { 1.0 } else { -1.0 };
    let nh = [-eh[1] * side, eh[0] * side];
    let cos = delta / c;
    let sin = (1.0 - cos * cos).sqrt();
    let d = [cos * eh[0] + sin * nh[0], cos * eh[1] + sin * nh[1]];
    let dn = dot(d, nh);
    if dn <= 0.0 {
        return None;
    }
    let t = dot(ac, nh) / dn;
    let foot = dot(sub(ac, [t * d[0], t * d[1]]), eh);
    if foot < -1e-12 * c || foot > c * (1.0 + 1e-12) {
        return None;
    }
    Some(ua + dot(d, ac))
}

/// Places a point at distances `da` from `pa` and `db` from `pb`, on the
/// side of line `AB` opposite to `away`.
fn place(pa: P, pb: P, da: f64, db: f64, away: P) -> Option<P> {
    let e = sub(pb, pa);
    let c = norm(e);
    let x = (da * da + c * c - db * db) / (2.0 * c);
    let y2 = da * da - x * x;
    if !(y2 > 0.0) {
        return None;
    }
    let eh = [e[0] / c, e[1] / c];
    let side = if cross(e, sub(away, pa)) >= 0.0 { -1.0 } else { 1.0 };
    let nh = [-eh[1] * side, eh[0] * side];
    let y = y2.sqrt();
    Some([pa[0] + x * eh[0] + y * nh[0], pa[1] + x * eh[1] + y * nh[1]])
}

struct Marcher<'a> {
    surface: &'a ConformalSurface,
    u: Vec<f64>,
    accepted: Vec<bool>,
}

impl Marcher<'_> {
    fn third(&self, t: usize, a: usize, b: usize) -> usize {
        let tri = self.surface.mesh().triangles[t];
        *tri.iter().find(|&&v| v != a && v != b).unwrap()
    }

    /// Walks across edge `(a, b)` away from triangle `from` until a vertex
    /// inside the angular cone at `C` spanned by `A` and `B` is found.
    fn unfold(&self, pc: P, from: usize, a: (usize, P), b: (usize, P), depth: usize) -> Option<(usize, P)> {
        if depth == 0 {
            return None;
        }
        let tris = &self.surface.topology().edge_triangles[&edge_key(a.0, b.0)];
        let &next = tris.iter().find(|&&t| t != from)?;
        let d = self.third(next, a.0, b.0);
        let pd = place(
            a.1,
            b.1,
            self.surface.edge_length(a.0, d),
            self.surface.edge_length(b.0, d),
            pc,
        )?;
        let (ca, cb, cd) = (sub(a.1, pc), sub(b.1, pc), sub(pd, pc));
        let orient = cross(ca, cb).signum();
        let left = cross(ca, cd) * orient;
        let right = cross(cd, cb) * orient;
        if left > 0.0 && right > 0.0 {
            if dot(ca, cd) >= 0.0 && dot(cd, cb) >= 0.0 {
                return Some((d, pd));
            }
            // still obtuse on one side: split further toward the wide angle
            return if dot(ca, cd) < 0.0 {
                self.unfold(pc, next, a, (d, pd), depth - 1)
            } else {
                self.unfold(pc, next, (d, pd), b, depth - 1)
            };
        }
        if left <= 0.0 {
            self.unfold(pc, next, (d, pd), b, depth - 1)
        } else {
            self.unfold(pc, next, a, (d, pd), depth - 1)
        }
    }

    fn candidate(&self, c: usize) -> f64 {
        let s = self.surface;
        let mut best = f64::INFINITY;
        for &v in s.neighbors(c) {
            if self.accepted[v] {
                best = best.min(self.u[v] + s.edge_length(v, c));
            }
        }
        for &t in &s.topology().vertex_triangles[c] {
            let tri = s.mesh().triangles[t];
            let k = tri.iter().position(|&v| v == c).unwrap();
            let (ia, ib) = ((k + 1) % 3, (k + 2) % 3);
            let (a, b) = (tri[ia], tri[ib]);
            let p = s.layout(t);
            let (pa, pb, pc) = (p[ia], p[ib], p[k]);
            let obtuse = dot(sub(pa, pc), sub(pb, pc)) < 0.0;
            if obtuse {
                if let Some((d, pd)) = self.unfold(pc, t, (a, pa), (b, pb), 10) {
                    if self.accepted[d] {
                        best = best.min(self.u[d] + norm(sub(pd, pc)));
                        for (x, px) in [(a, pa), (b, pb)] {
                            if self.accepted[x] {
                                if let Some(v) = two_point(px, self.u[x], pd, self.u[d], pc) {
                                    best = best.min(v);
                                }
                            }
                        }
                    }
                    continue;
                }
            }
            if self.accepted[a] && self.accepted[b] {
                if let Some(v) = two_point(pa, self.u[a], pb, self.u[b], pc) {
                    best = best.min(v);
                }
            }
        }
        best
    }
}

/// Distance to the boundary at every vertex, by fast marching.
pub fn distance_field(surface: &ConformalSurface) -> Result<Vec<f64>> {
    let nv = surface.mesh().vertex_count();
    let boundary = &surface.mesh().boundary;
    if !boundary.iter().any(|&b| b) {
        return Err(Error::Mesh("surface has no boundary".into()));
    }
    let mut m = Marcher {
        surface,
        u: vec![f64::INFINITY; nv],
        accepted: vec![false; nv],
    };
    let mut heap = BinaryHeap::new();
    for v in 0..nv {
        if boundary[v] {
            m.u[v] = 0.0;
            m.accepted[v] = true;
        }
    }
    for v in 0..nv {
        if boundary[v] {
            for &w in surface.neighbors(v) {
                if !m.accepted[w] {
                    let c = m.candidate(w);
                    if c < m.u[w] {
                        m.u[w] = c;
                        heap.push(Entry(c, w));
                    }
                }
            }
        }
    }
    while let Some(Entry(d, v)) = heap.pop() {
        if m.accepted[v] || d > m.u[v] {
            continue;
        }
        m.accepted[v] = true;
        for &t in &surface.topology().vertex_triangles[v] {
            for &w in &surface.mesh().triangles[t] {
                if !m.accepted[w] {
                    let c = m.candidate(w);
                    if c < m.u[w] {
                        m.u[w] = c;
                        heap.push(Entry(c, w));
                    }
                }
            }
        }
        // unfolded updates may reach beyond the one-ring
        for &w in surface.neighbors(v) {
            for &x in surface.neighbors(w) {
                if !m.accepted[x] {
                    let c = m.candidate(x);
                    if c < m.u[x] {
                        m.u[x] = c;
                        heap.push(Entry(c, x));
                    }
                }
            }
        }
    }
    if let Some(v) = m.u.iter().position(|x| !x.is_finite()) {
        return Err(Error::Mesh(format!("vertex {v} is unreachable from the boundary")));
    }
    Ok(m.u)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_reproduces_plane_wave() {
        let d = [0.6f64, 0.8];
        let u = |p: P| dot(d, p);
        let (pa, pb, pc) = ([0.0, 0.0], [1.0, 0.0], [0.8, 0.6]);
        let v = two_point(pa, u(pa), pb, u(pb), pc).unwrap();
        assert!((v - u(pc)).abs() < 1e-14);
    }

    #[test]
    fn two_point_rejects_outside_cone() {
        let d = [0.99f64, (1.0 - 0.99f64 * 0.99).sqrt()];
        let u = |p: P| dot(d, p);
        let (pa, pb, pc) = ([0.0, 0.0], [1.0, 0.0], [3.0, 0.1]);
        assert!(two_point(pa, u(pa), pb, u(pb), pc).is_none());
    }
}
