//! Triangulated parameter domains: topology checks, boundary loops and a
//! few structured generators.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A planar triangulation. Triangles are counter-clockwise in the plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangleMesh {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary: Vec<bool>,
}

/// Edge-to-triangle incidence and the ordered boundary loops of a mesh.
#[derive(Debug, Clone)]
pub struct Topology {
    /// Triangles incident to each undirected edge `(min, max)`.
    pub edge_triangles: HashMap<(usize, usize), Vec<usize>>,
    /// Triangles incident to each vertex.
    pub vertex_triangles: Vec<Vec<usize>>,
    /// Boundary loops, each traversed with the surface on the left.
    pub loops: Vec<Vec<usize>>,
    pub euler_characteristic: i64,
}

pub(crate) fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl TriangleMesh {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Validates the triangulation as an oriented 2-manifold with boundary
    /// and returns its topology.
    pub fn topology(&self) -> Result<Topology> {
        let nv = self.vertices.len();
        if self.boundary.len() != nv {
            return Err(Error::Mesh(format!(
                "boundary flag count {} does not match vertex count {nv}",
                self.boundary.len()
            )));
        }
        let mut edge_triangles: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        let mut vertex_triangles = vec![Vec::new(); nv];
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(Error::Mesh(format!("triangle {t} references a missing vertex")));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::Mesh(format!("triangle {t} repeats a vertex")));
            }
            let area = signed_area(self.vertices[tri[0]], self.vertices[tri[1]], self.vertices[tri[2]]);
            if !(area > 0.0) {
                return Err(Error::Mesh(format!(
                    "triangle {t} is degenerate or clockwise (signed area {area:e})"
                )));
            }
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                if directed.insert((a, b), t).is_some() {
                    return Err(Error::Mesh(format!("edge ({a}, {b}) is not consistently oriented")));
                }
                edge_triangles.entry(edge_key(a, b)).or_default().push(t);
                vertex_triangles[a].push(t);
            }
        }
        let mut next_on_boundary: HashMap<usize, usize> = HashMap::new();
        let mut on_boundary = vec![false; nv];
        for (&(a, b), tris) in &edge_triangles {
            match tris.len() {
                1 => {
                    // surface lies to the left of the directed edge present in the triangle
                    let (from, to) = if directed.contains_key(&(a, b)) { (a, b) } else { (b, a) };
                    if next_on_boundary.insert(from, to).is_some() {
                        return Err(Error::Mesh(format!("boundary is pinched at vertex {from}")));
                    }
                    on_boundary[a] = true;
                    on_boundary[b] = true;
                }
                2 => {}
                k => {
                    return Err(Error::Mesh(format!("edge ({a}, {b}) has {k} incident triangles")))
                }
            }
        }
        for v in 0..nv {
            if on_boundary[v] && !self.boundary[v] {
                return Err(Error::Mesh(format!("boundary vertex {v} is not marked")));
            }
            if !on_boundary[v] && self.boundary[v] {
                return Err(Error::Mesh(format!("vertex {v} is marked but interior")));
            }
            if vertex_triangles[v].is_empty() {
                return Err(Error::Mesh(format!("vertex {v} is isolated")));
            }
        }
        let mut starts: Vec<usize> = next_on_boundary.keys().copied().collect();
        starts.sort_unstable();
        let mut visited = vec![false; nv];
        let mut loops = Vec::new();
        for start in starts {
            if visited[start] {
                continue;
            }
            let mut lp = vec![start];
            visited[start] = true;
            let mut cur = next_on_boundary[&start];
            while cur != start {
                if visited[cur] {
                    return Err(Error::Mesh("boundary loops intersect".into()));
                }
                visited[cur] = true;
                lp.push(cur);
                cur = *next_on_boundary
                    .get(&cur)
                    .ok_or_else(|| Error::Mesh("open boundary chain".into()))?;
            }
            loops.push(lp);
        }
        let euler_characteristic =
            nv as i64 - edge_triangles.len() as i64 + self.triangles.len() as i64;
        Ok(Topology {
            edge_triangles,
            vertex_triangles,
            loops,
            euler_characteristic,
        })
    }

    /// Largest edge length in the parameter plane.
    pub fn max_edge(&self) -> f64 {
        self.triangles
            .iter()
            .flat_map(|t| (0..3).map(move |k| (t[k], t[(k + 1) % 3])))
            .map(|(a, b)| dist(self.vertices[a], self.vertices[b]))
            .fold(0.0, f64::max)
    }
}

pub(crate) fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

pub(crate) fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Triangular-lattice disk of `rings` hexagonal rings mapped radially onto
/// the round disk of the given radius. All triangles stay acute.
pub fn hex_disk(rings: usize, radius: f64) -> TriangleMesh {
    let n = rings as i64;
    let hex_dist = |q: i64, r: i64| (q.abs() + r.abs() + (q + r).abs()) / 2;
    let mut index = HashMap::new();
    let mut vertices = Vec::new();
    let mut boundary = Vec::new();
    let sqrt3_2 = 3f64.sqrt() / 2.0;
    for q in -n..=n {
        for r in -n..=n {
            let d = hex_dist(q, r);
            if d > n {
                continue;
            }
            let x = q as f64 + 0.5 * r as f64;
            let y = sqrt3_2 * r as f64;
            let norm = x.hypot(y);
            let scale = if norm > 0.0 { d as f64 / norm } else { 0.0 };
            let k = radius / n as f64;
            index.insert((q, r), vertices.len());
            vertices.push([x * scale * k, y * scale * k]);
            boundary.push(d == n);
        }
    }
    let mut triangles = Vec::new();
    for q in -n..=n {
        for r in -n..=n {
            let up = [(q, r), (q + 1, r), (q, r + 1)];
            let down = [(q + 1, r), (q + 1, r + 1), (q, r + 1)];
            for tri in [up, down] {
                if let (Some(&a), Some(&b), Some(&c)) =
                    (index.get(&tri[0]), index.get(&tri[1]), index.get(&tri[2]))
                {
                    triangles.push([a, b, c]);
                }
            }
        }
    }
    TriangleMesh {
        vertices,
        triangles,
        boundary,
    }
}

/// Annulus `r_in ≤ |z| ≤ r_out` with `radial` layers of quads, each split
/// into two triangles, and `angular` vertices per ring.
pub fn annulus(r_in: f64, r_out: f64, radial: usize, angular: usize) -> TriangleMesh {
    let mut vertices = Vec::with_capacity((radial + 1) * angular);
    let mut boundary = Vec::with_capacity((radial + 1) * angular);
    for i in 0..=radial {
        let r = r_in + (r_out - r_in) * i as f64 / radial as f64;
        let shift = if i % 2 == 1 { 0.5 } else { 0.0 };
        for j in 0..angular {
            let th = std::f64::consts::TAU * (j as f64 + shift) / angular as f64;
            vertices.push([r * th.cos(), r * th.sin()]);
            boundary.push(i == 0 || i == radial);
        }
    }
    let id = |i: usize, j: usize| i * angular + (j % angular);
    let mut triangles = Vec::with_capacity(2 * radial * angular);
    for i in 0..radial {
        for j in 0..angular {
            if i % 2 == 0 {
                triangles.push([id(i, j), id(i + 1, j), id(i, j + 1)]);
                triangles.push([id(i, j + 1), id(i + 1, j), id(i + 1, j + 1)]);
            } else {
                triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
                triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            }
        }
    }
    TriangleMesh {
        vertices,
        triangles,
        boundary,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hex_disk_is_a_disk() {
        let m = hex_disk(6, 1.0);
        assert_eq!(m.vertex_count(), 1 + 3 * 6 * 7);
        let topo = m.topology().unwrap();
        assert_eq!(topo.euler_characteristic, 1);
        assert_eq!(topo.loops.len(), 1);
        assert_eq!(topo.loops[0].len(), 36);
        for (v, p) in m.vertices.iter().enumerate() {
            if m.boundary[v] {
                assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn annulus_topology() {
        let m = annulus(1.0, 2.0, 5, 40);
        let topo = m.topology().unwrap();
        assert_eq!(topo.euler_characteristic, 0);
        assert_eq!(topo.loops.len(), 2);
    }

    #[test]
    fn unmarked_boundary_is_rejected() {
        let mut m = hex_disk(2, 1.0);
        let v = m.boundary.iter().position(|&b| b).unwrap();
        m.boundary[v] = false;
        assert!(matches!(m.topology(), Err(Error::Mesh(_))));
    }

    #[test]
    fn degenerate_triangle_is_rejected() {
        let m = TriangleMesh {
            vertices: vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]],
            triangles: vec![[0, 1, 2]],
            boundary: vec![true; 3],
        };
        assert!(matches!(m.topology(), Err(Error::Mesh(_))));
    }

    #[test]
    fn boundary_loop_keeps_surface_on_the_left() {
        let m = hex_disk(3, 1.0);
        let topo = m.topology().unwrap();
        let lp = &topo.loops[0];
        // counter-clockwise traversal has positive enclosed area
        let mut area = 0.0;
        for k in 0..lp.len() {
            let a = m.vertices[lp[k]];
            let b = m.vertices[lp[(k + 1) % lp.len()]];
            area += a[0] * b[1] - a[1] * b[0];
        }
        assert!(area > 0.0);
    }
}
