//! Band-limited real fields on a flat torus.
//!
//! A field is `Σ_k Re[c_k e^{2πi k·θ}]` where `θ = xB⁻¹` are the lattice
//! coordinates of the Euclidean point `x`. Coefficients are stored in a
//! canonical half-lattice (first nonzero entry of `k` positive) so every
//! real field has exactly one representation.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::systole::FlatTorus;

#[derive(Debug, Clone, PartialEq)]
struct Mode {
    k: Vec<i64>,
    c: [f64; 2],
    /// Euclidean wave vector `2πB⁻¹k`.
    wave: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FourierField {
    dim: usize,
    binv: Vec<Vec<f64>>,
    modes: Vec<Mode>,
}

pub(crate) fn inverse_basis(torus: &FlatTorus) -> Vec<Vec<f64>> {
    let m = torus.dimension();
    let b = DMatrix::from_fn(m, m, |i, j| torus.basis()[i][j]);
    let inv = b.try_inverse().expect("validated basis");
    (0..m).map(|i| (0..m).map(|j| inv[(i, j)]).collect()).collect()
}

fn canonical(k: &[i64], c: [f64; 2]) -> (Vec<i64>, [f64; 2]) {
    match k.iter().find(|&&v| v != 0) {
        None => (k.to_vec(), [c[0], 0.0]),
        Some(&v) if v < 0 => (k.iter().map(|x| -x).collect(), [c[0], -c[1]]),
        Some(_) => (k.to_vec(), c),
    }
}

impl FourierField {
    /// Sums the given coefficients after folding each `k` into the
    /// canonical half-lattice.
    pub fn new(torus: &FlatTorus, coeffs: impl IntoIterator<Item = (Vec<i64>, [f64; 2])>) -> Result<Self> {
        let dim = torus.dimension();
        let mut map: BTreeMap<Vec<i64>, [f64; 2]> = BTreeMap::new();
        for (k, c) in coeffs {
            if k.len() != dim {
                return Err(Error::Schema(format!(
                    "mode {k:?} has {} entries, torus dimension is {dim}",
                    k.len()
                )));
            }
            if !c[0].is_finite() || !c[1].is_finite() {
                return Err(Error::Schema(format!("mode {k:?} has a non-finite coefficient")));
            }
            let (k, c) = canonical(&k, c);
            let e = map.entry(k).or_insert([0.0; 2]);
            e[0] += c[0];
            e[1] += c[1];
        }
        Ok(Self::from_map(dim, inverse_basis(torus), map))
    }

    fn from_map(dim: usize, binv: Vec<Vec<f64>>, map: BTreeMap<Vec<i64>, [f64; 2]>) -> Self {
        let modes = map
            .into_iter()
            .filter(|(_, c)| c[0] != 0.0 || c[1] != 0.0)
            .map(|(k, c)| {
                let wave = (0..dim)
                    .map(|i| TAU * (0..dim).map(|l| binv[i][l] * k[l] as f64).sum::<f64>())
                    .collect();
                Mode { k, c, wave }
            })
            .collect();
        FourierField { dim, binv, modes }
    }

    pub fn constant(torus: &FlatTorus, value: f64) -> Self {
        Self::new(torus, [(vec![0; torus.dimension()], [value, 0.0])]).expect("finite constant")
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    /// Canonical `(k, [re, im])` pairs with nonzero coefficient.
    pub fn coefficients(&self) -> impl Iterator<Item = (&[i64], [f64; 2])> {
        self.modes.iter().map(|m| (m.k.as_slice(), m.c))
    }

    /// Largest `|kᵢ|` over the support.
    pub fn bandwidth(&self) -> i64 {
        self.modes
            .iter()
            .flat_map(|m| m.k.iter().map(|v| v.abs()))
            .max()
            .unwrap_or(0)
    }

    /// Average over the torus: the real part of the `k = 0` coefficient.
    pub fn mean(&self) -> f64 {
        self.modes
            .iter()
            .find(|m| m.k.iter().all(|&v| v == 0))
            .map_or(0.0, |m| m.c[0])
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.modes
            .iter()
            .map(|m| {
                let (s, c) = phase(&m.wave, x).sin_cos();
                m.c[0] * c - m.c[1] * s
            })
            .sum()
    }

    /// Value and Euclidean gradient.
    pub fn gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let mut g = vec![0.0; self.dim];
        let mut v = 0.0;
        for m in &self.modes {
            let (s, c) = phase(&m.wave, x).sin_cos();
            v += m.c[0] * c - m.c[1] * s;
            let d = -m.c[0] * s - m.c[1] * c;
            for (gi, w) in g.iter_mut().zip(&m.wave) {
                *gi += d * w;
            }
        }
        (v, g)
    }

    /// Flat Laplacian, applied mode by mode.
    pub fn laplacian(&self, x: &[f64]) -> f64 {
        self.modes
            .iter()
            .map(|m| {
                let (s, c) = phase(&m.wave, x).sin_cos();
                -norm_sq(&m.wave) * (m.c[0] * c - m.c[1] * s)
            })
            .sum()
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &FourierField, b: f64) -> FourierField {
        let mut map: BTreeMap<Vec<i64>, [f64; 2]> = BTreeMap::new();
        for (f, s) in [(self, a), (other, b)] {
            for m in &f.modes {
                let e = map.entry(m.k.clone()).or_insert([0.0; 2]);
                e[0] += s * m.c[0];
                e[1] += s * m.c[1];
            }
        }
        Self::from_map(self.dim, self.binv.clone(), map)
    }

    pub fn scaled(&self, a: f64) -> FourierField {
        self.combine(a, &FourierField::from_map(self.dim, self.binv.clone(), BTreeMap::new()), 0.0)
    }

    /// The zero-mean solution `v` of `Δv = −self + mean(self)`.
    pub fn inverse_laplacian(&self) -> FourierField {
        let map = self
            .modes
            .iter()
            .filter(|m| m.k.iter().any(|&v| v != 0))
            .map(|m| {
                let w = norm_sq(&m.wave);
                (m.k.clone(), [m.c[0] / w, m.c[1] / w])
            })
            .collect();
        Self::from_map(self.dim, self.binv.clone(), map)
    }
}

fn phase(wave: &[f64], x: &[f64]) -> f64 {
    wave.iter().zip(x).map(|(w, x)| w * x).sum()
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Symmetric (0,2)-tensor field with band-limited components in the
/// Euclidean coordinates of the torus cover.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    dim: usize,
    /// Upper triangle, row-major.
    components: Vec<FourierField>,
}

fn packed(dim: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * dim - i * (i + 1) / 2 + j
}

impl TensorField {
    pub fn zero(torus: &FlatTorus) -> Self {
        let dim = torus.dimension();
        TensorField {
            dim,
            components: vec![FourierField::constant(torus, 0.0); dim * (dim + 1) / 2],
        }
    }

    /// Spatially constant tensor.
    pub fn constant(torus: &FlatTorus, value: &[Vec<f64>]) -> Result<Self> {
        let dim = torus.dimension();
        if value.len() != dim || value.iter().any(|r| r.len() != dim) {
            return Err(Error::Domain(format!("constant tensor must be {dim}×{dim}")));
        }
        let mut t = Self::zero(torus);
        for i in 0..dim {
            for j in i..dim {
                if (value[i][j] - value[j][i]).abs() > 1e-14 * (value[i][j].abs() + 1.0) {
                    return Err(Error::Domain("constant tensor is not symmetric".into()));
                }
                t.components[packed(dim, i, j)] = FourierField::constant(torus, value[i][j]);
            }
        }
        Ok(t)
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn component(&self, i: usize, j: usize) -> &FourierField {
        &self.components[packed(self.dim, i, j)]
    }

    pub fn set_component(&mut self, i: usize, j: usize, f: FourierField) {
        assert_eq!(f.dimension(), self.dim);
        self.components[packed(self.dim, i, j)] = f;
    }

    pub fn value(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.dim]; self.dim];
        for i in 0..self.dim {
            for j in i..self.dim {
                let v = self.component(i, j).value(x);
                out[i][j] = v;
                out[j][i] = v;
            }
        }
        out
    }

    /// `tr_γ Q` for the flat metric.
    pub fn trace(&self) -> FourierField {
        let mut t = self.component(0, 0).clone();
        for i in 1..self.dim {
            t = t.combine(1.0, self.component(i, i), 1.0);
        }
        t
    }

    pub fn scaled(&self, a: f64) -> TensorField {
        TensorField {
            dim: self.dim,
            components: self.components.iter().map(|c| c.scaled(a)).collect(),
        }
    }

    pub fn bandwidth(&self) -> i64 {
        self.components.iter().map(|c| c.bandwidth()).max().unwrap_or(0)
    }
}

/// Random symmetric tensor with `modes` coefficients per component drawn
/// from `|kᵢ| ≤ bandwidth`, entries uniform in `[−amplitude, amplitude]`.
pub fn random_band_limited(
    rng: &mut impl Rng,
    torus: &FlatTorus,
    bandwidth: i64,
    modes: usize,
    amplitude: f64,
) -> TensorField {
    let dim = torus.dimension();
    let mut t = TensorField::zero(torus);
    for i in 0..dim {
        for j in i..dim {
            let coeffs: Vec<(Vec<i64>, [f64; 2])> = (0..modes)
                .map(|_| {
                    let k = (0..dim).map(|_| rng.gen_range(-bandwidth..=bandwidth)).collect();
                    let c = [
                        rng.gen_range(-amplitude..=amplitude),
                        rng.gen_range(-amplitude..=amplitude),
                    ];
                    (k, c)
                })
                .collect();
            t.set_component(i, j, FourierField::new(torus, coeffs).expect("finite coefficients"));
        }
    }
    t
}

/// The points `Σ_l (j_l / per_dim) b_l` of a uniform lattice-coordinate grid.
pub fn torus_grid(torus: &FlatTorus, per_dim: usize) -> Vec<Vec<f64>> {
    let m = torus.dimension();
    let total = per_dim.pow(m as u32);
    (0..total)
        .map(|mut idx| {
            let mut x = vec![0.0; m];
            for l in 0..m {
                let j = idx % per_dim;
                idx /= per_dim;
                let th = j as f64 / per_dim as f64;
                for (c, xc) in x.iter_mut().enumerate() {
                    *xc += th * torus.basis()[l][c];
                }
            }
            x
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_folding_preserves_values() {
        let t = FlatTorus::new(vec![vec![1.0, 0.2], vec![0.0, 1.5]]).unwrap();
        let f = FourierField::new(&t, [(vec![-1, 2], [0.3, 0.7]), (vec![0, 0], [1.0, 5.0])]).unwrap();
        let x = [0.37, -0.81];
        let th0 = x[0];
        let th1 = (x[1] - 0.2 * x[0]) / 1.5;
        let ph = TAU * (-th0 + 2.0 * th1);
        let direct = 0.3 * ph.cos() - 0.7 * ph.sin() + 1.0;
        assert!((f.value(&x) - direct).abs() < 1e-14);
        assert_eq!(f.mean(), 1.0);
        assert_eq!(f.coefficients().count(), 2);
    }
}
