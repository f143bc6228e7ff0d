//! Constrained systoles of flat tori: the length of the shortest lattice
//! vector `kB` whose winding `k₀` around the distinguished circle is
//! nonzero.
//!
//! The search is a Fincke–Pohst enumeration of the ellipsoid
//! `kᵀ(BBᵀ)k ≤ |e₀B|²`, seeded by the candidate `k = e₀` and shrunk as
//! shorter admissible vectors are found. The constraint `k₀ ≠ 0` is applied
//! at the leaves, and `k₀` is the last coordinate fixed so the constraint
//! prunes nothing above the leaves.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack that keeps equal-length candidates inside the search
/// ellipsoid so ties are resolved deterministically.
const TIE_SLACK: f64 = 1e-12;

/// A flat torus `ℝᵐ / ℤᵐB`. Row `i` of the basis is the `i`-th lattice
/// generator; the winding functional counts the coefficient of the row
/// named by `xi_index`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatTorus {
    basis: Vec<Vec<f64>>,
    #[serde(default)]
    xi_index: usize,
}

impl FlatTorus {
    /// Validates the basis: square, finite, and with positive-definite Gram
    /// matrix. The distinguished direction is row 0.
    pub fn new(basis: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_xi_index(basis, 0)
    }

    pub fn with_xi_index(basis: Vec<Vec<f64>>, xi_index: usize) -> Result<Self> {
        let t = FlatTorus { basis, xi_index };
        t.validate()?;
        Ok(t)
    }

    /// Orthogonal torus with the given periods.
    pub fn rectangular(periods: &[f64]) -> Result<Self> {
        let m = periods.len();
        Self::new(
            (0..m)
                .map(|i| (0..m).map(|j| if i == j { periods[i] } else { 0.0 }).collect())
                .collect(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.basis.len();
        if m == 0 {
            return Err(Error::Domain("torus basis is empty".into()));
        }
        if self.basis.iter().any(|r| r.len() != m) {
            return Err(Error::Domain(format!("torus basis must be {m}×{m}")));
        }
        if self.basis.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Domain("torus basis has non-finite entries".into()));
        }
        if self.xi_index >= m {
            return Err(Error::Domain(format!(
                "xi_index {} out of range for dimension {m}",
                self.xi_index
            )));
        }
        if cholesky(&self.ordered_gram()).is_none() {
            return Err(Error::Domain("torus basis is singular".into()));
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    pub fn xi_index(&self) -> usize {
        self.xi_index
    }

    /// Gram matrix `BBᵀ`.
    pub fn gram(&self) -> Vec<Vec<f64>> {
        let m = self.dimension();
        (0..m)
            .map(|i| (0..m).map(|j| dot(&self.basis[i], &self.basis[j])).collect())
            .collect()
    }

    /// Volume `|det B|` of the fundamental domain.
    pub fn volume(&self) -> f64 {
        let l = cholesky(&self.gram()).expect("validated basis");
        (0..self.dimension()).map(|i| l[i][i]).product()
    }

    /// The lattice vector `kB`.
    pub fn vector(&self, k: &[i64]) -> Vec<f64> {
        let m = self.dimension();
        (0..m)
            .map(|c| (0..m).map(|i| k[i] as f64 * self.basis[i][c]).sum())
            .collect()
    }

    /// Euclidean length `|kB|`, computed from the vector itself so that
    /// equal lattice vectors always report identical lengths.
    pub fn length(&self, k: &[i64]) -> f64 {
        self.vector(k).iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// The torus with every generator multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::with_xi_index(
            self.basis
                .iter()
                .map(|r| r.iter().map(|x| c * x).collect())
                .collect(),
            self.xi_index,
        )
    }

    /// Gram matrix with the distinguished row moved to position 0.
    fn ordered_gram(&self) -> Vec<Vec<f64>> {
        let order = self.order();
        let g = self.gram();
        order
            .iter()
            .map(|&i| order.iter().map(|&j| g[i][j]).collect())
            .collect()
    }

    fn order(&self) -> Vec<usize> {
        let mut order = vec![self.xi_index];
        order.extend((0..self.dimension()).filter(|&i| i != self.xi_index));
        order
    }
}

/// Result of a constrained systole search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Systole {
    pub sigma: f64,
    /// Coefficients `k` of the shortest admissible vector, with positive
    /// winding and lexicographically smallest among ties.
    pub witness: Vec<i64>,
    /// Number of admissible lattice points inspected at the leaves.
    pub visited: usize,
}

/// `σ = min{|kB| : k ∈ ℤᵐ, k_ξ ≠ 0}` with its witness.
pub fn constrained_systole(torus: &FlatTorus) -> Systole {
    let m = torus.dimension();
    let order = torus.order();
    let gram = torus.ordered_gram();
    let r = cholesky(&gram).expect("validated basis");
    // Upper-triangular form kᵀGk = Σᵢ dᵢ (kᵢ + Σ_{j>i} μᵢⱼ kⱼ)².
    let d: Vec<f64> = (0..m).map(|i| r[i][i] * r[i][i]).collect();
    let mu: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|j| if j > i { r[j][i] / r[i][i] } else { 0.0 }).collect())
        .collect();

    let mut e0 = vec![0i64; m];
    e0[torus.xi_index] = 1;
    let mut search = Search {
        torus,
        order: &order,
        d: &d,
        mu: &mu,
        best_len: torus.length(&e0),
        best: e0,
        bound: 0.0,
        k: vec![0; m],
        visited: 0,
    };
    search.bound = search.best_len * search.best_len * (1.0 + TIE_SLACK);
    search.descend(m, 0.0);
    Systole {
        sigma: search.best_len,
        witness: search.best,
        visited: search.visited,
    }
}

struct Search<'a> {
    torus: &'a FlatTorus,
    order: &'a [usize],
    d: &'a [f64],
    mu: &'a [Vec<f64>],
    best: Vec<i64>,
    best_len: f64,
    bound: f64,
    /// Coefficients in the reordered basis.
    k: Vec<i64>,
    visited: usize,
}

impl Search<'_> {
    /// Fixes coordinate `level − 1` given the partial norm of the
    /// coordinates above it.
    fn descend(&mut self, level: usize, partial: f64) {
        if level == 0 {
            self.leaf();
            return;
        }
        let i = level - 1;
        let m = self.k.len();
        let center = -(i + 1..m).map(|j| self.mu[i][j] * self.k[j] as f64).sum::<f64>();
        let room = (self.bound - partial).max(0.0);
        let half = (room / self.d[i]).sqrt();
        let (lo, hi) = ((center - half).floor() as i64, (center + half).ceil() as i64);
        // Only the ξ coordinate is restricted to one sign; the other
        // coordinates range over both.
        let lo = if i == 0 { lo.max(1) } else { lo };
        for v in lo..=hi {
            let t = v as f64 - center;
            let next = partial + self.d[i] * t * t;
            if next <= self.bound {
                self.k[i] = v;
                self.descend(i, next);
            }
        }
        self.k[i] = 0;
    }

    fn leaf(&mut self) {
        if self.k[0] == 0 {
            return;
        }
        self.visited += 1;
        let mut k = vec![0i64; self.k.len()];
        for (pos, &orig) in self.order.iter().enumerate() {
            k[orig] = self.k[pos];
        }
        let len = self.torus.length(&k);
        let tie = (len - self.best_len).abs() <= TIE_SLACK * self.best_len;
        if (len < self.best_len && !tie) || (tie && k < self.best) {
            if len < self.best_len {
                self.best_len = len;
            }
            self.best = k;
            self.bound = self.best_len * self.best_len * (1.0 + TIE_SLACK);
        }
    }
}

/// Exhaustive search over the box `|kᵢ| ≤ radius`, with the same tie rule
/// as [`constrained_systole`]. Exact only when the box contains a shortest
/// admissible vector.
pub fn brute_force_systole(torus: &FlatTorus, radius: i64) -> Systole {
    let m = torus.dimension();
    let xi = torus.xi_index;
    let mut best: Option<(f64, Vec<i64>)> = None;
    let mut visited = 0;
    let mut k = vec![-radius; m];
    loop {
        if k[xi] > 0 {
            visited += 1;
            let len = torus.length(&k);
            let replace = match &best {
                None => true,
                Some((b, bk)) => {
                    let tie = (len - b).abs() <= TIE_SLACK * b;
                    (len < *b && !tie) || (tie && k < *bk)
                }
            };
            if replace {
                let len = best.as_ref().map_or(len, |(b, _)| len.min(*b));
                best = Some((len, k.clone()));
            }
        }
        let mut i = m;
        loop {
            if i == 0 {
                let (sigma, witness) = best.expect("box contains e_xi");
                return Systole { sigma, witness, visited };
            }
            i -= 1;
            if k[i] < radius {
                k[i] += 1;
                break;
            }
            k[i] = -radius;
        }
    }
}

/// Constrained systole of the Horowitz–Myers boundary torus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmSigma {
    /// The smooth-tip period `4π/(n r₀)`.
    pub nominal: f64,
    /// Reported systole: the nominal value, or the true constrained
    /// systole when the nominal circle is not shortest.
    pub sigma: f64,
    pub witness: Vec<i64>,
    /// Set when a fiber is shorter than the nominal period or the search
    /// found an admissible vector shorter than the ξ circle.
    pub flagged: bool,
}

fn hm_period(n: u32, r0: f64) -> Result<f64> {
    if n < 3 {
        return Err(Error::Domain(format!("dimension n = {n} must be at least 3")));
    }
    if !(r0 > 0.0) || !r0.is_finite() {
        return Err(Error::Domain(format!("r0 must be positive, got {r0}")));
    }
    Ok(4.0 * PI / (n as f64 * r0))
}

/// The boundary torus of the Horowitz–Myers metric: the ξ circle of
/// period `4π/(n r₀)` followed by `n − 2` fiber circles. `shear[i]` is the
/// ξ component of fiber generator `i`.
pub fn hm_torus(n: u32, r0: f64, fiber_lengths: &[f64], shear: &[f64]) -> Result<FlatTorus> {
    let period = hm_period(n, r0)?;
    let m = n as usize - 1;
    if fiber_lengths.len() != m - 1 {
        return Err(Error::Domain(format!(
            "expected {} fiber lengths for n = {n}, got {}",
            m - 1,
            fiber_lengths.len()
        )));
    }
    if !shear.is_empty() && shear.len() != m - 1 {
        return Err(Error::Domain(format!(
            "expected {} shear components for n = {n}, got {}",
            m - 1,
            shear.len()
        )));
    }
    if fiber_lengths.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::Domain("fiber lengths must be positive".into()));
    }
    let mut basis = vec![vec![0.0; m]; m];
    basis[0][0] = period;
    for (i, &s) in shear.iter().enumerate() {
        basis[i + 1][0] = s;
    }
    for (i, &l) in fiber_lengths.iter().enumerate() {
        basis[i + 1][i + 1] = l;
    }
    FlatTorus::new(basis)
}

/// `σ = 4π/(n r₀)` for the rectangular Horowitz–Myers torus.
pub fn hm_sigma(n: u32, r0: f64, fiber_lengths: &[f64]) -> Result<HmSigma> {
    hm_sigma_sheared(n, r0, fiber_lengths, &[])
}

pub fn hm_sigma_sheared(n: u32, r0: f64, fiber_lengths: &[f64], shear: &[f64]) -> Result<HmSigma> {
    let torus = hm_torus(n, r0, fiber_lengths, shear)?;
    let nominal = hm_period(n, r0)?;
    let short_fiber = fiber_lengths.iter().any(|&l| l < nominal);
    let sys = constrained_systole(&torus);
    let sheared = sys.sigma < nominal * (1.0 - TIE_SLACK);
    let flagged = short_fiber || sheared;
    Ok(HmSigma {
        nominal,
        sigma: if flagged { sys.sigma } else { nominal },
        witness: sys.witness,
        flagged,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lower Cholesky factor, or `None` if the matrix is not positive definite.
fn cholesky(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let m = a.len();
    let scale = (0..m).map(|i| a[i][i].abs()).fold(0.0, f64::max);
    let mut l = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..=i {
            let s = a[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            if i == j {
                if !(s > 1e-14 * scale) {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Some(l)
}
