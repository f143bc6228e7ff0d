//! Local polynomial interpolation on uniform grids.

/// Weights for the value and first two derivatives at `z` of the
/// interpolant through the nodes `x` (Fornberg's recursion).
pub(crate) fn fornberg(z: f64, x: &[f64]) -> Vec<[f64; 3]> {
    let n = x.len();
    let mut c = vec![[0.0; 3]; n];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(2);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c
}

pub(crate) const WINDOW: usize = 7;

/// Samples on `x0 + h·k`, interpolated by degree-six polynomials on the
/// seven nearest nodes.
#[derive(Debug, Clone)]
pub(crate) struct Uniform {
    x0: f64,
    h: f64,
    values: Vec<f64>,
}

impl Uniform {
    pub fn new(x0: f64, h: f64, values: Vec<f64>) -> Self {
        assert!(values.len() >= WINDOW, "too few samples for interpolation");
        Uniform { x0, h, values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn window(&self, x: f64) -> usize {
        let k = ((x - self.x0) / self.h).round() as isize - (WINDOW as isize / 2);
        k.clamp(0, (self.values.len() - WINDOW) as isize) as usize
    }

    fn apply(&self, start: usize, z: f64) -> [f64; 3] {
        let nodes: Vec<f64> = (0..WINDOW).map(|k| (start + k) as f64).collect();
        let c = fornberg(z, &nodes);
        let mut out = [0.0; 3];
        for (k, w) in c.iter().enumerate() {
            for d in 0..3 {
                out[d] += w[d] * self.values[start + k];
            }
        }
        [out[0], out[1] / self.h, out[2] / (self.h * self.h)]
    }

    /// Value, first and second derivative at `x`.
    pub fn eval(&self, x: f64) -> [f64; 3] {
        let z = (x - self.x0) / self.h;
        self.apply(self.window(x), z)
    }

    /// Value, first and second derivative at node `k`.
    pub fn eval_node(&self, k: usize) -> [f64; 3] {
        let x = self.x0 + self.h * k as f64;
        let mut out = self.apply(self.window(x), k as f64);
        out[0] = self.values[k];
        out
    }
}
