//! Adaptive Dormand–Prince 5(4) integration for small autonomous systems.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub initial_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-13,
            abs_tol: 1e-15,
            initial_step: 1e-6,
            max_steps: 1_000_000,
        }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Adaptive integrator that carries its step size across successive calls,
/// so a solution can be tabulated by integrating from one output point to
/// the next.
pub struct DormandPrince<const N: usize, F: Fn(f64, &[f64; N]) -> [f64; N]> {
    rhs: F,
    opts: OdeOptions,
    step: f64,
}

impl<const N: usize, F: Fn(f64, &[f64; N]) -> [f64; N]> DormandPrince<N, F> {
    pub fn new(rhs: F, opts: OdeOptions) -> Self {
        Self {
            rhs,
            step: opts.initial_step,
            opts,
        }
    }

    /// Advances `y` from `t0` to `t1` (`t1 > t0`).
    pub fn advance(&mut self, t0: f64, y: [f64; N], t1: f64) -> Result<[f64; N]> {
        let mut t = t0;
        let mut y = y;
        let mut steps = 0usize;
        while t < t1 {
            let mut h = self.step.min(t1 - t);
            let last = h >= t1 - t;
            if last {
                h = t1 - t;
            }
            let (y_new, err) = self.trial(t, &y, h);
            steps += 1;
            if steps > self.opts.max_steps {
                return Err(Error::numerical("ODE step budget exhausted", err));
            }
            if !err.is_finite() {
                self.step = h * 0.1;
                continue;
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                t = if last { t1 } else { t + h };
                y = y_new;
                if !last || factor < 1.0 {
                    self.step = h * factor;
                }
            } else {
                self.step = h * factor;
                if self.step < 1e-300 {
                    return Err(Error::numerical("ODE step underflow", err));
                }
            }
        }
        Ok(y)
    }

    fn trial(&self, t: f64, y: &[f64; N], h: f64) -> ([f64; N], f64) {
        let mut k = [[0.0; N]; 7];
        for stage in 0..7 {
            let mut ys = *y;
            for (prev, a) in A[stage].iter().enumerate().take(stage) {
                for i in 0..N {
                    ys[i] += h * a * k[prev][i];
                }
            }
            k[stage] = (self.rhs)(t + C[stage] * h, &ys);
        }
        let mut y5 = *y;
        let mut err = 0.0f64;
        for i in 0..N {
            let mut d5 = 0.0;
            let mut d4 = 0.0;
            for s in 0..7 {
                d5 += B5[s] * k[s][i];
                d4 += B4[s] * k[s][i];
            }
            y5[i] += h * d5;
            let scale = self.opts.abs_tol + self.opts.rel_tol * y[i].abs().max(y5[i].abs());
            err = err.max((h * (d5 - d4)).abs() / scale);
        }
        (y5, err)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let mut dp = DormandPrince::new(|_, y: &[f64; 1]| [y[0]], OdeOptions::default());
        let y = dp.advance(0.0, [1.0], 2.0).unwrap();
        assert!((y[0] - 2f64.exp()).abs() < 1e-12 * 2f64.exp());
    }

    #[test]
    fn harmonic_oscillator_in_pieces() {
        let mut dp = DormandPrince::new(|_, y: &[f64; 2]| [y[1], -y[0]], OdeOptions::default());
        let mut y = [0.0, 1.0];
        let mut t = 0.0;
        for _ in 0..10 {
            y = dp.advance(t, y, t + 0.3).unwrap();
            t += 0.3;
        }
        assert!((y[0] - 3f64.sin()).abs() < 1e-11);
        assert!((y[1] - 3f64.cos()).abs() < 1e-11);
    }
}
