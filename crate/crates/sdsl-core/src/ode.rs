//! Adaptive Dormand–Prince 5(4) integration of first-order systems.
//!
//! The integrator works on plain `f64` slices so it serves both the tiny
//! per-mode radial systems and the large method-of-lines grid oracle.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Difference between the fifth- and fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Step-control parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dopri5 {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
}

/// Counters from one integration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

impl Dopri5 {
    pub fn new(rel_tol: f64, abs_tol: f64) -> Self {
        Dopri5 { rel_tol, abs_tol, max_steps: 1_000_000 }
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    fn error_norm(&self, y: &[f64], y_new: &[f64], err: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..y.len() {
            let sc = self.abs_tol + self.rel_tol * y[i].abs().max(y_new[i].abs());
            let e = err[i] / sc;
            acc += e * e;
        }
        (acc / y.len().max(1) as f64).sqrt()
    }

    /// Integrate `y' = f(x, y)` from `x0` to `x1` (either direction), updating
    /// `y` in place.
    pub fn integrate<F>(&self, mut f: F, x0: f64, y: &mut [f64], x1: f64) -> Result<Stats>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = y.len();
        let mut stats = Stats::default();
        if x1 == x0 || n == 0 {
            return Ok(stats);
        }
        let dir = if x1 > x0 { 1.0 } else { -1.0 };
        let span = (x1 - x0).abs();
        let mut k: Vec<Vec<f64>> = (0..7).map(|_| vec![0.0; n]).collect();
        let mut tmp = vec![0.0; n];
        let mut y_new = vec![0.0; n];
        let mut err = vec![0.0; n];

        let mut x = x0;
        f(x, y, &mut k[0]);
        stats.evaluations += 1;
        let mut h = self.initial_step(&mut f, x, y, &k[0], dir, span, &mut tmp, &mut y_new);
        stats.evaluations += 1;
        let mut last_rejected = false;

        loop {
            if (x1 - x) * dir <= 0.0 {
                break;
            }
            if stats.accepted + stats.rejected >= self.max_steps {
                return Err(Error::StepLimitExceeded { x, steps: self.max_steps });
            }
            let remaining = (x1 - x).abs();
            let mut last = false;
            if h >= remaining {
                h = remaining;
                last = true;
            }
            if h <= 1e-14 * x.abs().max(span) {
                return Err(Error::StepSizeUnderflow { x, h });
            }
            let hs = h * dir;

            macro_rules! stage {
                ($dst:expr, $c:expr, [$(($a:expr, $j:expr)),*]) => {{
                    for i in 0..n {
                        tmp[i] = y[i] + hs * (0.0 $(+ $a * k[$j][i])*);
                    }
                    let (_, rest) = k.split_at_mut($dst);
                    f(x + $c * hs, &tmp, &mut rest[0]);
                }};
            }
            stage!(1, C2, [(A21, 0)]);
            stage!(2, C3, [(A31, 0), (A32, 1)]);
            stage!(3, C4, [(A41, 0), (A42, 1), (A43, 2)]);
            stage!(4, C5, [(A51, 0), (A52, 1), (A53, 2), (A54, 3)]);
            stage!(5, 1.0, [(A61, 0), (A62, 1), (A63, 2), (A64, 3), (A65, 4)]);
            for i in 0..n {
                y_new[i] = y[i]
                    + hs * (A71 * k[0][i] + A73 * k[2][i] + A74 * k[3][i] + A75 * k[4][i] + A76 * k[5][i]);
            }
            let x_new = if last { x1 } else { x + hs };
            {
                let (_, rest) = k.split_at_mut(6);
                f(x_new, &y_new, &mut rest[0]);
            }
            stats.evaluations += 6;
            for i in 0..n {
                err[i] = hs
                    * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
            }
            let en = self.error_norm(y, &y_new, &err);
            if !en.is_finite() {
                if y_new.iter().any(|v| !v.is_finite()) && h <= 1e-10 * span {
                    return Err(Error::NonFinite { x });
                }
                h *= 0.1;
                stats.rejected += 1;
                last_rejected = true;
                continue;
            }
            if en <= 1.0 {
                stats.accepted += 1;
                x = x_new;
                y.copy_from_slice(&y_new);
                k.swap(0, 6);
                let mut factor = if en == 0.0 { 5.0 } else { 0.9 * en.powf(-0.2) };
                factor = factor.clamp(0.2, 5.0);
                if last_rejected {
                    factor = factor.min(1.0);
                }
                last_rejected = false;
                if last {
                    break;
                }
                h *= factor;
            } else {
                stats.rejected += 1;
                last_rejected = true;
                h *= (0.9 * en.powf(-0.2)).max(0.2);
            }
        }
        Ok(stats)
    }

    /// Starting step following Hairer, Nørsett & Wanner (II.4).
    #[allow(clippy::too_many_arguments)]
    fn initial_step<F>(
        &self,
        f: &mut F,
        x: f64,
        y: &[f64],
        f0: &[f64],
        dir: f64,
        span: f64,
        tmp: &mut [f64],
        f1: &mut [f64],
    ) -> f64
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = y.len() as f64;
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        for i in 0..y.len() {
            let sc = self.abs_tol + self.rel_tol * y[i].abs();
            d0 += (y[i] / sc).powi(2);
            d1 += (f0[i] / sc).powi(2);
        }
        let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 * span } else { 0.01 * d0 / d1 };
        h0 = h0.min(span);
        for i in 0..y.len() {
            tmp[i] = y[i] + dir * h0 * f0[i];
        }
        f(x + dir * h0, tmp, f1);
        let mut d2 = 0.0;
        for i in 0..y.len() {
            let sc = self.abs_tol + self.rel_tol * y[i].abs();
            d2 += ((f1[i] - f0[i]) / sc).powi(2);
        }
        let d2 = (d2 / n).sqrt() / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6 * span)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(span)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let mut y = [1.0];
        let s = Dopri5::new(1e-12, 1e-14).integrate(|_, y, d| d[0] = -y[0], 0.0, &mut y, 5.0).unwrap();
        assert!((y[0] - (-5.0f64).exp()).abs() < 1e-12);
        assert!(s.accepted > 10);
    }

    #[test]
    fn harmonic_oscillator_backward() {
        let mut y = [0.0, 1.0];
        Dopri5::new(1e-12, 1e-14)
            .integrate(
                |_, y, d| {
                    d[0] = y[1];
                    d[1] = -y[0];
                },
                0.0,
                &mut y,
                -3.0,
            )
            .unwrap();
        assert!((y[0] - (-3.0f64).sin()).abs() < 1e-10);
        assert!((y[1] - (-3.0f64).cos()).abs() < 1e-10);
    }

    #[test]
    fn step_budget_is_enforced() {
        let mut y = [1.0];
        let r = Dopri5::new(1e-12, 1e-14).with_max_steps(3).integrate(|_, y, d| d[0] = -y[0], 0.0, &mut y, 50.0);
        assert!(matches!(r, Err(Error::StepLimitExceeded { .. })));
    }
}
