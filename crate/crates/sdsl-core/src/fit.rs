//! Small dense least-squares solves (Householder QR with column scaling).

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Solution of `min ‖A x − b‖₂` for several right-hand sides.
#[derive(Clone, Debug, PartialEq)]
pub struct LeastSquares {
    /// One coefficient vector per right-hand side.
    pub solutions: Vec<Vec<f64>>,
    /// `max|R_ii| / min|R_ii|` of the column-scaled triangular factor.
    pub condition: f64,
}

/// Solve a dense least-squares problem given row-major `a` (m × n, m ≥ n)
/// and right-hand sides `rhs[j]` (each of length m).
///
/// Fails with [`Error::IllConditionedFit`] if the scaled condition estimate
/// exceeds `max_condition`.
pub fn least_squares(a: &[Vec<f64>], rhs: &[Vec<f64>], max_condition: f64) -> Result<LeastSquares> {
    let m = a.len();
    let n = a.first().map_or(0, |r| r.len());
    if n == 0 || m < n {
        return Err(Error::InvalidParameter { what: "least-squares rows", value: m as f64 });
    }
    // Column-major copy with unit-norm columns.
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.iter().map(|row| row[j]).collect()).collect();
    let mut col_scale = vec![1.0; n];
    for (j, c) in cols.iter_mut().enumerate() {
        let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::IllConditionedFit { condition: f64::INFINITY });
        }
        col_scale[j] = norm;
        c.iter_mut().for_each(|v| *v /= norm);
    }
    let mut b: Vec<Vec<f64>> = rhs.to_vec();
    let mut diag = vec![0.0; n];
    for k in 0..n {
        let alpha = {
            let norm = cols[k][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
            if cols[k][k] > 0.0 {
                -norm
            } else {
                norm
            }
        };
        let mut v: Vec<f64> = cols[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        diag[k] = alpha;
        if vnorm2 == 0.0 {
            continue;
        }
        let reflect = |x: &mut [f64]| {
            let dot: f64 = v.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
            let s = 2.0 * dot / vnorm2;
            for (xi, vi) in x.iter_mut().zip(&v) {
                *xi -= s * vi;
            }
        };
        for c in cols.iter_mut().skip(k) {
            reflect(&mut c[k..]);
        }
        for bj in b.iter_mut() {
            reflect(&mut bj[k..]);
        }
    }
    let (dmax, dmin) = diag.iter().fold((0.0f64, f64::INFINITY), |(hi, lo), d| (hi.max(d.abs()), lo.min(d.abs())));
    let condition = if dmin == 0.0 { f64::INFINITY } else { dmax / dmin };
    if !(condition <= max_condition) {
        return Err(Error::IllConditionedFit { condition });
    }
    let solutions = b
        .iter()
        .map(|bj| {
            let mut x = vec![0.0; n];
            for i in (0..n).rev() {
                let mut s = bj[i];
                for j in i + 1..n {
                    s -= cols[j][i] * x[j];
                }
                x[i] = s / cols[i][i];
            }
            x.iter().zip(&col_scale).map(|(x, s)| x / s).collect()
        })
        .collect();
    Ok(LeastSquares { solutions, condition })
}

/// Polynomial extrapolation to `x = 0` through the points `(xs[i], ys[i])`
/// (Neville's scheme).
pub fn extrapolate_to_zero(xs: &[f64], ys: &[f64]) -> f64 {
    let mut p = ys.to_vec();
    let n = xs.len();
    for level in 1..n {
        for i in 0..n - level {
            let (xi, xj) = (xs[i], xs[i + level]);
            p[i] = (xj * p[i] - xi * p[i + 1]) / (xj - xi);
        }
    }
    p[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_polynomial_fit() {
        let xs: Vec<f64> = (0..10).map(|i| 1.0 + i as f64 * 0.3).collect();
        let a: Vec<Vec<f64>> = xs.iter().map(|x| vec![1.0, *x, x * x]).collect();
        let b: Vec<f64> = xs.iter().map(|x| 2.0 - 3.0 * x + 0.5 * x * x).collect();
        let ls = least_squares(&a, &[b], 1e12).unwrap();
        let s = &ls.solutions[0];
        assert!((s[0] - 2.0).abs() < 1e-12 && (s[1] + 3.0).abs() < 1e-12 && (s[2] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn clustered_columns_are_rejected() {
        let a: Vec<Vec<f64>> = (0..6).map(|i| vec![1.0, 1.0 + 1e-14 * i as f64]).collect();
        let b = vec![1.0; 6];
        assert!(matches!(least_squares(&a, &[b], 1e10), Err(Error::IllConditionedFit { .. })));
    }

    #[test]
    fn neville_recovers_polynomial_limit() {
        let xs = [1.0, 0.5, 0.25, 0.125];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 + x - 2.0 * x * x + x * x * x).collect();
        assert!((extrapolate_to_zero(&xs, &ys) - 3.0).abs() < 1e-13);
    }
}
