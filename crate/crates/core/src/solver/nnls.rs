//! Lawson–Hanson active-set nonnegative least squares.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub struct NnlsSolution {
    pub x: DVector<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
}

/// Least squares restricted to the columns flagged in `passive`; other
/// entries of the result are 0. Uses an SVD so nearly dependent columns do
/// not blow up.
fn restricted_lstsq(a: &DMatrix<f64>, b: &DVector<f64>, passive: &[bool]) -> DVector<f64> {
    let cols: Vec<usize> = (0..a.ncols()).filter(|&j| passive[j]).collect();
    let sub = a.select_columns(&cols);
    let svd = sub.svd(true, true);
    let smax = svd.singular_values.max();
    let z = svd
        .solve(b, smax * 1e-13)
        .unwrap_or_else(|_| DVector::zeros(cols.len()));
    let mut full = DVector::zeros(a.ncols());
    for (k, &j) in cols.iter().enumerate() {
        full[j] = z[k];
    }
    full
}

/// Minimizes ‖Ax − b‖₂ subject to x ≥ 0.
///
/// Columns enter the passive set in order of largest dual value, ties going
/// to the lowest index, so the result is a deterministic function of the
/// column order. `max_iter` bounds the number of least-squares solves.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>, max_iter: usize) -> Result<NnlsSolution> {
    let (m, n) = a.shape();
    if b.len() != m {
        return Err(Error::InvalidArgument(format!("rhs has {} rows, matrix {m}", b.len())));
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite entry in nnls input".into()));
    }
    let anorm = a.column_iter().map(|c| c.lp_norm(1)).fold(0.0, f64::max);
    let tol = 10.0 * f64::EPSILON * anorm.max(1.0) * (m.max(n) as f64);

    let mut x = DVector::<f64>::zeros(n);
    let mut passive = vec![false; n];
    let mut iterations = 0;
    let mut w = a.tr_mul(&(b - a * &x));
    let mut rejected = vec![false; n];

    loop {
        let cand = (0..n)
            .filter(|&j| !passive[j] && !rejected[j] && w[j] > tol)
            .fold(None, |best: Option<usize>, j| match best {
                Some(k) if w[k] >= w[j] => Some(k),
                _ => Some(j),
            });
        let Some(j) = cand else { break };
        passive[j] = true;

        let mut first = true;
        loop {
            iterations += 1;
            if iterations > max_iter {
                return Err(Error::IterationLimit {
                    iterations: max_iter,
                    residual: (a * &x - b).norm(),
                    partial: x.iter().copied().collect(),
                });
            }
            let z = restricted_lstsq(a, b, &passive);
            if first && z[j] <= tol {
                // Column adds nothing in exact arithmetic; skip it until the
                // passive set changes.
                passive[j] = false;
                rejected[j] = true;
                break;
            }
            first = false;
            if (0..n).all(|q| !passive[q] || z[q] > tol) {
                x = z;
                rejected.iter_mut().for_each(|r| *r = false);
                break;
            }
            let mut alpha = f64::INFINITY;
            for q in 0..n {
                if passive[q] && z[q] <= tol {
                    let d = x[q] - z[q];
                    if d > 0.0 {
                        alpha = alpha.min(x[q] / d);
                    }
                }
            }
            if !alpha.is_finite() {
                alpha = 0.0;
            }
            x += (z - &x) * alpha;
            for q in 0..n {
                if passive[q] && x[q] <= tol {
                    passive[q] = false;
                    x[q] = 0.0;
                }
            }
        }
        w = a.tr_mul(&(b - a * &x));
    }
    let residual_norm = (a * &x - b).norm();
    Ok(NnlsSolution {
        x,
        residual_norm,
        iterations,
    })
}
