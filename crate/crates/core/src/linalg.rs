//! Small dense linear-algebra helpers shared across modules.

use nalgebra::{DMatrix, DVector};

use crate::error::{BifiError, Result};

pub(crate) fn check_finite(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(BifiError::NonFinite(what.to_string()))
    }
}

/// Singular values sorted in non-increasing order. Empty matrices give an empty vector.
pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Spectral norm `||A||_2`.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// Default numerical-rank threshold, `max(m, n) * eps * sigma_max`.
pub fn default_rank_tol(a: &DMatrix<f64>, sigma_max: f64) -> f64 {
    a.nrows().max(a.ncols()) as f64 * f64::EPSILON * sigma_max
}

/// Moore–Penrose pseudoinverse with singular values at or below `tol` treated as zero.
/// `tol = None` uses [`default_rank_tol`].
pub fn pinv(a: &DMatrix<f64>, tol: Option<f64>) -> (DMatrix<f64>, usize) {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return (DMatrix::zeros(n, m), 0);
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("left vectors requested");
    let vt = svd.v_t.as_ref().expect("right vectors requested");
    let smax = svd.singular_values.iter().fold(0.0f64, |acc, &s| acc.max(s));
    let tol = tol.unwrap_or_else(|| default_rank_tol(a, smax));
    let mut out = DMatrix::zeros(n, m);
    let mut rank = 0;
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > tol {
            rank += 1;
            out += (vt.row(k).transpose() / s) * u.column(k).transpose();
        }
    }
    (out, rank)
}

/// Eigenvalue of largest magnitude of a symmetric matrix, i.e. its spectral norm.
pub fn symmetric_spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return 0.0;
    }
    let eig = a.clone().symmetric_eigen();
    eig.eigenvalues.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Row-wise sums of squares.
pub(crate) fn row_sum_squares(a: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(a.nrows(), a.row_iter().map(|r| r.norm_squared()))
}

/// Columns of `a` picked by `cols`, in that order.
pub fn select_columns(a: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), cols.len(), |i, j| a[(i, cols[j])])
}

/// Rows of `a` picked by `rows`, in that order.
pub fn select_rows(a: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), a.ncols(), |i, j| a[(rows[i], j)])
}
