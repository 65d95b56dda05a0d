//! Matrix interpolative decomposition (MID) through column-pivoted QR.
//!
//! `L P ~ Q [R11 R12]` selects `r` skeleton columns `L_r`; the interpolation
//! coefficients are `C = [I, R11^+ R12] P^T`, so `L ~ L_r C`. Applying the same
//! coefficients to the HF skeleton gives the MID bi-fidelity estimate.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{BifiError, Result};
use crate::linalg::{check_finite, pinv, select_columns, singular_values};

/// Relative tolerance under which two residual column norms count as tied.
pub const PIVOT_TIE_TOL: f64 = 1e-10;

/// Condition number above which `R11` is inverted through its SVD.
const BACKSUB_COND_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MidDecomposition {
    pub rank: usize,
    pub skeleton: Vec<usize>,
    /// r x N interpolation coefficients.
    pub coefficients: DMatrix<f64>,
    /// `||L - L_r C||_F`
    pub recon_error_fro: f64,
}

impl MidDecomposition {
    /// `L_r C` for the matrix the decomposition was built from (or any matrix
    /// with the same columns).
    pub fn reconstruct(&self, l: &DMatrix<f64>) -> DMatrix<f64> {
        select_columns(l, &self.skeleton) * &self.coefficients
    }
}

struct PivotedQr {
    /// Upper r x N block of R in pivoted column order.
    r: DMatrix<f64>,
    perm: Vec<usize>,
}

fn pivoted_qr(l: &DMatrix<f64>, rank: usize) -> PivotedQr {
    let (m, n) = l.shape();
    let mut a = l.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..rank {
        let norms: Vec<f64> = (k..n).map(|j| a.view((k, j), (m - k, 1)).norm()).collect();
        let best = norms.iter().fold(0.0f64, |acc, &v| acc.max(v));
        let threshold = best * (1.0 - PIVOT_TIE_TOL);
        let mut choice = k;
        let mut choice_orig = usize::MAX;
        for (off, &v) in norms.iter().enumerate() {
            let j = k + off;
            if v >= threshold && perm[j] < choice_orig {
                choice = j;
                choice_orig = perm[j];
            }
        }
        a.swap_columns(k, choice);
        perm.swap(k, choice);

        // Householder reflector zeroing a[k+1.., k].
        let x = a.view((k, k), (m - k, 1)).clone_owned();
        let alpha = x.norm();
        if alpha == 0.0 {
            continue;
        }
        let sign = if x[0] >= 0.0 { 1.0 } else { -1.0 };
        let mut v = x;
        v[0] += sign * alpha;
        let vnorm2 = v.norm_squared();
        if vnorm2 == 0.0 {
            continue;
        }
        let mut block = a.view_mut((k, k), (m - k, n - k));
        let proj = v.transpose() * &block;
        block -= &v * proj * (2.0 / vnorm2);
        for i in k + 1..m {
            a[(i, k)] = 0.0;
        }
    }
    PivotedQr {
        r: a.rows(0, rank).into_owned(),
        perm,
    }
}

/// Rank-`r` interpolative decomposition of `l` (m x N).
pub fn mid_decompose(l: &DMatrix<f64>, rank: usize) -> Result<MidDecomposition> {
    let (m, n) = l.shape();
    if rank == 0 || rank > m.min(n) {
        return Err(BifiError::InvalidArgument(format!(
            "MID rank {rank} outside [1, {}]",
            m.min(n)
        )));
    }
    check_finite(l, "LF matrix")?;
    let qr = pivoted_qr(l, rank);
    let r11 = qr.r.columns(0, rank).upper_triangle();
    let r12 = qr.r.columns(rank, n - rank).into_owned();

    let sv = singular_values(&r11);
    let (smax, smin) = (sv[0], *sv.last().expect("rank >= 1"));
    let t = if smin > 0.0 && smax / smin < BACKSUB_COND_LIMIT {
        r11.solve_upper_triangular(&r12)
            .ok_or_else(|| BifiError::Numerical("singular R11 in back-substitution".into()))?
    } else {
        let (r11_pinv, _) = pinv(&r11, None);
        r11_pinv * r12
    };

    let mut coefficients = DMatrix::zeros(rank, n);
    for (pos, &col) in qr.perm.iter().enumerate() {
        if pos < rank {
            coefficients[(pos, col)] = 1.0;
        } else {
            coefficients.set_column(col, &t.column(pos - rank));
        }
    }
    let skeleton = qr.perm[..rank].to_vec();
    let recon = select_columns(l, &skeleton) * &coefficients;
    let recon_error_fro = (l - recon).norm();
    Ok(MidDecomposition {
        rank,
        skeleton,
        coefficients,
        recon_error_fro,
    })
}

/// MID bi-fidelity estimate `H_bar = H(:, skeleton) C`.
pub fn mid_bifidelity(h: &DMatrix<f64>, dec: &MidDecomposition) -> Result<DMatrix<f64>> {
    if h.ncols() != dec.coefficients.ncols() {
        return Err(BifiError::DimensionMismatch(format!(
            "H has {} columns, decomposition has {}",
            h.ncols(),
            dec.coefficients.ncols()
        )));
    }
    Ok(dec.reconstruct(h))
}
