//! Multivariate orthonormal polynomial chaos bases.
//!
//! Inputs live on a canonical domain: `[-1, 1]` for the uniform (Legendre)
//! family and the real line for the Gaussian (Hermite) family. Every basis
//! function has unit second moment under the input measure, so the first
//! basis function is the constant `1`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{BifiError, Result};

/// Input distribution, which fixes the orthogonal polynomial family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Uniform inputs on `[-1, 1]`.
    Legendre,
    /// Standard Gaussian inputs, probabilists' Hermite polynomials.
    Hermite,
}

/// Per-dimension polynomial degrees of one basis function.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn degrees(&self) -> &[u32] {
        &self.0
    }
}

/// `(p + d)! / (p! d!)`, or `None` on overflow.
pub fn basis_size(d: usize, p: usize) -> Option<usize> {
    // C(p + d, d) built incrementally; each partial product is itself a binomial.
    let mut acc: u128 = 1;
    for i in 1..=d as u128 {
        acc = acc.checked_mul(p as u128 + i)? / i;
    }
    usize::try_from(acc).ok()
}

/// Total-degree index set in graded lexicographic order.
///
/// Indices are grouped by total degree; within one degree they are ordered
/// lexicographically with larger leading degrees first, so for `d = 2` the
/// sequence starts `[0,0], [1,0], [0,1], [2,0], [1,1], [0,2], ...`.
pub fn total_degree_indices(d: usize, p: usize) -> Result<Vec<MultiIndex>> {
    if d == 0 {
        return Err(BifiError::InvalidArgument("dimension d must be >= 1".into()));
    }
    let count = basis_size(d, p).ok_or(BifiError::SizeOverflow { d, p })?;
    let mut out = Vec::new();
    out.try_reserve_exact(count)
        .map_err(|_| BifiError::SizeOverflow { d, p })?;
    let mut current = vec![0u32; d];
    for degree in 0..=p as u32 {
        push_degree(&mut out, &mut current, 0, degree);
    }
    debug_assert_eq!(out.len(), count);
    Ok(out)
}

fn push_degree(out: &mut Vec<MultiIndex>, current: &mut [u32], pos: usize, remaining: u32) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(MultiIndex(current.to_vec()));
        return;
    }
    for k in (0..=remaining).rev() {
        current[pos] = k;
        push_degree(out, current, pos + 1, remaining - k);
    }
    current[pos] = 0;
}

fn check_domain(family: Family, x: f64) -> Result<()> {
    if !x.is_finite() {
        return Err(BifiError::NonFinite("polynomial argument".into()));
    }
    if family == Family::Legendre && x.abs() > 1.0 {
        return Err(BifiError::Domain { value: x });
    }
    Ok(())
}

/// Normalized univariate polynomials of degrees `0..=max_degree` at `x`,
/// written into `out` (which is resized).
pub fn eval_poly_1d_all(family: Family, max_degree: usize, x: f64, out: &mut Vec<f64>) -> Result<()> {
    check_domain(family, x)?;
    out.clear();
    out.resize(max_degree + 1, 0.0);
    out[0] = 1.0;
    if max_degree == 0 {
        return Ok(());
    }
    match family {
        Family::Legendre => {
            // Three-term recurrence on the classical P_k, scaled afterwards.
            let (mut prev, mut cur) = (1.0, x);
            out[1] = 3f64.sqrt() * x;
            for k in 1..max_degree {
                let kf = k as f64;
                let next = ((2.0 * kf + 1.0) * x * cur - kf * prev) / (kf + 1.0);
                prev = cur;
                cur = next;
                out[k + 1] = (2.0 * kf + 3.0).sqrt() * cur;
            }
        }
        Family::Hermite => {
            // Orthonormal recurrence: psi_{k+1} = (x psi_k - sqrt(k) psi_{k-1}) / sqrt(k+1).
            out[1] = x;
            for k in 1..max_degree {
                let kf = k as f64;
                out[k + 1] = (x * out[k] - kf.sqrt() * out[k - 1]) / (kf + 1.0).sqrt();
            }
        }
    }
    Ok(())
}

/// Normalized univariate polynomial of degree `k` at `x`.
pub fn eval_poly_1d(family: Family, k: usize, x: f64) -> Result<f64> {
    let mut buf = Vec::with_capacity(k + 1);
    eval_poly_1d_all(family, k, x, &mut buf)?;
    Ok(buf[k])
}

/// A total-degree orthonormal polynomial basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcBasis {
    dimension: usize,
    order: usize,
    family: Family,
    indices: Vec<MultiIndex>,
}

impl PcBasis {
    pub fn new(dimension: usize, order: usize, family: Family) -> Result<Self> {
        let indices = total_degree_indices(dimension, order)?;
        Ok(PcBasis {
            dimension,
            order,
            family,
            indices,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    /// Number of basis functions `P`.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Evaluate a single multivariate basis function at `xi`.
    pub fn eval(&self, index: &MultiIndex, xi: &[f64]) -> Result<f64> {
        if xi.len() != self.dimension || index.dimension() != self.dimension {
            return Err(BifiError::DimensionMismatch(format!(
                "basis dimension {}, index dimension {}, point dimension {}",
                self.dimension,
                index.dimension(),
                xi.len()
            )));
        }
        let mut value = 1.0;
        for (&deg, &x) in index.degrees().iter().zip(xi) {
            value *= eval_poly_1d(self.family, deg as usize, x)?;
        }
        Ok(value)
    }

    /// All `P` basis functions at one point, written into `out`.
    pub fn eval_all_into(&self, xi: &[f64], out: &mut [f64]) -> Result<()> {
        if xi.len() != self.dimension {
            return Err(BifiError::DimensionMismatch(format!(
                "basis dimension {}, point dimension {}",
                self.dimension,
                xi.len()
            )));
        }
        let stride = self.order + 1;
        let mut table = vec![0.0; stride * self.dimension];
        let mut buf = Vec::with_capacity(stride);
        for (dim, &x) in xi.iter().enumerate() {
            eval_poly_1d_all(self.family, self.order, x, &mut buf)?;
            table[dim * stride..(dim + 1) * stride].copy_from_slice(&buf);
        }
        for (slot, index) in out.iter_mut().zip(&self.indices) {
            *slot = index
                .degrees()
                .iter()
                .enumerate()
                .map(|(dim, &deg)| table[dim * stride + deg as usize])
                .product();
        }
        Ok(())
    }

    /// Measurement matrix `Psi` (P x N) with `Psi[(j, i)] = psi_j(xi_i)`;
    /// `samples` holds one realization per row (N x d).
    pub fn measurement_matrix(&self, samples: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let n = samples.nrows();
        if n > 0 && samples.ncols() != self.dimension {
            return Err(BifiError::DimensionMismatch(format!(
                "samples have {} columns, basis dimension is {}",
                samples.ncols(),
                self.dimension
            )));
        }
        let p = self.len();
        let mut psi = DMatrix::zeros(p, n);
        let mut xi = vec![0.0; self.dimension];
        for i in 0..n {
            for (k, x) in xi.iter_mut().enumerate() {
                *x = samples[(i, k)];
            }
            self.eval_all_into(&xi, psi.column_mut(i).as_mut_slice())?;
        }
        Ok(psi)
    }
}
