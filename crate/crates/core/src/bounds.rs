//! Error bounds for bi-fidelity estimates.
//!
//! * A-priori: the Gramian discrepancy `eps(tau) = ||H^T H - tau L^T L||_2` and
//!   `rho_k(tau)`, which bounds `||H - H_bar||_2` for the MID estimate, plus the
//!   coherence-based sample bound and its diagnostics.
//! * A-posteriori: sample moments of squared residuals combined with the
//!   Berry–Esseen inequality give a bound on the mean-square error together
//!   with the probability that it holds.

use std::f64::consts::SQRT_2;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{BifiError, Result};
use crate::linalg::{
    check_finite, row_sum_squares, select_columns, singular_values, spectral_norm,
    symmetric_spectral_norm,
};
use crate::mid::MidDecomposition;
use crate::smr::ReducedBasis;

/// Upper bound on the absolute Berry–Esseen constant.
pub const BERRY_ESSEEN_C: f64 = 0.4748;

/// Default standard-normal quantile for the practical bounds.
pub const DEFAULT_T: f64 = 2.0;

/// Standard normal CDF.
pub fn std_normal_cdf(t: f64) -> f64 {
    0.5 * libm::erfc(-t / SQRT_2)
}

/// Largest `sum_j eta_j(xi)^2` over a pool of candidate inputs (K x d).
///
/// This is a lower estimate of the supremum over the whole input domain.
pub fn coherence(rb: &ReducedBasis, pool: &DMatrix<f64>) -> Result<f64> {
    if pool.nrows() == 0 {
        return Err(BifiError::Empty("coherence pool has no samples".into()));
    }
    let psi = rb.basis.measurement_matrix(pool)?;
    let eta = rb.eval_from_measurement(&psi)?;
    Ok(eta
        .column_iter()
        .map(|c| c.norm_squared())
        .fold(0.0f64, f64::max))
}

/// Gramians for estimating `eps(tau)` from matched HF and LF columns.
#[derive(Debug, Clone)]
pub struct EpsilonEstimator {
    hth: DMatrix<f64>,
    ltl: DMatrix<f64>,
    /// `N / n_hat`, or 1 when the full ensemble is used.
    pub scale: f64,
    pub n_hat: usize,
}

impl EpsilonEstimator {
    /// Estimator from matched columns with a fixed multiplicative scale.
    pub fn new(h_cols: &DMatrix<f64>, l_cols: &DMatrix<f64>, scale: f64) -> Result<Self> {
        if h_cols.ncols() != l_cols.ncols() {
            return Err(BifiError::DimensionMismatch(format!(
                "{} HF columns vs {} LF columns",
                h_cols.ncols(),
                l_cols.ncols()
            )));
        }
        if !(scale > 0.0) {
            return Err(BifiError::InvalidArgument("epsilon scale must be positive".into()));
        }
        check_finite(h_cols, "HF columns")?;
        check_finite(l_cols, "LF columns")?;
        Ok(EpsilonEstimator {
            hth: h_cols.transpose() * h_cols,
            ltl: l_cols.transpose() * l_cols,
            scale,
            n_hat: h_cols.ncols(),
        })
    }

    /// Exact `eps(tau)` from full ensembles.
    pub fn full(h: &DMatrix<f64>, l: &DMatrix<f64>) -> Result<Self> {
        Self::new(h, l, 1.0)
    }

    /// Subset estimate from the HF columns `indices`, scaled by `N / n_hat`.
    pub fn subset(h: &DMatrix<f64>, l: &DMatrix<f64>, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(BifiError::Empty("no HF columns for the epsilon estimate".into()));
        }
        let total = l.ncols();
        let scale = total as f64 / indices.len() as f64;
        Self::new(&select_columns(h, indices), &select_columns(l, indices), scale)
    }

    pub fn eval(&self, tau: f64) -> f64 {
        self.scale * symmetric_spectral_norm(&(&self.hth - &self.ltl * tau))
    }
}

/// `eps(tau)` for matched columns, multiplied by `scale`.
pub fn epsilon_tau(h_cols: &DMatrix<f64>, l_cols: &DMatrix<f64>, tau: f64, scale: f64) -> Result<f64> {
    if tau < 0.0 {
        return Err(BifiError::InvalidArgument("tau must be non-negative".into()));
    }
    Ok(EpsilonEstimator::new(h_cols, l_cols, scale)?.eval(tau))
}

/// 25 log-spaced points over `[1e-3, 1e3] * tau_0`, `tau_0 = ||H_sub||_F^2 / ||L_sub||_F^2`.
pub fn default_tau_grid(h_sub: &DMatrix<f64>, l_sub: &DMatrix<f64>) -> Vec<f64> {
    let lnorm = l_sub.norm_squared();
    let tau0 = if lnorm > 0.0 { h_sub.norm_squared() / lnorm } else { 1.0 };
    let tau0 = if tau0 > 0.0 { tau0 } else { 1.0 };
    (0..25)
        .map(|i| tau0 * 10f64.powf(-3.0 + 6.0 * i as f64 / 24.0))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoEntry {
    pub tau: f64,
    pub k: usize,
    pub epsilon: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Theorem1Report {
    pub tau_grid: Vec<f64>,
    pub entries: Vec<RhoEntry>,
    pub best: Option<RhoEntry>,
    pub singular_values: Vec<f64>,
    /// `||C_bar||_2`
    pub coefficient_norm: f64,
    /// `||L - L_bar||_2`
    pub recon_error_2: f64,
    pub n_hat_used: usize,
    pub scaling: f64,
    pub notes: Vec<String>,
}

/// Numerical rank of `l` from its singular values.
fn numerical_rank(sv: &[f64], dims: (usize, usize)) -> usize {
    let top = sv.first().copied().unwrap_or(0.0);
    let tol = dims.0.max(dims.1) as f64 * f64::EPSILON * top;
    sv.iter().filter(|&&s| s > tol).count()
}

/// Evaluate `rho_k(tau)` over `tau_grid x k_range`. `k_range = None` uses
/// `1..=rank(L)`.
pub fn rho_k_tau(
    l: &DMatrix<f64>,
    dec: &MidDecomposition,
    eps: &EpsilonEstimator,
    tau_grid: &[f64],
    k_range: Option<std::ops::RangeInclusive<usize>>,
) -> Result<Theorem1Report> {
    if tau_grid.iter().any(|&t| !(t > 0.0)) {
        return Err(BifiError::InvalidArgument("tau grid must be positive".into()));
    }
    let sv = singular_values(l);
    let rank = numerical_rank(&sv, l.shape());
    let coefficient_norm = spectral_norm(&dec.coefficients);
    let recon_error_2 = spectral_norm(&(l - dec.reconstruct(l)));
    let k_range = k_range.unwrap_or(1..=rank.max(1));
    let mut notes = Vec::new();
    let mut entries = Vec::new();

    let eps_values: Vec<f64> = tau_grid.iter().map(|&t| eps.eval(t)).collect();
    for k in k_range {
        let sigma_k = if k >= 1 && k <= rank { sv[k - 1] } else { 0.0 };
        if sigma_k == 0.0 {
            notes.push(format!("k = {k} skipped: sigma_k = 0"));
            continue;
        }
        let sigma_next = if k < rank { sv[k] } else { 0.0 };
        for (&tau, &epsilon) in tau_grid.iter().zip(&eps_values) {
            let rho = (1.0 + coefficient_norm) * (tau * sigma_next * sigma_next + epsilon).sqrt()
                + recon_error_2 * (tau + epsilon / (sigma_k * sigma_k)).sqrt();
            entries.push(RhoEntry {
                tau,
                k,
                epsilon,
                rho,
            });
        }
    }
    let best = entries
        .iter()
        .copied()
        .min_by(|a, b| a.rho.total_cmp(&b.rho));
    Ok(Theorem1Report {
        tau_grid: tau_grid.to_vec(),
        entries,
        best,
        singular_values: sv,
        coefficient_norm,
        recon_error_2,
        n_hat_used: eps.n_hat,
        scaling: eps.scale,
        notes,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Theorem2Report {
    pub mu: f64,
    pub n: usize,
    pub r: usize,
    /// `max(0, 1 - 2 r exp(-0.1 n / mu))`
    pub probability_lb: f64,
    /// True when the raw expression was negative.
    pub probability_clamped: bool,
    /// `1 + 4 mu / n`
    pub bound_factor: f64,
    /// Mean-square residual per point, when a reference ensemble is available.
    pub truncation_ms: Option<Vec<f64>>,
    /// `bound_factor * truncation_ms`
    pub restricted_error_bound: Option<Vec<f64>>,
}

pub fn theorem2_report(
    mu: f64,
    n: usize,
    r: usize,
    reference_ms: Option<&DVector<f64>>,
) -> Result<Theorem2Report> {
    if n == 0 {
        return Err(BifiError::InvalidArgument("n must be at least 1".into()));
    }
    if !(mu >= 1.0 - 1e-12) {
        return Err(BifiError::InvalidArgument(format!("coherence {mu} below 1")));
    }
    let raw = 1.0 - 2.0 * r as f64 * (-0.1 * n as f64 / mu).exp();
    let bound_factor = 1.0 + 4.0 * mu / n as f64;
    Ok(Theorem2Report {
        mu,
        n,
        r,
        probability_lb: raw.clamp(0.0, 1.0),
        probability_clamped: raw < 0.0,
        bound_factor,
        truncation_ms: reference_ms.map(|ms| ms.iter().copied().collect()),
        restricted_error_bound: reference_ms.map(|ms| ms.iter().map(|v| v * bound_factor).collect()),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Corollary1Diagnostics {
    /// Per-point `zeta_i = N E(delta_i^2) / rho^2`.
    pub zeta: Vec<f64>,
    pub zeta_bar: f64,
    /// Numerical rank of `H - H_hat`.
    pub residual_rank: usize,
    pub bound_factor: f64,
}

/// Back out the `zeta` factors from a full reference ensemble `h` and the
/// estimate `h_hat`, with `E(delta_i^2)` taken as the row mean-square residual.
pub fn corollary1_diagnostics(
    h: &DMatrix<f64>,
    h_hat: &DMatrix<f64>,
    rho_star: f64,
    n: usize,
    mu: f64,
) -> Result<Corollary1Diagnostics> {
    if h.shape() != h_hat.shape() {
        return Err(BifiError::DimensionMismatch("H and H_hat differ in shape".into()));
    }
    if !(rho_star > 0.0) {
        return Err(BifiError::Degenerate(
            "rho = 0: HF and scaled LF Gramians coincide".into(),
        ));
    }
    if n == 0 {
        return Err(BifiError::InvalidArgument("n must be at least 1".into()));
    }
    let big_n = h.ncols() as f64;
    let resid = h - h_hat;
    let ms = row_sum_squares(&resid) / big_n;
    let rho2 = rho_star * rho_star;
    let zeta: Vec<f64> = ms.iter().map(|v| v * big_n / rho2).collect();
    let sv = singular_values(&resid);
    let top = sv.first().copied().unwrap_or(0.0);
    let residual_rank = if top > 0.0 {
        sv.iter().filter(|&&s| s > 1e-10 * top).count()
    } else {
        0
    };
    // Summed identity with a-bar = 1: sum_i E(delta_i^2) = R zeta_bar rho^2 / N.
    let zeta_bar = if residual_rank > 0 {
        ms.sum() * big_n / (residual_rank as f64 * rho2)
    } else {
        0.0
    };
    Ok(Corollary1Diagnostics {
        zeta,
        zeta_bar,
        residual_rank,
        bound_factor: 1.0 + 4.0 * mu / n as f64,
    })
}

/// Plug-in sample moments of the squared residuals `V_ij` and their column sums `W_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub alpha_v: Vec<f64>,
    pub beta2_v: Vec<f64>,
    pub gamma_v: Vec<f64>,
    pub alpha_w: f64,
    pub beta2_w: f64,
    pub gamma_w: f64,
    pub n_hat: usize,
}

/// Mean, second and third absolute central moments (1/n normalization).
fn moments_of(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64, f64) {
    let (lo, hi) = values
        .clone()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let nf = n as f64;
    let alpha = values.clone().sum::<f64>() / nf;
    if lo == hi {
        return (lo, 0.0, 0.0);
    }
    let (mut m2, mut m3) = (0.0, 0.0);
    for v in values {
        let d = (v - alpha).abs();
        m2 += d * d;
        m3 += d * d * d;
    }
    (alpha, m2 / nf, m3 / nf)
}

pub fn compute_moments(h_sub: &DMatrix<f64>, h_hat_sub: &DMatrix<f64>) -> Result<MomentSet> {
    if h_sub.shape() != h_hat_sub.shape() {
        return Err(BifiError::DimensionMismatch(format!(
            "H is {:?}, H_hat is {:?}",
            h_sub.shape(),
            h_hat_sub.shape()
        )));
    }
    let (m, n_hat) = h_sub.shape();
    if n_hat < 2 {
        return Err(BifiError::InvalidArgument(format!(
            "moment estimation needs n_hat >= 2, got {n_hat}"
        )));
    }
    let v = (h_sub - h_hat_sub).map(|x| x * x);
    let mut alpha_v = vec![0.0; m];
    let mut beta2_v = vec![0.0; m];
    let mut gamma_v = vec![0.0; m];
    for i in 0..m {
        let row = v.row(i);
        let (a, b2, g) = moments_of(row.iter().copied(), n_hat);
        alpha_v[i] = a;
        beta2_v[i] = b2;
        gamma_v[i] = g;
    }
    let w: Vec<f64> = v.column_iter().map(|c| c.sum()).collect();
    let (alpha_w, beta2_w, gamma_w) = moments_of(w.iter().copied(), n_hat);
    Ok(MomentSet {
        alpha_v,
        beta2_v,
        gamma_v,
        alpha_w,
        beta2_w,
        gamma_w,
        n_hat,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub t: f64,
    pub phi_t: f64,
    pub n_hat: usize,
    /// `alpha_Vi + t beta_Vi / sqrt(n_hat)`
    pub pointwise_bound: Vec<f64>,
    pub pointwise_prob: Vec<f64>,
    /// `alpha_W + t beta_W / sqrt(n_hat)`
    pub sum_bound: f64,
    pub sum_prob: f64,
    /// Set when any probability expression was negative and clamped to 0.
    pub prob_clamped: bool,
    /// Reference mean-square error per point, `(1/N) sum_j (H - H_hat)_ij^2`.
    pub pointwise_true_error: Option<Vec<f64>>,
    /// Reference summed mean-square error.
    pub true_error: Option<f64>,
    pub efficacy: Option<f64>,
}

fn bound_and_prob(alpha: f64, beta2: f64, gamma: f64, t: f64, phi: f64, sqrt_n: f64) -> (f64, f64, bool) {
    if beta2 <= 0.0 {
        return (alpha, 1.0, false);
    }
    let beta = beta2.sqrt();
    let raw = phi - BERRY_ESSEEN_C * gamma / (beta2 * beta * sqrt_n);
    (alpha + t * beta / sqrt_n, raw.clamp(0.0, 1.0), raw < 0.0)
}

/// Pointwise and summed practical bounds with their Berry–Esseen probabilities.
pub fn practical_bounds(moments: &MomentSet, t: f64) -> Result<BoundReport> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(BifiError::InvalidArgument("t must be finite and non-negative".into()));
    }
    let phi_t = std_normal_cdf(t);
    let sqrt_n = (moments.n_hat as f64).sqrt();
    let m = moments.alpha_v.len();
    let mut pointwise_bound = vec![0.0; m];
    let mut pointwise_prob = vec![0.0; m];
    let mut prob_clamped = false;
    for i in 0..m {
        let (b, p, c) = bound_and_prob(
            moments.alpha_v[i],
            moments.beta2_v[i],
            moments.gamma_v[i],
            t,
            phi_t,
            sqrt_n,
        );
        pointwise_bound[i] = b;
        pointwise_prob[i] = p;
        prob_clamped |= c;
    }
    let (sum_bound, sum_prob, c) =
        bound_and_prob(moments.alpha_w, moments.beta2_w, moments.gamma_w, t, phi_t, sqrt_n);
    prob_clamped |= c;
    Ok(BoundReport {
        t,
        phi_t,
        n_hat: moments.n_hat,
        pointwise_bound,
        pointwise_prob,
        sum_bound,
        sum_prob,
        prob_clamped,
        pointwise_true_error: None,
        true_error: None,
        efficacy: None,
    })
}

/// Moments and bounds from `n_hat` HF columns and their BF predictions.
pub fn practical_error_bounds(h_sub: &DMatrix<f64>, h_hat_sub: &DMatrix<f64>, t: f64) -> Result<BoundReport> {
    practical_bounds(&compute_moments(h_sub, h_hat_sub)?, t)
}

/// Per-point mean-square error of an estimate over the full reference ensemble.
pub fn reference_mse(h: &DMatrix<f64>, h_hat: &DMatrix<f64>) -> Result<DVector<f64>> {
    if h.shape() != h_hat.shape() {
        return Err(BifiError::DimensionMismatch("H and H_hat differ in shape".into()));
    }
    if h.ncols() == 0 {
        return Err(BifiError::Empty("reference ensemble has no samples".into()));
    }
    Ok(row_sum_squares(&(h - h_hat)) / h.ncols() as f64)
}

impl BoundReport {
    /// Attach the reference error and the efficacy of the summed bound.
    pub fn with_reference(mut self, pointwise_ms: DVector<f64>) -> Self {
        let total = pointwise_ms.sum();
        self.efficacy = efficacy(self.sum_bound, total).ok();
        self.true_error = Some(total);
        self.pointwise_true_error = Some(pointwise_ms.iter().copied().collect());
        self
    }
}

/// `sqrt(bound / true_mse)`
pub fn efficacy(bound: f64, true_mse: f64) -> Result<f64> {
    if !(true_mse > 0.0) {
        return Err(BifiError::Degenerate("true error is zero".into()));
    }
    if bound < 0.0 {
        return Err(BifiError::InvalidArgument("bound must be non-negative".into()));
    }
    Ok((bound / true_mse).sqrt())
}
