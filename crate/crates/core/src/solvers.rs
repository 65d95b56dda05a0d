//! Regression solvers for `C Psi ~ U`.
//!
//! [`least_squares`] returns the minimum-Frobenius-norm least-squares
//! coefficients. [`l12_minimize`] solves
//!
//! ```text
//! min ||C||_{1,2}  subject to  ||C Psi - U||_F <= kappa,
//! ||C||_{1,2} = ( sum_i ||C(i, :)||_1^2 )^{1/2}
//! ```
//!
//! through the penalized problem `1/2 ||C Psi - U||_F^2 + lambda/2 ||C||_{1,2}^2`,
//! which decouples over the rows of `C` and is solved by ADMM with a row-wise
//! proximal step. The constrained solution is recovered by sweeping `lambda`.

use nalgebra::{Cholesky, DMatrix, Dyn};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BifiError, Result};
use crate::linalg::{check_finite, pinv, select_columns, spectral_norm};

/// Relative slack on the residual constraint.
pub const FEASIBILITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LsMethod {
    Qr,
    SvdPinv,
}

#[derive(Debug, Clone)]
pub struct LsSolveReport {
    pub coefficients: DMatrix<f64>,
    pub residual_fro: f64,
    pub rank_used: usize,
    pub method: LsMethod,
}

fn check_system(psi: &DMatrix<f64>, u: &DMatrix<f64>) -> Result<()> {
    if psi.nrows() == 0 || psi.ncols() == 0 {
        return Err(BifiError::Empty(format!(
            "measurement matrix is {}x{}",
            psi.nrows(),
            psi.ncols()
        )));
    }
    if u.ncols() != psi.ncols() {
        return Err(BifiError::DimensionMismatch(format!(
            "data has {} samples, measurement matrix has {}",
            u.ncols(),
            psi.ncols()
        )));
    }
    check_finite(psi, "measurement matrix")?;
    check_finite(u, "data matrix")
}

/// `||C Psi - U||_F`
pub fn residual_fro(c: &DMatrix<f64>, psi: &DMatrix<f64>, u: &DMatrix<f64>) -> f64 {
    (c * psi - u).norm()
}

/// `||C||_{1,2}`
pub fn l12_norm(c: &DMatrix<f64>) -> f64 {
    c.row_iter()
        .map(|row| {
            let l1: f64 = row.iter().map(|v| v.abs()).sum();
            l1 * l1
        })
        .sum::<f64>()
        .sqrt()
}

/// Minimum-norm least-squares solution of `min ||C Psi - U||_F`.
///
/// Full-column-rank tall systems go through Householder QR; everything else
/// uses the SVD pseudoinverse.
pub fn least_squares(psi: &DMatrix<f64>, u: &DMatrix<f64>) -> Result<LsSolveReport> {
    check_system(psi, u)?;
    let (p, n) = psi.shape();
    let a = psi.transpose();
    let b = u.transpose();

    if n >= p {
        let qr = a.clone().qr();
        let r = qr.r();
        let diag_max = r.diagonal().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let diag_min = r.diagonal().iter().fold(f64::INFINITY, |acc, v| acc.min(v.abs()));
        if diag_max > 0.0 && diag_min > 1e-10 * diag_max {
            let qtb = qr.q().transpose() * &b;
            if let Some(x) = r.solve_upper_triangular(&qtb) {
                let coefficients = x.transpose();
                let residual_fro = residual_fro(&coefficients, psi, u);
                return Ok(LsSolveReport {
                    coefficients,
                    residual_fro,
                    rank_used: p,
                    method: LsMethod::Qr,
                });
            }
        }
    }

    let (a_pinv, rank_used) = pinv(&a, None);
    let coefficients = (a_pinv * b).transpose();
    let residual_fro = residual_fro(&coefficients, psi, u);
    Ok(LsSolveReport {
        coefficients,
        residual_fro,
        rank_used,
        method: LsMethod::SvdPinv,
    })
}

/// How the residual tolerance `kappa` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KappaPolicy {
    /// Solve the constrained problem for this `kappa`.
    Explicit(f64),
    /// Pick `lambda` by reconstruction error on a random holdout split, then
    /// refit on all samples; the realized residual becomes `kappa`.
    Holdout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SparseSolveOptions {
    pub kappa_policy: KappaPolicy,
    /// Penalty weights, in units of `||Psi||_2^2`.
    pub lambda_grid: Vec<f64>,
    /// Initial ADMM penalty, in units of `||Psi||_2^2`.
    pub admm_penalty: f64,
    pub max_iters: usize,
    pub primal_tol: f64,
    pub dual_tol: f64,
    pub holdout_fraction: f64,
    pub seed: u64,
}

impl Default for SparseSolveOptions {
    fn default() -> Self {
        SparseSolveOptions {
            kappa_policy: KappaPolicy::Holdout,
            lambda_grid: log_grid(1e-10, 1e1, 45),
            admm_penalty: 1.0,
            max_iters: 5000,
            primal_tol: 1e-9,
            dual_tol: 1e-9,
            holdout_fraction: 0.2,
            seed: 0,
        }
    }
}

impl SparseSolveOptions {
    pub fn validate(&self) -> Result<()> {
        if self.lambda_grid.is_empty() {
            return Err(BifiError::InvalidArgument("lambda_grid must be non-empty".into()));
        }
        if self.lambda_grid.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(BifiError::InvalidArgument("lambda_grid entries must be positive".into()));
        }
        if !(self.admm_penalty > 0.0 && self.primal_tol > 0.0 && self.dual_tol > 0.0) {
            return Err(BifiError::InvalidArgument(
                "admm_penalty and tolerances must be positive".into(),
            ));
        }
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0) {
            return Err(BifiError::InvalidArgument("holdout_fraction must lie in (0, 1)".into()));
        }
        if self.max_iters == 0 {
            return Err(BifiError::InvalidArgument("max_iters must be positive".into()));
        }
        if let KappaPolicy::Explicit(k) = self.kappa_policy {
            if !(k >= 0.0 && k.is_finite()) {
                return Err(BifiError::InvalidArgument("kappa must be non-negative".into()));
            }
        }
        Ok(())
    }
}

/// `count` log-spaced points from `hi` down to `lo`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![hi];
    }
    let (a, b) = (hi.ln(), lo.ln());
    (0..count)
        .map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp())
        .collect()
}

#[derive(Debug, Clone)]
pub struct SparseSolveReport {
    pub coefficients: DMatrix<f64>,
    /// `||C||_{1,2}` of the returned coefficients.
    pub objective: f64,
    pub residual_fro: f64,
    /// Absolute penalty weight; `None` when the solution came from the
    /// `lambda -> 0` or `lambda -> inf` limit.
    pub selected_lambda: Option<f64>,
    pub kappa: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Prox of `mu/2 ||x||_1^2`, applied in place.
pub(crate) fn prox_squared_l1(x: &mut [f64], mu: f64) {
    if mu <= 0.0 {
        return;
    }
    let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut partial = 0.0;
    let mut theta = 0.0;
    for (k, &a) in mags.iter().enumerate() {
        partial += a;
        let candidate = mu * partial / (1.0 + mu * (k + 1) as f64);
        if a > candidate {
            theta = candidate;
        } else {
            break;
        }
    }
    for v in x.iter_mut() {
        let shrunk = (v.abs() - theta).max(0.0);
        *v = shrunk.copysign(*v);
    }
}

fn prox_rows(z: &mut DMatrix<f64>, mu: f64) {
    let mut buf = vec![0.0; z.ncols()];
    for i in 0..z.nrows() {
        for (j, b) in buf.iter_mut().enumerate() {
            *b = z[(i, j)];
        }
        prox_squared_l1(&mut buf, mu);
        for (j, b) in buf.iter().enumerate() {
            z[(i, j)] = *b;
        }
    }
}

/// ADMM iterate pair, reused as a warm start along the lambda path.
#[derive(Debug, Clone)]
struct AdmmState {
    z: DMatrix<f64>,
    w: DMatrix<f64>,
    rho: f64,
}

struct AdmmOutcome {
    iterations: usize,
    converged: bool,
}

/// `x`-update backend: either a factorized ridge system (penalized problem)
/// or the affine projection onto `{X : X Psi = T}` (equality-constrained problem).
enum XStep<'a> {
    Ridge {
        gram: DMatrix<f64>,
        u_psi_t: DMatrix<f64>,
        chol: Option<(f64, Cholesky<f64, Dyn>)>,
    },
    Affine {
        psi: &'a DMatrix<f64>,
        psi_pinv: DMatrix<f64>,
        target: DMatrix<f64>,
    },
}

impl XStep<'_> {
    fn apply(&mut self, v: &DMatrix<f64>, rho: f64) -> Result<DMatrix<f64>> {
        match self {
            XStep::Ridge { gram, u_psi_t, chol } => {
                let stale = chol.as_ref().map_or(true, |(r, _)| *r != rho);
                if stale {
                    let mut sys = gram.clone();
                    for k in 0..sys.nrows() {
                        sys[(k, k)] += rho;
                    }
                    let factor = sys.cholesky().ok_or_else(|| {
                        BifiError::Numerical("ridge system not positive definite".into())
                    })?;
                    *chol = Some((rho, factor));
                }
                let (_, factor) = chol.as_ref().expect("factorized above");
                let rhs = (&*u_psi_t + v * rho).transpose();
                Ok(factor.solve(&rhs).transpose())
            }
            XStep::Affine {
                psi,
                psi_pinv,
                target,
            } => Ok(v - (v * &**psi - &*target) * &*psi_pinv),
        }
    }
}

/// Scaled-form ADMM on `f(X) + lambda/2 ||Z||_{1,2}^2`, `X = Z`.
fn run_admm(
    step: &mut XStep<'_>,
    lambda: f64,
    state: &mut AdmmState,
    opts: &SparseSolveOptions,
) -> Result<AdmmOutcome> {
    let size = (state.z.len() as f64).sqrt().max(1.0);
    let abs_floor = 1e-300;
    for it in 1..=opts.max_iters {
        let v = &state.z - &state.w;
        let x = step.apply(&v, state.rho)?;
        let z_old = state.z.clone();
        let mut z = &x + &state.w;
        prox_rows(&mut z, lambda / state.rho);
        state.w += &x - &z;
        state.z = z;

        let primal = (&x - &state.z).norm();
        let dual = state.rho * (&state.z - &z_old).norm();
        let eps_pri = size * abs_floor + opts.primal_tol * x.norm().max(state.z.norm());
        let eps_dual = size * abs_floor + opts.dual_tol * state.rho * state.w.norm();
        if primal <= eps_pri && dual <= eps_dual {
            return Ok(AdmmOutcome {
                iterations: it,
                converged: true,
            });
        }
        if it % 10 == 0 {
            if primal > 10.0 * dual {
                state.rho *= 2.0;
                state.w /= 2.0;
            } else if dual > 10.0 * primal {
                state.rho /= 2.0;
                state.w *= 2.0;
            }
        }
    }
    Ok(AdmmOutcome {
        iterations: opts.max_iters,
        converged: false,
    })
}

fn ridge_step<'a>(psi: &DMatrix<f64>, u: &DMatrix<f64>) -> XStep<'a> {
    XStep::Ridge {
        gram: psi * psi.transpose(),
        u_psi_t: u * psi.transpose(),
        chol: None,
    }
}

fn fresh_state(m: usize, p: usize, rho: f64) -> AdmmState {
    AdmmState {
        z: DMatrix::zeros(m, p),
        w: DMatrix::zeros(m, p),
        rho,
    }
}

/// Penalized fit for one absolute `lambda`.
pub fn l12_penalized(
    psi: &DMatrix<f64>,
    u: &DMatrix<f64>,
    lambda: f64,
    opts: &SparseSolveOptions,
) -> Result<SparseSolveReport> {
    check_system(psi, u)?;
    opts.validate()?;
    let scale = spectral_norm(psi).powi(2).max(f64::MIN_POSITIVE);
    let mut step = ridge_step(psi, u);
    let mut state = fresh_state(u.nrows(), psi.nrows(), opts.admm_penalty * scale);
    let outcome = run_admm(&mut step, lambda, &mut state, opts)?;
    let residual = residual_fro(&state.z, psi, u);
    Ok(SparseSolveReport {
        objective: l12_norm(&state.z),
        coefficients: state.z,
        residual_fro: residual,
        selected_lambda: Some(lambda),
        kappa: residual,
        iterations: outcome.iterations,
        converged: outcome.converged,
    })
}

/// Absolute residual floor, relative to `||U||_F`, reachable by the iterative solver.
const RESIDUAL_FLOOR: f64 = 1e-8;

fn is_feasible(residual: f64, kappa: f64, u_norm: f64) -> bool {
    residual <= kappa * (1.0 + FEASIBILITY_TOL) + RESIDUAL_FLOOR * u_norm
}

/// `min ||C||_{1,2}` subject to `||C Psi - U||_F <= kappa`.
pub fn l12_minimize(
    psi: &DMatrix<f64>,
    u: &DMatrix<f64>,
    opts: &SparseSolveOptions,
) -> Result<SparseSolveReport> {
    check_system(psi, u)?;
    opts.validate()?;
    match opts.kappa_policy {
        KappaPolicy::Explicit(kappa) => constrained(psi, u, kappa, opts),
        KappaPolicy::Holdout => holdout(psi, u, opts),
    }
}

fn constrained(
    psi: &DMatrix<f64>,
    u: &DMatrix<f64>,
    kappa: f64,
    opts: &SparseSolveOptions,
) -> Result<SparseSolveReport> {
    let (m, p) = (u.nrows(), psi.nrows());
    let u_norm = u.norm();

    if kappa >= u_norm {
        return Ok(SparseSolveReport {
            coefficients: DMatrix::zeros(m, p),
            objective: 0.0,
            residual_fro: u_norm,
            selected_lambda: None,
            kappa,
            iterations: 0,
            converged: true,
        });
    }

    let ls = least_squares(psi, u)?;
    if !is_feasible(ls.residual_fro, kappa, u_norm) {
        return Err(BifiError::Infeasible {
            kappa,
            best_residual: ls.residual_fro,
        });
    }

    let scale = spectral_norm(psi).powi(2).max(f64::MIN_POSITIVE);

    // kappa at the least-squares floor: the feasible set is the affine set of
    // least-squares minimizers.
    if kappa <= ls.residual_fro * (1.0 + 1e-9) + 1e-14 * u_norm {
        if ls.rank_used == p {
            return Ok(SparseSolveReport {
                objective: l12_norm(&ls.coefficients),
                coefficients: ls.coefficients,
                residual_fro: ls.residual_fro,
                selected_lambda: None,
                kappa,
                iterations: 0,
                converged: true,
            });
        }
        let (psi_pinv, _) = pinv(psi, None);
        let target = &ls.coefficients * psi;
        let mut step = XStep::Affine {
            psi,
            psi_pinv,
            target,
        };
        let mut state = fresh_state(m, p, opts.admm_penalty * scale);
        let outcome = run_admm(&mut step, 1.0, &mut state, opts)?;
        let residual = residual_fro(&state.z, psi, u);
        return Ok(SparseSolveReport {
            objective: l12_norm(&state.z),
            coefficients: state.z,
            residual_fro: residual,
            selected_lambda: None,
            kappa,
            iterations: outcome.iterations,
            converged: outcome.converged && is_feasible(residual, kappa, u_norm),
        });
    }

    // Sweep lambda from large to small with warm starts; the residual grows with
    // lambda, so the first feasible point is the largest feasible lambda.
    let mut grid: Vec<f64> = opts.lambda_grid.iter().map(|l| l * scale).collect();
    grid.sort_by(|a, b| b.total_cmp(a));
    let mut step = ridge_step(psi, u);
    let mut state = fresh_state(m, p, opts.admm_penalty * scale);
    let mut total_iters = 0;
    let mut best_residual = f64::INFINITY;
    let mut prev: Option<(f64, AdmmState)> = None;
    let mut found: Option<(f64, AdmmState, bool, f64)> = None;
    for &lambda in &grid {
        let outcome = run_admm(&mut step, lambda, &mut state, opts)?;
        total_iters += outcome.iterations;
        let residual = residual_fro(&state.z, psi, u);
        best_residual = best_residual.min(residual);
        if is_feasible(residual, kappa, u_norm) {
            found = Some((lambda, state.clone(), outcome.converged, residual));
            break;
        }
        prev = Some((lambda, state.clone()));
    }
    let (mut lambda_ok, mut state_ok, mut conv_ok, mut res_ok) = found.ok_or(BifiError::Infeasible {
        kappa,
        best_residual,
    })?;

    // Log-space bisection towards the constraint boundary.
    if let Some((mut lambda_bad, _)) = prev {
        for _ in 0..30 {
            if lambda_bad / lambda_ok < 1.0 + 1e-6 {
                break;
            }
            let mid = (lambda_ok * lambda_bad).sqrt();
            let mut trial = state_ok.clone();
            let outcome = run_admm(&mut step, mid, &mut trial, opts)?;
            total_iters += outcome.iterations;
            let residual = residual_fro(&trial.z, psi, u);
            if is_feasible(residual, kappa, u_norm) {
                lambda_ok = mid;
                state_ok = trial;
                conv_ok = outcome.converged;
                res_ok = residual;
            } else {
                lambda_bad = mid;
            }
        }
    }

    Ok(SparseSolveReport {
        objective: l12_norm(&state_ok.z),
        coefficients: state_ok.z,
        residual_fro: res_ok,
        selected_lambda: Some(lambda_ok),
        kappa,
        iterations: total_iters,
        converged: conv_ok,
    })
}

fn holdout(psi: &DMatrix<f64>, u: &DMatrix<f64>, opts: &SparseSolveOptions) -> Result<SparseSolveReport> {
    let n = psi.ncols();
    if n < 2 {
        return Err(BifiError::InvalidArgument(
            "holdout calibration needs at least 2 samples".into(),
        ));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(opts.seed));
    let n_hold = ((n as f64 * opts.holdout_fraction).round() as usize).clamp(1, n - 1);
    let (hold_idx, train_idx) = order.split_at(n_hold);
    let mut train_idx = train_idx.to_vec();
    let mut hold_idx = hold_idx.to_vec();
    train_idx.sort_unstable();
    hold_idx.sort_unstable();

    let psi_tr = select_columns(psi, &train_idx);
    let u_tr = select_columns(u, &train_idx);
    let psi_ho = select_columns(psi, &hold_idx);
    let u_ho = select_columns(u, &hold_idx);

    let scale_tr = spectral_norm(&psi_tr).powi(2).max(f64::MIN_POSITIVE);
    let scale = spectral_norm(psi).powi(2).max(f64::MIN_POSITIVE);
    let mut rel: Vec<f64> = opts.lambda_grid.clone();
    rel.sort_by(|a, b| b.total_cmp(a));

    let mut step = ridge_step(&psi_tr, &u_tr);
    let mut state = fresh_state(u.nrows(), psi.nrows(), opts.admm_penalty * scale_tr);
    let mut best: Option<(f64, f64)> = None;
    for &l in &rel {
        run_admm(&mut step, l * scale_tr, &mut state, opts)?;
        let err = residual_fro(&state.z, &psi_ho, &u_ho);
        // strict improvement keeps the larger lambda on ties
        if best.map_or(true, |(_, e)| err < e) {
            best = Some((l, err));
        }
    }
    let (l_best, _) = best.expect("grid is non-empty");
    let mut report = l12_penalized(psi, u, l_best * scale, opts)?;
    report.kappa = report.residual_fro;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prox_matches_optimality_conditions() {
        let v = [3.0, -1.0, 0.5, 0.0, -2.5];
        let mu = 0.3;
        let mut x = v;
        prox_squared_l1(&mut x, mu);
        let l1: f64 = x.iter().map(|a| a.abs()).sum();
        for (xi, vi) in x.iter().zip(v.iter()) {
            if *xi != 0.0 {
                // x = v - mu * ||x||_1 * sign(x)
                assert!((xi - (vi - mu * l1 * xi.signum())).abs() < 1e-12);
            } else {
                assert!(vi.abs() <= mu * l1 + 1e-12);
            }
        }
    }

    #[test]
    fn identity_design_least_squares() {
        let psi = DMatrix::<f64>::identity(5, 5);
        let u = DMatrix::from_fn(3, 5, |i, j| (i * 5 + j) as f64 - 4.0);
        let rep = least_squares(&psi, &u).unwrap();
        assert!((rep.coefficients - &u).norm() < 1e-14);
        assert_eq!(rep.method, LsMethod::Qr);
    }

    #[test]
    fn least_squares_rejects_bad_input() {
        let psi = DMatrix::<f64>::zeros(3, 0);
        let u = DMatrix::<f64>::zeros(2, 0);
        assert!(matches!(least_squares(&psi, &u), Err(BifiError::Empty(_))));
        let mut psi = DMatrix::<f64>::identity(2, 2);
        psi[(0, 1)] = f64::NAN;
        assert!(matches!(
            least_squares(&psi, &DMatrix::zeros(1, 2)),
            Err(BifiError::NonFinite(_))
        ));
        assert!(least_squares(&DMatrix::identity(2, 2), &DMatrix::zeros(1, 3)).is_err());
    }

    #[test]
    fn zero_data_gives_zero_coefficients() {
        let psi = DMatrix::from_fn(4, 7, |i, j| ((i + 1) * (j + 2)) as f64 % 5.0 - 2.0);
        let u = DMatrix::zeros(2, 7);
        let opts = SparseSolveOptions {
            kappa_policy: KappaPolicy::Explicit(0.0),
            ..Default::default()
        };
        let rep = l12_minimize(&psi, &u, &opts).unwrap();
        assert_eq!(rep.coefficients, DMatrix::zeros(2, 4));
        assert_eq!(rep.objective, 0.0);
    }

    #[test]
    fn identity_design_pins_coefficients() {
        let psi = DMatrix::<f64>::identity(8, 8);
        let u = DMatrix::from_fn(3, 8, |i, j| ((i + 2 * j) as f64).sin());
        let opts = SparseSolveOptions {
            kappa_policy: KappaPolicy::Explicit(0.0),
            ..Default::default()
        };
        let rep = l12_minimize(&psi, &u, &opts).unwrap();
        assert!((rep.coefficients - u).norm() < 1e-14);
    }

    #[test]
    fn kappa_below_ls_floor_is_infeasible() {
        let psi = DMatrix::from_fn(2, 6, |i, j| ((i + 1) as f64 * 0.7 * j as f64).cos());
        let u = DMatrix::from_fn(1, 6, |_, j| (j as f64).powi(2));
        let floor = least_squares(&psi, &u).unwrap().residual_fro;
        assert!(floor > 1e-3);
        let opts = SparseSolveOptions {
            kappa_policy: KappaPolicy::Explicit(0.5 * floor),
            ..Default::default()
        };
        match l12_minimize(&psi, &u, &opts) {
            Err(BifiError::Infeasible { best_residual, .. }) => {
                assert!((best_residual - floor).abs() < 1e-12)
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn large_kappa_returns_zero() {
        let psi = DMatrix::<f64>::identity(3, 3);
        let u = DMatrix::from_element(1, 3, 1.0);
        let opts = SparseSolveOptions {
            kappa_policy: KappaPolicy::Explicit(10.0),
            ..Default::default()
        };
        let rep = l12_minimize(&psi, &u, &opts).unwrap();
        assert_eq!(rep.objective, 0.0);
    }

    #[test]
    fn options_validation() {
        let mut o = SparseSolveOptions::default();
        assert!(o.validate().is_ok());
        o.lambda_grid.clear();
        assert!(o.validate().is_err());
        let o = SparseSolveOptions {
            holdout_fraction: 1.0,
            ..Default::default()
        };
        assert!(o.validate().is_err());
    }

    #[test]
    fn holdout_needs_two_samples() {
        let psi = DMatrix::from_element(1, 1, 1.0);
        let u = DMatrix::from_element(1, 1, 1.0);
        assert!(l12_minimize(&psi, &u, &SparseSolveOptions::default()).is_err());
    }
}
