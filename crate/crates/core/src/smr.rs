//! Stochastic model reduction: low-fidelity PC fit, KL decomposition of the
//! LF coefficients, reduced basis, and the bi-fidelity regression.

use std::collections::HashMap;

use log::warn;
use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::basis::PcBasis;
use crate::error::{BifiError, Result};
use crate::linalg::{check_finite, row_sum_squares, select_columns};
use crate::solvers::{l12_minimize, least_squares, SparseSolveOptions};

/// Relative cutoff below which a KL eigenvalue counts as zero.
pub const EIGEN_CUTOFF: f64 = 1e-14;

/// Default energy fraction for automatic rank selection.
pub const DEFAULT_ENERGY: f64 = 0.9999;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fidelity {
    #[serde(rename = "lf")]
    Low,
    #[serde(rename = "hf")]
    High,
}

/// Paired input realizations and QoI samples at one fidelity.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    /// N x d, one canonical realization per row.
    pub inputs: DMatrix<f64>,
    /// points x N, one sample per column.
    pub qoi: DMatrix<f64>,
    pub fidelity: Fidelity,
    pub point_coords: Option<Vec<f64>>,
}

impl Ensemble {
    pub fn new(
        inputs: DMatrix<f64>,
        qoi: DMatrix<f64>,
        fidelity: Fidelity,
        point_coords: Option<Vec<f64>>,
    ) -> Result<Self> {
        if qoi.ncols() != inputs.nrows() {
            return Err(BifiError::DimensionMismatch(format!(
                "{} QoI samples but {} input realizations",
                qoi.ncols(),
                inputs.nrows()
            )));
        }
        if let Some(coords) = &point_coords {
            if coords.len() != qoi.nrows() {
                return Err(BifiError::DimensionMismatch(format!(
                    "{} point coordinates for {} QoI points",
                    coords.len(),
                    qoi.nrows()
                )));
            }
        }
        check_finite(&inputs, "ensemble inputs")?;
        check_finite(&qoi, "ensemble QoI")?;
        Ok(Ensemble {
            inputs,
            qoi,
            fidelity,
            point_coords,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn n_points(&self) -> usize {
        self.qoi.nrows()
    }

    /// Sub-ensemble made of the given sample indices.
    pub fn select(&self, indices: &[usize]) -> Ensemble {
        Ensemble {
            inputs: DMatrix::from_fn(indices.len(), self.inputs.ncols(), |i, k| {
                self.inputs[(indices[i], k)]
            }),
            qoi: select_columns(&self.qoi, indices),
            fidelity: self.fidelity,
            point_coords: self.point_coords.clone(),
        }
    }
}

/// Solver used for a full PC fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "method")]
pub enum PcSolver {
    /// l1,2-minimization.
    L12(SparseSolveOptions),
    LeastSquares,
}

impl Default for PcSolver {
    fn default() -> Self {
        PcSolver::L12(SparseSolveOptions::default())
    }
}

/// PC coefficients (points x P) of an ensemble.
pub fn fit_pc(ens: &Ensemble, basis: &PcBasis, solver: &PcSolver) -> Result<DMatrix<f64>> {
    let psi = basis.measurement_matrix(&ens.inputs)?;
    match solver {
        PcSolver::L12(opts) => Ok(l12_minimize(&psi, &ens.qoi, opts)?.coefficients),
        PcSolver::LeastSquares => Ok(least_squares(&psi, &ens.qoi)?.coefficients),
    }
}

/// LF PC coefficients `C^L` (m x P).
pub fn fit_lf_pc(lf: &Ensemble, basis: &PcBasis, solver: &PcSolver) -> Result<DMatrix<f64>> {
    fit_pc(lf, basis, solver)
}

/// Discrete KL decomposition of a PC surrogate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KlDecomposition {
    pub mean: DVector<f64>,
    /// Non-increasing, non-negative.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal columns, one per eigenvalue.
    pub eigenvectors: DMatrix<f64>,
}

impl KlDecomposition {
    /// Number of eigenvalues above `EIGEN_CUTOFF * lambda_1`.
    pub fn positive_rank(&self) -> usize {
        let top = self.eigenvalues.first().copied().unwrap_or(0.0);
        if top <= 0.0 {
            return 0;
        }
        self.eigenvalues
            .iter()
            .take_while(|&&l| l > EIGEN_CUTOFF * top)
            .count()
    }

    /// Eigenvalues divided by the largest one (all zeros for an empty spectrum).
    pub fn normalized_eigenvalues(&self) -> Vec<f64> {
        let top = self.eigenvalues.first().copied().unwrap_or(0.0);
        if top <= 0.0 {
            return vec![0.0; self.eigenvalues.len()];
        }
        self.eigenvalues.iter().map(|l| l / top).collect()
    }
}

/// Eigenpairs of `sum_{j>=2} c_j c_j^T`, from the SVD of the non-constant
/// coefficient columns.
pub fn kl_decompose(c: &DMatrix<f64>) -> Result<KlDecomposition> {
    let (m, p) = c.shape();
    if p < 2 {
        return Err(BifiError::InvalidArgument(format!(
            "KL decomposition needs at least 2 PC terms, got {p}"
        )));
    }
    let mean = c.column(0).into_owned();
    let fluct = c.columns(1, p - 1).into_owned();
    let k = m.min(p - 1);
    if k == 0 {
        return Ok(KlDecomposition {
            mean,
            eigenvalues: Vec::new(),
            eigenvectors: DMatrix::zeros(m, 0),
        });
    }
    let svd = fluct.svd(true, false);
    let u = svd.u.expect("left vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut eigenvalues = Vec::with_capacity(k);
    let mut eigenvectors = DMatrix::zeros(m, k);
    for (dst, &src) in order.iter().take(k).enumerate() {
        eigenvalues.push(svd.singular_values[src].powi(2));
        let mut v = u.column(src).into_owned();
        // Sign convention: the entry of largest magnitude is positive.
        let pivot = v.iter().fold(0.0f64, |acc, &x| if x.abs() > acc.abs() { x } else { acc });
        if pivot < 0.0 {
            v.neg_mut();
        }
        eigenvectors.set_column(dst, &v);
    }
    Ok(KlDecomposition {
        mean,
        eigenvalues,
        eigenvectors,
    })
}

/// How the reduced rank `r` (including the constant function) is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankPolicy {
    #[serde(rename = "r")]
    Explicit(usize),
    /// Smallest `r` whose leading `r - 1` eigenvalues carry this energy fraction.
    Threshold(f64),
}

impl Default for RankPolicy {
    fn default() -> Self {
        RankPolicy::Threshold(DEFAULT_ENERGY)
    }
}

pub fn select_rank(eigenvalues: &[f64], policy: RankPolicy) -> Result<usize> {
    let top = eigenvalues.first().copied().unwrap_or(0.0);
    let positive = if top > 0.0 {
        eigenvalues.iter().take_while(|&&l| l > EIGEN_CUTOFF * top).count()
    } else {
        0
    };
    match policy {
        RankPolicy::Explicit(r) => Ok(r.clamp(1, 1 + positive)),
        RankPolicy::Threshold(theta) => {
            let total: f64 = eigenvalues.iter().sum();
            if !(total > 0.0) {
                return Err(BifiError::Degenerate(
                    "all-zero KL spectrum; energy threshold undefined".into(),
                ));
            }
            let mut cum = 0.0;
            if theta <= 0.0 {
                return Ok(1);
            }
            for (i, l) in eigenvalues.iter().enumerate() {
                cum += l;
                if cum / total >= theta - 1e-12 {
                    return Ok(i + 2);
                }
            }
            Ok(eigenvalues.len() + 1)
        }
    }
}

/// Reduced stochastic basis `{1, eta_1, ..., eta_{r-1}}` with
/// `eta_i = sum_{j>=2} omega_ij psi_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedBasis {
    pub basis: PcBasis,
    /// `(r - 1) x (P - 1)`
    pub weights: DMatrix<f64>,
    pub lf_mean: DVector<f64>,
    pub eigenvalues: Vec<f64>,
}

impl ReducedBasis {
    pub fn rank(&self) -> usize {
        self.weights.nrows() + 1
    }

    /// Reduced basis evaluated through an existing PC measurement matrix.
    pub fn eval_from_measurement(&self, psi: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let (p, n) = psi.shape();
        if p != self.basis.len() {
            return Err(BifiError::DimensionMismatch(format!(
                "measurement matrix has {p} rows, basis has {}",
                self.basis.len()
            )));
        }
        let r = self.rank();
        let mut eta = DMatrix::zeros(r, n);
        eta.row_mut(0).fill(1.0);
        if r > 1 && n > 0 {
            let tail = &self.weights * psi.rows(1, p - 1);
            eta.rows_mut(1, r - 1).copy_from(&tail);
        }
        Ok(eta)
    }
}

pub fn build_reduced_basis(
    c: &DMatrix<f64>,
    kl: &KlDecomposition,
    r: usize,
    basis: &PcBasis,
) -> Result<ReducedBasis> {
    let p = c.ncols();
    if p != basis.len() {
        return Err(BifiError::DimensionMismatch(format!(
            "coefficients have {p} columns, basis has {} terms",
            basis.len()
        )));
    }
    if r == 0 {
        return Err(BifiError::InvalidArgument("rank must be at least 1".into()));
    }
    let available = 1 + kl.positive_rank();
    if r > available {
        return Err(BifiError::RankTooLarge {
            requested: r,
            available,
        });
    }
    let fluct = c.columns(1, p - 1);
    let mut weights = DMatrix::zeros(r - 1, p - 1);
    for i in 0..r - 1 {
        let phi = kl.eigenvectors.column(i);
        let scale = kl.eigenvalues[i].sqrt();
        let row = phi.transpose() * fluct / scale;
        weights.set_row(i, &row);
    }
    Ok(ReducedBasis {
        basis: basis.clone(),
        weights,
        lf_mean: kl.mean.clone(),
        eigenvalues: kl.eigenvalues.clone(),
    })
}

/// `eta` (r x N) at the given samples; row 0 is all ones.
pub fn eval_reduced_basis(rb: &ReducedBasis, samples: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let psi = rb.basis.measurement_matrix(samples)?;
    rb.eval_from_measurement(&psi)
}

/// BF coefficients `C^B` (M x r) from `min ||C^B eta_n - H_n||_F`.
pub fn bf_regress(eta_n: &DMatrix<f64>, h_n: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (r, n) = eta_n.shape();
    if n == 0 {
        return Err(BifiError::Empty("no HF samples for the BF regression".into()));
    }
    let recommended = r as f64 * (r as f64).ln();
    if (n as f64) < recommended {
        warn!("{n} HF samples for rank {r}; about r*ln(r) = {recommended:.1} are recommended");
    }
    Ok(least_squares(eta_n, h_n)?.coefficients)
}

/// A fitted bi-fidelity surrogate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BfModel {
    /// `C^B`, M x r.
    pub coefficients: DMatrix<f64>,
    pub reduced: ReducedBasis,
    pub n_used: usize,
    pub hf_indices: Vec<usize>,
}

impl BfModel {
    pub fn statistics(&self) -> StatSummary {
        statistics(&self.coefficients).expect("BF coefficients have at least one column")
    }
}

/// `H_hat = C^B eta_N`.
pub fn bf_predict(model: &BfModel, samples: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eta = eval_reduced_basis(&model.reduced, samples)?;
    Ok(&model.coefficients * eta)
}

/// Pointwise mean and variance of a surrogate with an orthonormal basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatSummary {
    pub mean: DVector<f64>,
    pub variance: DVector<f64>,
}

/// Mean is the first coefficient column; variance the row-wise sum of squares
/// of the remaining columns.
pub fn statistics(c: &DMatrix<f64>) -> Result<StatSummary> {
    let k = c.ncols();
    if k == 0 {
        return Err(BifiError::Empty("coefficient matrix has no columns".into()));
    }
    let mean = c.column(0).into_owned();
    let variance = if k > 1 {
        row_sum_squares(&c.columns(1, k - 1).into_owned())
    } else {
        DVector::zeros(c.nrows())
    };
    Ok(StatSummary { mean, variance })
}

/// Relative 2-norm errors `(e_mean, e_var)` of `est` against `reference`.
pub fn relative_error(est: &StatSummary, reference: &StatSummary) -> Result<(f64, f64)> {
    if est.mean.len() != reference.mean.len() || est.variance.len() != reference.variance.len() {
        return Err(BifiError::DimensionMismatch(format!(
            "estimate has {} points, reference has {}",
            est.mean.len(),
            reference.mean.len()
        )));
    }
    let rel = |a: &DVector<f64>, b: &DVector<f64>, what: &str| -> Result<f64> {
        let denom = b.norm();
        if denom == 0.0 {
            return Err(BifiError::Degenerate(format!("reference {what} has zero norm")));
        }
        Ok((b - a).norm() / denom)
    };
    Ok((
        rel(&est.mean, &reference.mean, "mean")?,
        rel(&est.variance, &reference.variance, "variance")?,
    ))
}

/// `n` distinct indices drawn uniformly from `0..total`, sorted.
pub fn select_hf_subset<R: Rng + ?Sized>(n: usize, total: usize, rng: &mut R) -> Result<Vec<usize>> {
    if n > total {
        return Err(BifiError::InvalidArgument(format!(
            "requested {n} HF samples out of {total}"
        )));
    }
    let mut idx = sample(rng, total, n).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

/// LF stage of the algorithm: PC coefficients and their KL decomposition.
#[derive(Debug, Clone)]
pub struct LfReduction {
    pub coefficients: DMatrix<f64>,
    pub kl: KlDecomposition,
}

impl LfReduction {
    pub fn new(lf: &Ensemble, basis: &PcBasis, solver: &PcSolver) -> Result<Self> {
        let coefficients = fit_lf_pc(lf, basis, solver)?;
        let kl = kl_decompose(&coefficients)?;
        Ok(LfReduction { coefficients, kl })
    }

    pub fn reduced_basis(&self, basis: &PcBasis, r: usize) -> Result<ReducedBasis> {
        build_reduced_basis(&self.coefficients, &self.kl, r, basis)
    }
}

/// Fit `C^B` on the HF samples `hf_indices` of `hf`, whose inputs are shared with the LF ensemble.
pub fn fit_bf(reduced: &ReducedBasis, hf: &Ensemble, hf_indices: &[usize]) -> Result<BfModel> {
    let sub = hf.select(hf_indices);
    let eta_n = eval_reduced_basis(reduced, &sub.inputs)?;
    let coefficients = bf_regress(&eta_n, &sub.qoi)?;
    Ok(BfModel {
        coefficients,
        reduced: reduced.clone(),
        n_used: hf_indices.len(),
        hf_indices: hf_indices.to_vec(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SmrDiagnostics {
    pub eigenvalues: Vec<f64>,
    pub rank: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct SmrOutcome {
    pub model: BfModel,
    pub stats: StatSummary,
    pub lf: LfReduction,
    pub diagnostics: SmrDiagnostics,
}

fn locate_rows(all: &DMatrix<f64>, subset: &DMatrix<f64>) -> Result<Vec<usize>> {
    let key = |m: &DMatrix<f64>, i: usize| -> Vec<u64> { m.row(i).iter().map(|v| v.to_bits()).collect() };
    let mut lookup: HashMap<Vec<u64>, usize> = HashMap::with_capacity(all.nrows());
    for i in (0..all.nrows()).rev() {
        lookup.insert(key(all, i), i);
    }
    (0..subset.nrows())
        .map(|i| {
            lookup.get(&key(subset, i)).copied().ok_or_else(|| {
                BifiError::Data(format!("HF realization {i} is not among the LF inputs"))
            })
        })
        .collect()
}

/// Full SMR pipeline: LF PC fit, KL, rank choice, reduced basis, BF regression
/// on the HF subset, statistics.
pub fn run_smr(
    lf: &Ensemble,
    hf_subset: &Ensemble,
    basis: &PcBasis,
    policy: RankPolicy,
    solver: &PcSolver,
) -> Result<SmrOutcome> {
    if hf_subset.inputs.ncols() != lf.inputs.ncols() && hf_subset.n_samples() > 0 {
        return Err(BifiError::DimensionMismatch("LF and HF input dimensions differ".into()));
    }
    let hf_indices = locate_rows(&lf.inputs, &hf_subset.inputs)?;
    let lfr = LfReduction::new(lf, basis, solver)?;
    let r = select_rank(&lfr.kl.eigenvalues, policy)?;
    let reduced = lfr.reduced_basis(basis, r)?;

    let mut warnings = Vec::new();
    let n = hf_subset.n_samples();
    if (n as f64) < r as f64 * (r as f64).ln() {
        warnings.push(format!("n = {n} is below r*ln(r) for r = {r}"));
    }
    let eta_n = eval_reduced_basis(&reduced, &hf_subset.inputs)?;
    let coefficients = bf_regress(&eta_n, &hf_subset.qoi)?;
    let model = BfModel {
        coefficients,
        reduced,
        n_used: n,
        hf_indices,
    };
    let stats = model.statistics();
    let diagnostics = SmrDiagnostics {
        eigenvalues: lfr.kl.eigenvalues.clone(),
        rank: r,
        warnings,
    };
    Ok(SmrOutcome {
        model,
        stats,
        lf: lfr,
        diagnostics,
    })
}
