//! File formats, run configuration and the command drivers behind the `bifi` binary.
//!
//! Matrices are plain CSV without a header, one matrix row per line, values
//! written with 17 significant digits. A row with zero columns is an empty
//! line. All randomness derives from the config seed through named
//! sub-streams, so results do not depend on thread count or scheduling.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::basis::{Family, PcBasis};
use crate::bounds::{
    coherence, corollary1_diagnostics, default_tau_grid, practical_error_bounds, reference_mse,
    rho_k_tau, theorem2_report, BoundReport, Corollary1Diagnostics, EpsilonEstimator,
    Theorem1Report, Theorem2Report, DEFAULT_T,
};
use crate::error::{BifiError, Result};
use crate::linalg::{select_columns, spectral_norm};
use crate::mid::{mid_bifidelity, mid_decompose};
use crate::models::{generate_ensemble_with, ModelPairSpec};
use crate::smr::{
    bf_predict, bf_regress, eval_reduced_basis, fit_bf, fit_pc, relative_error, select_hf_subset,
    select_rank, statistics, BfModel, Ensemble, Fidelity, LfReduction, PcSolver, RankPolicy,
    ReducedBasis, StatSummary,
};

// ---------------------------------------------------------------- matrices

/// CSV text of a matrix.
pub fn format_matrix(m: &DMatrix<f64>) -> String {
    let mut out = String::with_capacity(m.nrows() * (m.ncols() * 24 + 1));
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{:.16e}", m[(i, j)]).expect("writing to a String");
        }
        out.push('\n');
    }
    out
}

/// Parse CSV text; every line must have the same number of fields.
pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        let row = if line.trim().is_empty() {
            Vec::new()
        } else {
            line.split(',')
                .map(|f| {
                    f.trim().parse::<f64>().map_err(|e| {
                        BifiError::Data(format!("line {}: cannot parse {f:?}: {e}", lineno + 1))
                    })
                })
                .collect::<Result<Vec<f64>>>()?
        };
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(BifiError::Data(format!(
                    "line {} has {} fields, expected {}",
                    lineno + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    let ncols = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    fs::write(path, format_matrix(m))?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let text = fs::read_to_string(path)
        .map_err(|e| BifiError::Data(format!("{}: {e}", path.display())))?;
    parse_matrix(&text)
}

// ------------------------------------------------------------------ config

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisConfig {
    pub d: usize,
    pub p: usize,
    #[serde(default = "default_family")]
    pub family: Family,
}

fn default_family() -> Family {
    Family::Legendre
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataFiles {
    pub lf: PathBuf,
    pub hf: PathBuf,
    pub inputs: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelSource {
    Builtin(ModelPairSpec),
    Files(DataFiles),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub n: Vec<usize>,
    pub r: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSource,
    pub basis: BasisConfig,
    #[serde(default)]
    pub solver: PcSolver,
    #[serde(default)]
    pub rank: RankPolicy,
    /// HF samples used by the BF regression.
    pub n: usize,
    /// HF samples used by the practical bounds; defaults to `n`.
    #[serde(default)]
    pub n_hat: Option<usize>,
    /// Ensemble size. Required for built-in models.
    #[serde(rename = "N", default)]
    pub big_n: Option<usize>,
    #[serde(default = "default_t")]
    pub t: f64,
    #[serde(default)]
    pub tau_grid: Option<Vec<f64>>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub sweep: Option<SweepGrid>,
}

fn default_t() -> f64 {
    DEFAULT_T
}

fn default_repetitions() -> usize {
    100
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| BifiError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| BifiError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(BifiError::Config(m));
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if !(self.t >= 0.0 && self.t.is_finite()) {
            return bad(format!("t = {} must be finite and non-negative", self.t));
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        if let Some(nh) = self.n_hat {
            if nh < self.n {
                return bad(format!("n_hat = {nh} is below n = {}", self.n));
            }
        }
        if let Some(grid) = &self.tau_grid {
            if grid.is_empty() || grid.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
                return bad("tau_grid must be non-empty and positive".into());
            }
        }
        if let Some(s) = &self.sweep {
            if s.n.is_empty() || s.r.is_empty() {
                return bad("sweep grids must be non-empty".into());
            }
            if s.n.contains(&0) || s.r.contains(&0) {
                return bad("sweep grids must be positive".into());
            }
        }
        if let RankPolicy::Threshold(th) = self.rank {
            if !(0.0..=1.0).contains(&th) {
                return bad(format!("energy threshold {th} outside [0, 1]"));
            }
        }
        if let PcSolver::L12(opts) = &self.solver {
            opts.validate().map_err(|e| BifiError::Config(e.to_string()))?;
        }
        match &self.model {
            ModelSource::Builtin(spec) => {
                spec.validate()?;
                if self.big_n.is_none() {
                    return bad("built-in models need N".into());
                }
                if spec.dimension != self.basis.d {
                    return bad(format!(
                        "basis dimension {} differs from model dimension {}",
                        self.basis.d, spec.dimension
                    ));
                }
            }
            ModelSource::Files(_) => {}
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON serialization, hex encoded.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
            write!(s, "{b:02x}").expect("writing to a String");
            s
        })
    }

    fn pc_basis(&self) -> Result<PcBasis> {
        PcBasis::new(self.basis.d, self.basis.p, self.basis.family)
    }

    /// Solver with its holdout split seeded from the named stream `name`.
    fn seeded_solver(&self, name: &str, idx: u64) -> PcSolver {
        match &self.solver {
            PcSolver::L12(opts) => {
                let mut o = opts.clone();
                o.seed = sub_seed(self.seed, name, idx);
                PcSolver::L12(o)
            }
            PcSolver::LeastSquares => PcSolver::LeastSquares,
        }
    }
}

/// Seed for the named sub-stream `name`, index `idx`.
pub fn sub_seed(seed: u64, name: &str, idx: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(name.as_bytes());
    h.update([0u8]);
    h.update(idx.to_le_bytes());
    let digest = h.finalize();
    let mut word = [0u8; 8];
    word.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(word)
}

pub fn sub_rng(seed: u64, name: &str, idx: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(sub_seed(seed, name, idx))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

// -------------------------------------------------------------------- data

/// LF and HF ensembles on shared inputs.
#[derive(Debug, Clone)]
pub struct DataSet {
    pub lf: Ensemble,
    pub hf: Ensemble,
    /// Maps LF QoI vectors to the HF points, when the two can be related.
    pub lf_to_hf: Option<DMatrix<f64>>,
}

impl DataSet {
    pub fn n_samples(&self) -> usize {
        self.hf.n_samples()
    }
}

pub fn load_data(cfg: &RunConfig) -> Result<DataSet> {
    match &cfg.model {
        ModelSource::Builtin(spec) => {
            let n = cfg.big_n.expect("validated");
            let mut rng = sub_rng(cfg.seed, "sampling", 0);
            let (lf, hf) = generate_ensemble_with(spec, n, &mut rng)?;
            Ok(DataSet {
                lf,
                hf,
                lf_to_hf: Some(spec.lf_to_hf()),
            })
        }
        ModelSource::Files(files) => {
            let l = read_matrix(&files.lf)?;
            let h = read_matrix(&files.hf)?;
            let inputs = read_matrix(&files.inputs)?;
            if l.ncols() != h.ncols() || h.ncols() != inputs.nrows() {
                return Err(BifiError::Data(format!(
                    "sample counts differ: L has {}, H has {}, inputs has {}",
                    l.ncols(),
                    h.ncols(),
                    inputs.nrows()
                )));
            }
            if let Some(n) = cfg.big_n {
                if n != h.ncols() {
                    return Err(BifiError::Data(format!("config N = {n}, files hold {}", h.ncols())));
                }
            }
            if inputs.nrows() > 0 && inputs.ncols() != cfg.basis.d {
                return Err(BifiError::Data(format!(
                    "inputs have {} columns, basis dimension is {}",
                    inputs.ncols(),
                    cfg.basis.d
                )));
            }
            let lf_to_hf = (l.nrows() == h.nrows()).then(|| DMatrix::identity(h.nrows(), h.nrows()));
            Ok(DataSet {
                lf: Ensemble::new(inputs.clone(), l, Fidelity::Low, None)?,
                hf: Ensemble::new(inputs, h, Fidelity::High, None)?,
                lf_to_hf,
            })
        }
    }
}

// ------------------------------------------------------------------ report

/// A number, or null together with the reason it is missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl Metric {
    pub fn of(v: f64) -> Self {
        if v.is_finite() {
            Metric {
                value: Some(v),
                reason: None,
            }
        } else {
            Metric::missing(format!("non-finite value {v}"))
        }
    }

    pub fn missing(reason: impl Into<String>) -> Self {
        Metric {
            value: None,
            reason: Some(reason.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorPair {
    pub mean: Metric,
    pub variance: Metric,
}

impl ErrorPair {
    fn from_result(r: Result<(f64, f64)>) -> Self {
        match r {
            Ok((m, v)) => ErrorPair {
                mean: Metric::of(m),
                variance: Metric::of(v),
            },
            Err(e) => ErrorPair {
                mean: Metric::missing(e.to_string()),
                variance: Metric::missing(e.to_string()),
            },
        }
    }
}

/// Relative errors against the full-ensemble HF reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorTable {
    pub lf: ErrorPair,
    pub hf_only: ErrorPair,
    pub bf: ErrorPair,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMeta {
    pub command: String,
    pub seed: u64,
    pub config_hash: String,
    pub version: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub meta: RunMeta,
    pub rank: Option<usize>,
    pub n: Option<usize>,
    pub eigenvalues: Vec<f64>,
    pub errors: Option<ErrorTable>,
    pub bound: Option<BoundReport>,
    pub theorem1: Option<Theorem1Report>,
    /// `||H - H_bar||_2` for the MID estimate used by `theorem1`.
    pub mid_error_2: Option<Metric>,
    pub theorem2: Option<Theorem2Report>,
    pub corollary1: Option<Corollary1Diagnostics>,
    pub warnings: Vec<String>,
    pub timing_ms: BTreeMap<String, f64>,
}

impl Report {
    fn new(command: &str, cfg: &RunConfig) -> Self {
        Report {
            meta: RunMeta {
                command: command.into(),
                seed: cfg.seed,
                config_hash: cfg.hash(),
                version: env!("CARGO_PKG_VERSION").into(),
            },
            rank: None,
            n: None,
            eigenvalues: Vec::new(),
            errors: None,
            bound: None,
            theorem1: None,
            mid_error_2: None,
            theorem2: None,
            corollary1: None,
            warnings: Vec::new(),
            timing_ms: BTreeMap::new(),
        }
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn ensure_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out)
        .map_err(|e| BifiError::Data(format!("cannot create {}: {e}", out.display())))
}

fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

// ---------------------------------------------------------------- pipeline

/// Statistics of a least-squares PC fit to every HF sample, or of the
/// configured solver when the ensemble is too small for least squares.
fn reference_stats(cfg: &RunConfig, hf: &Ensemble, basis: &PcBasis) -> Result<StatSummary> {
    let solver = if hf.n_samples() >= basis.len() {
        PcSolver::LeastSquares
    } else {
        cfg.seeded_solver("solver_holdout", 2)
    };
    statistics(&fit_pc(hf, basis, &solver)?)
}

fn lf_errors(data: &DataSet, lfr: &LfReduction, reference: &StatSummary) -> ErrorPair {
    match &data.lf_to_hf {
        Some(map) => {
            ErrorPair::from_result(statistics(&(map * &lfr.coefficients)).and_then(|s| relative_error(&s, reference)))
        }
        None => ErrorPair {
            mean: Metric::missing("LF and HF points cannot be matched"),
            variance: Metric::missing("LF and HF points cannot be matched"),
        },
    }
}

struct Fitted {
    data: DataSet,
    basis: PcBasis,
    lfr: LfReduction,
    model: BfModel,
    warnings: Vec<String>,
}

fn fit_pipeline(cfg: &RunConfig, timing: &mut BTreeMap<String, f64>) -> Result<Fitted> {
    let t = Instant::now();
    let data = load_data(cfg)?;
    timing.insert("load".into(), elapsed_ms(t));
    let big_n = data.n_samples();
    if cfg.n > big_n {
        return Err(BifiError::Config(format!("n = {} exceeds N = {big_n}", cfg.n)));
    }
    let basis = cfg.pc_basis()?;

    let t = Instant::now();
    let lfr = LfReduction::new(&data.lf, &basis, &cfg.seeded_solver("solver_holdout", 0))?;
    timing.insert("lf_fit".into(), elapsed_ms(t));
    let r = select_rank(&lfr.kl.eigenvalues, cfg.rank)?;
    if let RankPolicy::Explicit(req) = cfg.rank {
        if req != r {
            warn!("rank {req} clamped to {r}");
        }
    }
    let reduced = lfr.reduced_basis(&basis, r)?;

    let mut rng = sub_rng(cfg.seed, "hf_subset", 0);
    let idx = select_hf_subset(cfg.n, big_n, &mut rng)?;
    let t = Instant::now();
    let model = fit_bf(&reduced, &data.hf, &idx)?;
    timing.insert("bf_fit".into(), elapsed_ms(t));
    let mut warnings = Vec::new();
    if (cfg.n as f64) < r as f64 * (r as f64).ln() {
        warnings.push(format!("n = {} is below r*ln(r) for r = {r}", cfg.n));
    }
    Ok(Fitted {
        data,
        basis,
        lfr,
        model,
        warnings,
    })
}

// ---------------------------------------------------------------- commands

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerateManifest {
    pub seed: u64,
    pub config_hash: String,
    pub spec: ModelPairSpec,
    #[serde(rename = "N")]
    pub big_n: usize,
    pub files: Vec<String>,
}

/// Write `L.csv`, `H.csv`, `inputs.csv` and `manifest.json` into `out`.
pub fn cmd_generate(cfg: &RunConfig, out: &Path) -> Result<GenerateManifest> {
    let spec = match &cfg.model {
        ModelSource::Builtin(spec) => spec.clone(),
        ModelSource::Files(_) => {
            return Err(BifiError::Config("generate needs a built-in model".into()));
        }
    };
    let data = load_data(cfg)?;
    ensure_dir(out)?;
    write_matrix(&out.join("L.csv"), &data.lf.qoi)?;
    write_matrix(&out.join("H.csv"), &data.hf.qoi)?;
    write_matrix(&out.join("inputs.csv"), &data.hf.inputs)?;
    let manifest = GenerateManifest {
        seed: cfg.seed,
        config_hash: cfg.hash(),
        spec,
        big_n: data.n_samples(),
        files: vec!["L.csv".into(), "H.csv".into(), "inputs.csv".into()],
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    info!("wrote ensembles of {} samples to {}", manifest.big_n, out.display());
    Ok(manifest)
}

fn write_stats(out: &Path, stats: &StatSummary, fmt: OutputFormat) -> Result<()> {
    match fmt {
        OutputFormat::Csv => {
            let mut s = String::from("point,mean,variance\n");
            for i in 0..stats.mean.len() {
                writeln!(s, "{i},{:.16e},{:.16e}", stats.mean[i], stats.variance[i])
                    .expect("writing to a String");
            }
            fs::write(out.join("stats.csv"), s)?;
        }
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Stats<'a> {
                mean: &'a [f64],
                variance: &'a [f64],
            }
            write_json(
                &out.join("stats.json"),
                &Stats {
                    mean: stats.mean.as_slice(),
                    variance: stats.variance.as_slice(),
                },
            )?;
        }
    }
    Ok(())
}

/// Run the SMR pipeline; writes `model.json`, `report.json` and the BF statistics.
pub fn cmd_fit(cfg: &RunConfig, out: &Path, fmt: OutputFormat) -> Result<Report> {
    let start = Instant::now();
    let mut report = Report::new("fit", cfg);
    let fitted = fit_pipeline(cfg, &mut report.timing_ms)?;
    let Fitted {
        data,
        basis,
        lfr,
        model,
        warnings,
    } = fitted;

    let t = Instant::now();
    let reference = reference_stats(cfg, &data.hf, &basis)?;
    let bf_stats = model.statistics();
    let hf_sub = data.hf.select(&model.hf_indices);
    let hf_only = fit_pc(&hf_sub, &basis, &cfg.seeded_solver("solver_holdout", 1))
        .and_then(|c| statistics(&c))
        .and_then(|s| relative_error(&s, &reference));
    report.errors = Some(ErrorTable {
        lf: lf_errors(&data, &lfr, &reference),
        hf_only: ErrorPair::from_result(hf_only),
        bf: ErrorPair::from_result(relative_error(&bf_stats, &reference)),
    });
    report.timing_ms.insert("reference".into(), elapsed_ms(t));

    report.rank = Some(model.reduced.rank());
    report.n = Some(model.n_used);
    report.eigenvalues = lfr.kl.eigenvalues.clone();
    report.warnings = warnings;
    ensure_dir(out)?;
    write_json(&out.join("model.json"), &model)?;
    write_stats(out, &bf_stats, fmt)?;
    report.timing_ms.insert("total".into(), elapsed_ms(start));
    write_json(&out.join("report.json"), &report)?;
    Ok(report)
}

pub fn load_model(path: &Path) -> Result<BfModel> {
    let text = fs::read_to_string(path)
        .map_err(|e| BifiError::Data(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| BifiError::Data(format!("{}: {e}", path.display())))
}

/// Evaluate a saved model at the inputs in `inputs` (K x d); writes `predictions.{csv,json}` (M x K).
pub fn cmd_predict(model_path: &Path, inputs: &Path, out: &Path, fmt: OutputFormat) -> Result<DMatrix<f64>> {
    let model = load_model(model_path)?;
    let xi = read_matrix(inputs)?;
    let pred = if xi.nrows() == 0 {
        DMatrix::zeros(model.coefficients.nrows(), 0)
    } else {
        bf_predict(&model, &xi)?
    };
    ensure_dir(out)?;
    match fmt {
        OutputFormat::Csv => write_matrix(&out.join("predictions.csv"), &pred)?,
        OutputFormat::Json => {
            let rows: Vec<Vec<f64>> = pred.row_iter().map(|r| r.iter().copied().collect()).collect();
            write_json(&out.join("predictions.json"), &rows)?;
        }
    }
    Ok(pred)
}

/// Mean-square truncation error per point: HF projected onto the reduced basis
/// over the whole ensemble.
fn truncation_ms(reduced: &ReducedBasis, hf: &Ensemble) -> Result<nalgebra::DVector<f64>> {
    let eta = eval_reduced_basis(reduced, &hf.inputs)?;
    let c = bf_regress(&eta, &hf.qoi)?;
    reference_mse(&hf.qoi, &(c * eta))
}

/// Practical bounds on `n_hat` HF samples plus the a-priori diagnostics;
/// writes `bound_report.json` and the pointwise bounds.
pub fn cmd_bound(
    cfg: &RunConfig,
    model_path: Option<&Path>,
    out: &Path,
    fmt: OutputFormat,
) -> Result<Report> {
    let start = Instant::now();
    let mut report = Report::new("bound", cfg);
    let (data, model) = match model_path {
        Some(p) => {
            let model = load_model(p)?;
            let data = load_data(cfg)?;
            if model.hf_indices.iter().any(|&j| j >= data.n_samples()) {
                return Err(BifiError::Data("model HF indices exceed the ensemble size".into()));
            }
            (data, model)
        }
        None => {
            let f = fit_pipeline(cfg, &mut report.timing_ms)?;
            report.warnings = f.warnings;
            (f.data, f.model)
        }
    };
    let big_n = data.n_samples();
    let n = model.n_used;
    let n_hat = cfg.n_hat.unwrap_or(n).max(n);
    if n_hat > big_n {
        return Err(BifiError::Config(format!("n_hat = {n_hat} exceeds N = {big_n}")));
    }
    let mut idx = model.hf_indices.clone();
    if n_hat > n {
        let rest: Vec<usize> = (0..big_n).filter(|j| !idx.contains(j)).collect();
        let mut rng = sub_rng(cfg.seed, "bound_extra", 0);
        let extra = select_hf_subset(n_hat - n, rest.len(), &mut rng)?;
        idx.extend(extra.into_iter().map(|k| rest[k]));
    }

    let t = Instant::now();
    let pred_all = bf_predict(&model, &data.hf.inputs)?;
    let h_sub = select_columns(&data.hf.qoi, &idx);
    let pred_sub = select_columns(&pred_all, &idx);
    let bound = practical_error_bounds(&h_sub, &pred_sub, cfg.t)?
        .with_reference(reference_mse(&data.hf.qoi, &pred_all)?);
    report.timing_ms.insert("practical".into(), elapsed_ms(t));

    let t = Instant::now();
    let r = model.reduced.rank();
    let mu = coherence(&model.reduced, &data.hf.inputs)?.max(1.0);
    let l = &data.lf.qoi;
    let r_mid = r.min(l.nrows()).min(l.ncols());
    if r_mid >= 1 {
        let dec = mid_decompose(l, r_mid)?;
        let eps = EpsilonEstimator::subset(&data.hf.qoi, l, &idx)?;
        let grid = match &cfg.tau_grid {
            Some(g) => g.clone(),
            None => default_tau_grid(&h_sub, &select_columns(l, &idx)),
        };
        let t1 = rho_k_tau(l, &dec, &eps, &grid, None)?;
        let hbar = mid_bifidelity(&data.hf.qoi, &dec)?;
        report.mid_error_2 = Some(Metric::of(spectral_norm(&(&data.hf.qoi - hbar))));
        if let Some(best) = t1.best {
            report.corollary1 = match corollary1_diagnostics(&data.hf.qoi, &pred_all, best.rho, n, mu) {
                Ok(c) => Some(c),
                Err(e) => {
                    report.warnings.push(format!("corollary diagnostics skipped: {e}"));
                    None
                }
            };
        }
        report.theorem1 = Some(t1);
    }
    let ms = truncation_ms(&model.reduced, &data.hf)?;
    report.theorem2 = Some(theorem2_report(mu, n, r, Some(&ms))?);
    report.timing_ms.insert("a_priori".into(), elapsed_ms(t));

    ensure_dir(out)?;
    match fmt {
        OutputFormat::Csv => {
            let mut s = String::from("point,bound,prob,true_error\n");
            let truth = bound.pointwise_true_error.as_deref().unwrap_or(&[]);
            for i in 0..bound.pointwise_bound.len() {
                let te = truth.get(i).map(|v| format!("{v:.16e}")).unwrap_or_default();
                writeln!(
                    s,
                    "{i},{:.16e},{:.16e},{te}",
                    bound.pointwise_bound[i], bound.pointwise_prob[i]
                )
                .expect("writing to a String");
            }
            fs::write(out.join("pointwise.csv"), s)?;
        }
        OutputFormat::Json => write_json(&out.join("pointwise.json"), &bound)?,
    }
    report.rank = Some(r);
    report.n = Some(n);
    report.eigenvalues = model.reduced.eigenvalues.clone();
    report.bound = Some(bound);
    report.timing_ms.insert("total".into(), elapsed_ms(start));
    write_json(&out.join("bound_report.json"), &report)?;
    Ok(report)
}

/// One line of the sweep output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub r: usize,
    pub rep: usize,
    pub e_mean: Option<f64>,
    pub e_var: Option<f64>,
    pub bound: Option<f64>,
    pub prob: Option<f64>,
    pub efficacy: Option<f64>,
    pub status: String,
}

pub const SWEEP_HEADER: &str = "n,r,rep,e_mean,e_var,bound,prob,efficacy,status";

fn sweep_cell(
    cfg: &RunConfig,
    data: &DataSet,
    lfr: &LfReduction,
    basis: &PcBasis,
    reference: &StatSummary,
    (n, r, rep): (usize, usize, usize),
) -> SweepRow {
    let mut row = SweepRow {
        n,
        r,
        rep,
        e_mean: None,
        e_var: None,
        bound: None,
        prob: None,
        efficacy: None,
        status: "ok".into(),
    };
    let result = (|| -> Result<()> {
        let reduced = lfr.reduced_basis(basis, r)?;
        let mut rng = sub_rng(cfg.seed, &format!("hf_subset/n={n}"), rep as u64);
        let idx = select_hf_subset(n, data.n_samples(), &mut rng)?;
        let model = fit_bf(&reduced, &data.hf, &idx)?;
        let (em, ev) = relative_error(&model.statistics(), reference)?;
        row.e_mean = Some(em);
        row.e_var = Some(ev);
        let pred_all = bf_predict(&model, &data.hf.inputs)?;
        let b = practical_error_bounds(
            &select_columns(&data.hf.qoi, &idx),
            &select_columns(&pred_all, &idx),
            cfg.t,
        )?
        .with_reference(reference_mse(&data.hf.qoi, &pred_all)?);
        row.bound = Some(b.sum_bound);
        row.prob = Some(b.sum_prob);
        row.efficacy = b.efficacy;
        Ok(())
    })();
    if let Err(e) = result {
        row.status = format!("error: {e}");
    }
    row
}

fn csv_field(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:.16e}"),
        _ => String::new(),
    }
}

/// Long-form CSV text of sweep rows, header included.
pub fn format_sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(SWEEP_HEADER);
    s.push('\n');
    for row in rows {
        let status: String = row
            .status
            .chars()
            .map(|c| if c == ',' || c == '\n' || c == '\r' { ';' } else { c })
            .collect();
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            row.n,
            row.r,
            row.rep,
            csv_field(row.e_mean),
            csv_field(row.e_var),
            csv_field(row.bound),
            csv_field(row.prob),
            csv_field(row.efficacy),
            status
        )
        .expect("writing to a String");
    }
    s
}

/// One row per `(n, r, repetition)`; cells run on the current rayon pool.
pub fn run_sweep(cfg: &RunConfig) -> Result<Vec<SweepRow>> {
    let grid = cfg
        .sweep
        .clone()
        .unwrap_or_else(|| SweepGrid { n: vec![cfg.n], r: vec![rank_hint(cfg)] });
    let data = load_data(cfg)?;
    let basis = cfg.pc_basis()?;
    let lfr = LfReduction::new(&data.lf, &basis, &cfg.seeded_solver("solver_holdout", 0))?;
    let reference = reference_stats(cfg, &data.hf, &basis)?;
    let cells: Vec<(usize, usize, usize)> = grid
        .n
        .iter()
        .flat_map(|&n| grid.r.iter().flat_map(move |&r| (0..cfg.repetitions).map(move |rep| (n, r, rep))))
        .collect();
    Ok(cells
        .par_iter()
        .map(|&cell| sweep_cell(cfg, &data, &lfr, &basis, &reference, cell))
        .collect())
}

fn rank_hint(cfg: &RunConfig) -> usize {
    match cfg.rank {
        RankPolicy::Explicit(r) => r,
        RankPolicy::Threshold(_) => 4,
    }
}

/// Run the sweep and write `sweep.{csv,json}`.
pub fn cmd_sweep(cfg: &RunConfig, out: &Path, fmt: OutputFormat) -> Result<Vec<SweepRow>> {
    let rows = run_sweep(cfg)?;
    ensure_dir(out)?;
    match fmt {
        OutputFormat::Csv => fs::write(out.join("sweep.csv"), format_sweep_csv(&rows))?,
        OutputFormat::Json => write_json(&out.join("sweep.json"), &rows)?,
    }
    let failed = rows.iter().filter(|r| r.status != "ok").count();
    if failed > 0 {
        warn!("{failed} of {} sweep cells failed", rows.len());
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSpectra {
    pub lf: Vec<f64>,
    pub hf: Option<Vec<f64>>,
}

/// Normalized KL spectra of the LF and full HF PC fits; writes `eigs.{csv,json}`.
pub fn cmd_eigs(cfg: &RunConfig, out: &Path, fmt: OutputFormat) -> Result<EigenSpectra> {
    let data = load_data(cfg)?;
    let basis = cfg.pc_basis()?;
    let lf = LfReduction::new(&data.lf, &basis, &cfg.seeded_solver("solver_holdout", 0))?;
    let hf = if data.hf.n_samples() > 0 {
        Some(LfReduction::new(&data.hf, &basis, &cfg.seeded_solver("solver_holdout", 0))?)
    } else {
        None
    };
    let spectra = EigenSpectra {
        lf: lf.kl.normalized_eigenvalues(),
        hf: hf.map(|h| h.kl.normalized_eigenvalues()),
    };
    ensure_dir(out)?;
    match fmt {
        OutputFormat::Csv => {
            let mut s = String::from("mode,lf,hf\n");
            let hf = spectra.hf.as_deref().unwrap_or(&[]);
            let len = spectra.lf.len().max(hf.len());
            for k in 0..len {
                writeln!(
                    s,
                    "{},{},{}",
                    k + 1,
                    csv_field(spectra.lf.get(k).copied()),
                    csv_field(hf.get(k).copied())
                )
                .expect("writing to a String");
            }
            fs::write(out.join("eigs.csv"), s)?;
        }
        OutputFormat::Json => write_json(&out.join("eigs.json"), &spectra)?,
    }
    Ok(spectra)
}
