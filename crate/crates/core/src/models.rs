//! Built-in low/high-fidelity model pairs.
//!
//! `diffusion1d` solves `-(a(x, xi) u')' = 1` on `(0, 1)` with homogeneous
//! Dirichlet data by second-order finite differences, with
//! `a(x, xi) = a0 + a1 xi_1 + a2 xi_2 sin(2 pi x)`. The two fidelities differ
//! only in grid size; the QoI is the solution at interior nodes.
//!
//! `analytic` pairs `u = exp(-k x) cos((w + xi_2) pi x)` with
//! `k = 1 + 0.2 xi_1` against the LF variant that replaces the exponential by
//! `1 - k x`. Both are sampled at every grid point of `[0, 1]`.

use log::warn;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{BifiError, Result};
use crate::smr::{Ensemble, Fidelity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Diffusion1d,
    Analytic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiffusionParams {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    /// Constant source term.
    pub source: f64,
}

impl Default for DiffusionParams {
    fn default() -> Self {
        DiffusionParams {
            a0: 1.0,
            a1: 0.5,
            a2: 0.25,
            source: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyticParams {
    pub rate: f64,
    pub rate_amplitude: f64,
    pub frequency: f64,
}

impl Default for AnalyticParams {
    fn default() -> Self {
        AnalyticParams {
            rate: 1.0,
            rate_amplitude: 0.2,
            frequency: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelPairSpec {
    pub kind: ModelKind,
    /// LF grid nodes, boundaries included.
    pub lf_points: usize,
    /// HF grid nodes, boundaries included.
    pub hf_points: usize,
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    /// Physical ranges of the inputs, kept for reporting.
    #[serde(default)]
    pub input_ranges: Vec<[f64; 2]>,
    #[serde(default)]
    pub diffusion: DiffusionParams,
    #[serde(default)]
    pub analytic: AnalyticParams,
}

fn default_dimension() -> usize {
    2
}

impl ModelPairSpec {
    /// Diffusion pair on 9 and 65 nodes.
    pub fn diffusion_default() -> Self {
        ModelPairSpec {
            kind: ModelKind::Diffusion1d,
            lf_points: 9,
            hf_points: 65,
            dimension: 2,
            input_ranges: Vec::new(),
            diffusion: DiffusionParams::default(),
            analytic: AnalyticParams::default(),
        }
    }

    /// Analytic pair on 33 and 129 points.
    pub fn analytic_default() -> Self {
        ModelPairSpec {
            kind: ModelKind::Analytic,
            lf_points: 33,
            hf_points: 129,
            ..Self::diffusion_default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension != 2 {
            return Err(BifiError::Config(format!(
                "built-in models take 2 inputs, got dimension {}",
                self.dimension
            )));
        }
        let min_points = match self.kind {
            ModelKind::Diffusion1d => 3,
            ModelKind::Analytic => 2,
        };
        if self.lf_points < min_points || self.hf_points < min_points {
            return Err(BifiError::Config(format!(
                "grids need at least {min_points} nodes, got {} and {}",
                self.lf_points, self.hf_points
            )));
        }
        if !self.input_ranges.is_empty() && self.input_ranges.len() != self.dimension {
            return Err(BifiError::Config("one input range per dimension".into()));
        }
        if self.input_ranges.iter().any(|[a, b]| !(a < b)) {
            return Err(BifiError::Config("input ranges must satisfy a < b".into()));
        }
        if self.kind == ModelKind::Diffusion1d {
            let p = &self.diffusion;
            let floor = p.a0 - p.a1.abs() - p.a2.abs();
            if !(floor > 0.0) {
                return Err(BifiError::Config(format!(
                    "diffusion coefficient lower bound {floor} is not positive"
                )));
            }
        }
        if self.lf_points >= self.hf_points {
            warn!(
                "LF grid ({}) is not coarser than HF grid ({})",
                self.lf_points, self.hf_points
            );
        }
        Ok(())
    }

    /// QoI coordinates of one fidelity.
    pub fn qoi_coords(&self, fidelity: Fidelity) -> Vec<f64> {
        let nodes = self.grid_nodes(fidelity);
        let grid = uniform_grid(nodes);
        match self.kind {
            ModelKind::Diffusion1d => grid[1..nodes - 1].to_vec(),
            ModelKind::Analytic => grid,
        }
    }

    fn grid_nodes(&self, fidelity: Fidelity) -> usize {
        match fidelity {
            Fidelity::Low => self.lf_points,
            Fidelity::High => self.hf_points,
        }
    }

    /// QoI of one fidelity at one canonical input.
    pub fn eval(&self, fidelity: Fidelity, xi: &[f64]) -> Result<Vec<f64>> {
        let nodes = self.grid_nodes(fidelity);
        match self.kind {
            ModelKind::Diffusion1d => diffusion1d_solve(nodes, xi, &self.diffusion),
            ModelKind::Analytic => analytic_pair_eval(fidelity, xi, nodes, &self.analytic),
        }
    }

    /// Linear map (HF points x LF points) taking LF QoI vectors to the HF points.
    /// Diffusion LF vectors are padded with their zero boundary values first.
    pub fn lf_to_hf(&self) -> DMatrix<f64> {
        let hf = self.qoi_coords(Fidelity::High);
        match self.kind {
            ModelKind::Diffusion1d => {
                let full = uniform_grid(self.lf_points);
                let m = interpolation_matrix(&full, &hf);
                m.columns(1, self.lf_points - 2).into_owned()
            }
            ModelKind::Analytic => interpolation_matrix(&self.qoi_coords(Fidelity::Low), &hf),
        }
    }
}

fn uniform_grid(nodes: usize) -> Vec<f64> {
    let h = 1.0 / (nodes - 1) as f64;
    (0..nodes).map(|i| i as f64 * h).collect()
}

/// Interior-node solution of the diffusion problem on `nodes` equispaced nodes.
pub fn diffusion1d_solve(nodes: usize, xi: &[f64], params: &DiffusionParams) -> Result<Vec<f64>> {
    if nodes < 3 {
        return Err(BifiError::InvalidArgument(format!("grid needs at least 3 nodes, got {nodes}")));
    }
    if xi.len() != 2 {
        return Err(BifiError::DimensionMismatch(format!("expected 2 inputs, got {}", xi.len())));
    }
    let h = 1.0 / (nodes - 1) as f64;
    let coef = |x: f64| {
        params.a0 + params.a1 * xi[0] + params.a2 * xi[1] * (2.0 * std::f64::consts::PI * x).sin()
    };
    // Face coefficients a_{i+1/2}, i = 0..nodes-2.
    let faces: Vec<f64> = (0..nodes - 1).map(|i| coef((i as f64 + 0.5) * h)).collect();
    if faces.iter().any(|&a| !(a > 0.0)) {
        return Err(BifiError::Domain { value: xi[0] });
    }
    let n = nodes - 2;
    let mut diag: Vec<f64> = (0..n).map(|i| faces[i] + faces[i + 1]).collect();
    let mut rhs = vec![params.source * h * h; n];
    // Thomas algorithm; off-diagonals are -faces[i+1].
    for i in 1..n {
        let w = -faces[i] / diag[i - 1];
        diag[i] += w * faces[i];
        rhs[i] -= w * rhs[i - 1];
    }
    let mut u = vec![0.0; n];
    u[n - 1] = rhs[n - 1] / diag[n - 1];
    for i in (0..n - 1).rev() {
        u[i] = (rhs[i] + faces[i + 1] * u[i + 1]) / diag[i];
    }
    Ok(u)
}

/// Analytic pair at every point of an equispaced grid on `[0, 1]`.
pub fn analytic_pair_eval(
    fidelity: Fidelity,
    xi: &[f64],
    nodes: usize,
    params: &AnalyticParams,
) -> Result<Vec<f64>> {
    if xi.len() != 2 {
        return Err(BifiError::DimensionMismatch(format!("expected 2 inputs, got {}", xi.len())));
    }
    if nodes < 2 {
        return Err(BifiError::InvalidArgument("grid needs at least 2 nodes".into()));
    }
    let k = params.rate + params.rate_amplitude * xi[0];
    let w = (params.frequency + xi[1]) * std::f64::consts::PI;
    Ok(uniform_grid(nodes)
        .into_iter()
        .map(|x| {
            let envelope = match fidelity {
                Fidelity::High => (-k * x).exp(),
                Fidelity::Low => 1.0 - k * x,
            };
            envelope * (w * x).cos()
        })
        .collect())
}

/// Piecewise-linear interpolation weights (to.len() x from.len()); targets
/// outside the source range take the nearest end value. `from` must be increasing.
pub fn interpolation_matrix(from: &[f64], to: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(to.len(), from.len());
    if from.is_empty() {
        return m;
    }
    for (i, &x) in to.iter().enumerate() {
        if from.len() == 1 || x <= from[0] {
            m[(i, 0)] = 1.0;
            continue;
        }
        let last = from.len() - 1;
        if x >= from[last] {
            m[(i, last)] = 1.0;
            continue;
        }
        let j = from.partition_point(|&f| f <= x) - 1;
        let t = (x - from[j]) / (from[j + 1] - from[j]);
        m[(i, j)] = 1.0 - t;
        m[(i, j + 1)] = t;
    }
    m
}

/// `n` canonical input realizations drawn uniformly from `[-1, 1]^d`.
pub fn sample_inputs(n: usize, d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(n, d);
    for i in 0..n {
        for k in 0..d {
            out[(i, k)] = rng.gen_range(-1.0..=1.0);
        }
    }
    out
}

fn evaluate(spec: &ModelPairSpec, fidelity: Fidelity, inputs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let points = spec.qoi_coords(fidelity).len();
    let columns: Vec<Vec<f64>> = (0..inputs.nrows())
        .into_par_iter()
        .map(|j| {
            let xi: Vec<f64> = inputs.row(j).iter().copied().collect();
            spec.eval(fidelity, &xi)
        })
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(points, inputs.nrows(), |i, j| columns[j][i]))
}

/// Ensembles of both fidelities on shared inputs drawn from `seed`.
pub fn generate_ensemble(spec: &ModelPairSpec, n: usize, seed: u64) -> Result<(Ensemble, Ensemble)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    generate_ensemble_with(spec, n, &mut rng)
}

/// As [`generate_ensemble`], drawing inputs from an existing stream.
pub fn generate_ensemble_with(
    spec: &ModelPairSpec,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Ensemble, Ensemble)> {
    spec.validate()?;
    let inputs = sample_inputs(n, spec.dimension, rng);
    ensembles_at(spec, inputs)
}

/// Ensembles of both fidelities at given canonical inputs (N x d).
pub fn ensembles_at(spec: &ModelPairSpec, inputs: DMatrix<f64>) -> Result<(Ensemble, Ensemble)> {
    let lf_q = evaluate(spec, Fidelity::Low, &inputs)?;
    let hf_q = evaluate(spec, Fidelity::High, &inputs)?;
    let lf = Ensemble::new(
        inputs.clone(),
        lf_q,
        Fidelity::Low,
        Some(spec.qoi_coords(Fidelity::Low)),
    )?;
    let hf = Ensemble::new(inputs, hf_q, Fidelity::High, Some(spec.qoi_coords(Fidelity::High)))?;
    Ok((lf, hf))
}
