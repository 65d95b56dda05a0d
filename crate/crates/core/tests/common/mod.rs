//! Test-only oracles: Gauss quadrature rules and random data helpers.
#![allow(dead_code)]

use bifi::basis::Family;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Gauss rule for the probability measure of `family` (weights sum to 1),
/// from the eigen-decomposition of the Jacobi matrix.
pub fn gauss_rule(family: Family, nodes: usize) -> (Vec<f64>, Vec<f64>) {
    let mut jac = DMatrix::<f64>::zeros(nodes, nodes);
    for k in 1..nodes {
        let kf = k as f64;
        let off = match family {
            Family::Legendre => kf / (4.0 * kf * kf - 1.0).sqrt(),
            Family::Hermite => kf.sqrt(),
        };
        jac[(k, k - 1)] = off;
        jac[(k - 1, k)] = off;
    }
    let eig = jac.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..nodes)
        .map(|k| (eig.eigenvalues[k], eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Tensor-product rule in `d` dimensions: (points N x d, weights).
pub fn tensor_rule(family: Family, nodes: usize, d: usize) -> (DMatrix<f64>, Vec<f64>) {
    let (x, w) = gauss_rule(family, nodes);
    let total = nodes.pow(d as u32);
    let mut pts = DMatrix::zeros(total, d);
    let mut wts = vec![1.0; total];
    for idx in 0..total {
        let mut rem = idx;
        for k in 0..d {
            let q = rem % nodes;
            rem /= nodes;
            pts[(idx, k)] = match family {
                Family::Legendre => x[q].clamp(-1.0, 1.0),
                Family::Hermite => x[q],
            };
            wts[idx] *= w[q];
        }
    }
    (pts, wts)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_samples(n: usize, d: usize, seed: u64) -> DMatrix<f64> {
    let mut r = rng(seed);
    DMatrix::from_fn(n, d, |_, _| r.gen_range(-1.0..=1.0))
}

pub fn gaussian_matrix(rows: usize, cols: usize, r: &mut ChaCha8Rng) -> DMatrix<f64> {
    use rand_distr_like::normal;
    DMatrix::from_fn(rows, cols, |_, _| normal(r))
}

pub mod rand_distr_like {
    use rand::Rng;
    /// Box–Muller standard normal draw.
    pub fn normal<R: Rng>(r: &mut R) -> f64 {
        let u1: f64 = r.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = r.gen::<f64>();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

pub fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}
