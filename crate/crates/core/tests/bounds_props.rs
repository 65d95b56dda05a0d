mod common;

use bifi::basis::{Family, PcBasis};
use bifi::bounds::{
    coherence, compute_moments, corollary1_diagnostics, default_tau_grid, epsilon_tau,
    practical_bounds, practical_error_bounds, reference_mse, rho_k_tau, std_normal_cdf,
    EpsilonEstimator,
};
use bifi::linalg::spectral_norm;
use bifi::mid::{mid_bifidelity, mid_decompose};
use bifi::smr::{build_reduced_basis, kl_decompose};
use nalgebra::DMatrix;
use rand::Rng;

/// LF matrix with geometrically decaying spectrum and an HF matrix that is a
/// perturbed linear image of it.
fn random_pair(r: &mut rand_chacha::ChaCha8Rng) -> (DMatrix<f64>, DMatrix<f64>) {
    let m = r.gen_range(4..12);
    let big_m = r.gen_range(4..16);
    let n = r.gen_range(15..40);
    let decay: f64 = r.gen_range(0.2..0.9);
    let mut l = common::gaussian_matrix(m, n, r);
    let svd = l.clone().svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let s = DMatrix::from_fn(u.ncols(), vt.nrows(), |i, j| if i == j { decay.powi(i as i32) } else { 0.0 });
    l = &u * s * &vt;
    let a = common::gaussian_matrix(big_m, m, r);
    let noise: f64 = r.gen_range(0.0..0.1);
    let h = &a * &l + common::gaussian_matrix(big_m, n, r) * noise;
    (l, h)
}

#[test]
fn theorem1_holds_on_random_triples() {
    let mut r = common::rng(2024);
    let mut checked = 0usize;
    for trial in 0..200 {
        let (l, h) = random_pair(&mut r);
        let rank = r.gen_range(1..=l.nrows());
        let dec = mid_decompose(&l, rank).unwrap();
        let err = spectral_norm(&(&h - mid_bifidelity(&h, &dec).unwrap()));
        let eps = EpsilonEstimator::full(&h, &l).unwrap();
        let grid = default_tau_grid(&h, &l);
        let rep = rho_k_tau(&l, &dec, &eps, &grid, None).unwrap();
        assert!(!rep.entries.is_empty());
        for e in &rep.entries {
            assert!(err <= e.rho * (1.0 + 1e-10), "trial {trial}: {err} > rho {e:?}");
            checked += 1;
        }
    }
    assert!(checked >= 200 * 25);
}

#[test]
fn epsilon_subset_at_full_size_matches_exact() {
    let mut r = common::rng(5);
    let (l, h) = random_pair(&mut r);
    let all: Vec<usize> = (0..l.ncols()).collect();
    let sub = EpsilonEstimator::subset(&h, &l, &all).unwrap();
    for tau in [0.1, 1.0, 7.5] {
        let exact = epsilon_tau(&h, &l, tau, 1.0).unwrap();
        assert!((sub.eval(tau) - exact).abs() <= 1e-12 * exact.max(1.0));
    }
    // tau = 0 gives ||H||_2^2
    let e0 = epsilon_tau(&h, &l, 0.0, 1.0).unwrap();
    assert!((e0 - spectral_norm(&h).powi(2)).abs() < 1e-10 * e0);
}

#[test]
fn alpha_w_at_full_sample_is_mean_square_error() {
    let mut r = common::rng(6);
    let h = common::gaussian_matrix(7, 50, &mut r);
    let h_hat = &h + common::gaussian_matrix(7, 50, &mut r) * 0.3;
    let m = compute_moments(&h, &h_hat).unwrap();
    let direct = (&h - &h_hat).norm_squared() / 50.0;
    assert!((m.alpha_w - direct).abs() < 1e-12 * direct);
    let pointwise = reference_mse(&h, &h_hat).unwrap();
    assert!((pointwise.sum() - direct).abs() < 1e-12 * direct);
}

#[test]
fn moments_match_two_pass_oracle() {
    let mut r = common::rng(7);
    let h = common::gaussian_matrix(4, 25, &mut r);
    let h_hat = common::gaussian_matrix(4, 25, &mut r);
    let m = compute_moments(&h, &h_hat).unwrap();
    for i in 0..4 {
        let v: Vec<f64> = (0..25).map(|j| (h[(i, j)] - h_hat[(i, j)]).powi(2)).collect();
        let mean = v.iter().sum::<f64>() / 25.0;
        let b2 = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 25.0;
        let g = v.iter().map(|x| (x - mean).abs().powi(3)).sum::<f64>() / 25.0;
        assert!((m.alpha_v[i] - mean).abs() < 1e-13 * mean);
        assert!((m.beta2_v[i] - b2).abs() < 1e-12 * b2);
        assert!((m.gamma_v[i] - g).abs() < 1e-12 * g);
    }
}

#[test]
fn bounds_monotone_in_t_and_probabilities_capped() {
    let mut r = common::rng(8);
    let h = common::gaussian_matrix(5, 30, &mut r);
    let h_hat = &h + common::gaussian_matrix(5, 30, &mut r) * 0.1;
    let m = compute_moments(&h, &h_hat).unwrap();
    let mut prev = practical_bounds(&m, 0.0).unwrap();
    for k in 1..=40 {
        let t = k as f64 * 0.1;
        let rep = practical_bounds(&m, t).unwrap();
        assert!(rep.sum_bound >= prev.sum_bound);
        assert!(rep.sum_prob <= std_normal_cdf(t) + 1e-15);
        for i in 0..5 {
            assert!(rep.pointwise_bound[i] >= prev.pointwise_bound[i]);
            assert!(rep.pointwise_prob[i] <= std_normal_cdf(t) + 1e-15);
            assert!((0.0..=1.0).contains(&rep.pointwise_prob[i]));
        }
        prev = rep;
    }
}

#[test]
fn degenerate_spread_returns_mean_with_certainty() {
    let h = DMatrix::from_fn(3, 8, |i, j| (i * 8 + j) as f64);
    let h_hat = h.map(|x| x - 0.25);
    let rep = practical_error_bounds(&h, &h_hat, 2.0).unwrap();
    assert!(rep.pointwise_bound.iter().all(|&b| b == 0.0625));
    assert!(rep.pointwise_prob.iter().all(|&p| p == 1.0));
    assert_eq!(rep.sum_bound, 3.0 * 0.0625);
    assert_eq!(rep.sum_prob, 1.0);
}

#[test]
fn bound_covers_independent_noise() {
    // With residuals independent of the fit, coverage tracks the reported probability.
    let mut r = common::rng(9);
    let reps = 400;
    let (mut covered, mut prob) = (0usize, 0.0);
    for _ in 0..reps {
        let h = common::gaussian_matrix(6, 60, &mut r);
        let h_hat = DMatrix::zeros(6, 60);
        let truth = 6.0;
        let rep = practical_error_bounds(&h, &h_hat, 2.0).unwrap();
        covered += (truth <= rep.sum_bound) as usize;
        prob += rep.sum_prob;
    }
    let coverage = covered as f64 / reps as f64;
    assert!(coverage >= prob / reps as f64 - 0.05, "{coverage} vs {}", prob / reps as f64);
}

#[test]
fn corollary_diagnostics_identity() {
    let mut r = common::rng(10);
    let h = common::gaussian_matrix(6, 40, &mut r);
    let h_hat = &h + common::gaussian_matrix(6, 40, &mut r) * 0.2;
    let rho = 1.7;
    let d = corollary1_diagnostics(&h, &h_hat, rho, 10, 3.0).unwrap();
    assert_eq!(d.residual_rank, 6);
    let total_ms = reference_mse(&h, &h_hat).unwrap().sum();
    assert!((d.zeta_bar * 6.0 * rho * rho / 40.0 - total_ms).abs() < 1e-12 * total_ms);
    assert!((d.zeta.iter().sum::<f64>() - 6.0 * d.zeta_bar).abs() < 1e-12 * d.zeta.iter().sum::<f64>());
    assert!(corollary1_diagnostics(&h, &h_hat, 0.0, 10, 3.0).is_err());
    let exact = corollary1_diagnostics(&h, &h, 1.0, 10, 3.0).unwrap();
    assert_eq!((exact.residual_rank, exact.zeta_bar), (0, 0.0));
}

#[test]
fn coherence_at_least_rank() {
    let basis = PcBasis::new(2, 3, Family::Legendre).unwrap();
    let mut r = common::rng(11);
    let c = common::gaussian_matrix(6, basis.len(), &mut r);
    let kl = kl_decompose(&c).unwrap();
    let rb = build_reduced_basis(&c, &kl, 4, &basis).unwrap();
    let mu = coherence(&rb, &common::uniform_samples(5000, 2, 12)).unwrap();
    // The average of sum_j eta_j^2 is r, so the maximum is at least about r.
    assert!(mu >= 4.0 * 0.9, "{mu}");
}
