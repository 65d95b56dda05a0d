mod common;

use bifi::basis::{Family, PcBasis};
use bifi::models::{
    analytic_pair_eval, diffusion1d_solve, generate_ensemble, AnalyticParams, DiffusionParams,
    ModelPairSpec,
};
use bifi::smr::{fit_pc, kl_decompose, Fidelity, PcSolver};
use nalgebra::DVector;

#[test]
fn mean_input_solution_at_midpoint() {
    let u = diffusion1d_solve(65, &[0.0, 0.0], &DiffusionParams::default()).unwrap();
    assert_eq!(u.len(), 63);
    assert!((u[31] - 0.125).abs() < 1e-3);
}

#[test]
fn coarse_and_fine_solutions_stay_close() {
    let mut spec = ModelPairSpec::diffusion_default();
    spec.lf_points = 5;
    let interp = spec.lf_to_hf();
    let inputs = common::uniform_samples(50, 2, 3);
    for j in 0..inputs.nrows() {
        let xi = [inputs[(j, 0)], inputs[(j, 1)]];
        let lf = DVector::from_vec(spec.eval(Fidelity::Low, &xi).unwrap());
        let hf = DVector::from_vec(spec.eval(Fidelity::High, &xi).unwrap());
        let rel = (&interp * lf - &hf).norm() / hf.norm();
        assert!(rel < 0.2, "sample {j}: {rel}");
    }
}

#[test]
fn second_order_grid_convergence() {
    let p = DiffusionParams::default();
    let xi = [0.6, -0.8];
    let oracle = diffusion1d_solve(1025, &xi, &p).unwrap();
    // Error at the shared nodes x = k/8.
    let err = |nodes: usize| -> f64 {
        let u = diffusion1d_solve(nodes, &xi, &p).unwrap();
        let stride_c = (nodes - 1) / 8;
        let stride_o = 1024 / 8;
        (1..8)
            .map(|k| (u[k * stride_c - 1] - oracle[k * stride_o - 1]).abs())
            .fold(0.0, f64::max)
    };
    let errors: Vec<f64> = [17, 33, 65, 129].iter().map(|&n| err(n)).collect();
    for w in errors.windows(2) {
        let ratio = w[0] / w[1];
        assert!((ratio - 4.0).abs() < 0.8, "{errors:?}");
    }
}

#[test]
fn maximum_principle() {
    let (lf, hf) = generate_ensemble(&ModelPairSpec::diffusion_default(), 300, 9).unwrap();
    assert!(lf.qoi.iter().all(|&v| v >= 0.0));
    assert!(hf.qoi.iter().all(|&v| v >= 0.0));
}

#[test]
fn ensembles_share_inputs_and_are_reproducible() {
    let spec = ModelPairSpec::diffusion_default();
    let (lf, hf) = generate_ensemble(&spec, 200, 7).unwrap();
    assert_eq!(lf.qoi.shape(), (7, 200));
    assert_eq!(hf.qoi.shape(), (63, 200));
    assert_eq!(lf.inputs, hf.inputs);
    assert!(lf.inputs.iter().all(|v| (-1.0..=1.0).contains(v)));
    let (lf2, hf2) = generate_ensemble(&spec, 200, 7).unwrap();
    assert_eq!(lf, lf2);
    assert_eq!(hf, hf2);

    let (alf, ahf) = generate_ensemble(&ModelPairSpec::analytic_default(), 10, 7).unwrap();
    assert_eq!(alf.qoi.nrows(), 33);
    assert_eq!(ahf.qoi.nrows(), 129);
}

#[test]
fn analytic_discrepancy_vanishes_near_origin() {
    let p = AnalyticParams::default();
    let inputs = common::uniform_samples(40, 2, 2);
    for j in 0..40 {
        let xi = [inputs[(j, 0)], inputs[(j, 1)]];
        let lf = analytic_pair_eval(Fidelity::Low, &xi, 129, &p).unwrap();
        let hf = analytic_pair_eval(Fidelity::High, &xi, 129, &p).unwrap();
        let gap: Vec<f64> = lf.iter().zip(&hf).map(|(a, b)| (a - b).abs()).collect();
        assert_eq!(gap[0], 0.0);
        // Taylor remainder of exp(-kx) is at most (kx)^2 / 2 with k <= 1.2.
        for (i, g) in gap.iter().enumerate() {
            let x = i as f64 / 128.0;
            assert!(*g <= 0.72 * x * x + 1e-15);
        }
    }
}

#[test]
fn kl_spectra_decay_four_decades() {
    let basis = PcBasis::new(2, 4, Family::Legendre).unwrap();
    for spec in [ModelPairSpec::diffusion_default(), ModelPairSpec::analytic_default()] {
        let (lf, hf) = generate_ensemble(&spec, 200, 13).unwrap();
        for ens in [lf, hf] {
            let c = fit_pc(&ens, &basis, &PcSolver::LeastSquares).unwrap();
            let kl = kl_decompose(&c).unwrap();
            let ev = &kl.eigenvalues;
            let k = ev.len().min(10);
            // Spectra shorter than 10 modes are padded with exact zeros.
            let tail = if ev.len() >= 10 { ev[9] } else { 0.0 };
            assert!(tail <= 1e-4 * ev[0], "{:?} {:?}: {:?}", spec.kind, ens.fidelity, &ev[..k]);
        }
    }
}
