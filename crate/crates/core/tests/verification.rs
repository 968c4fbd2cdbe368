mod common;

use std::f64::consts::E;

use common::*;
use nalgebra::DVector;
use selfnorm::bounds::{burnin_check, kl_gaussian};
use selfnorm::linalg::{ellipsoid_contains, max_outer_form, Ellipsoid};
use selfnorm::stream::run_until;
use selfnorm::verification::{
    check_supermartingale_batch, lambda_directions, trial_rng, BoundSpec, CovariateModel, NoiseModel, Simulator,
    StopSpec, TrialSpec,
};
use selfnorm::{BernsteinParams, MartingaleState, StoppingRule, SubGaussianParams, SymMatrix};

#[test]
fn supermartingale_two_point_scalar() {
    let spec = TrialSpec {
        d: 1,
        stop: StopSpec::Horizon { t: 100 },
        noise: NoiseModel::TwoPoint { p: 0.05, b: 1.0 },
        covariates: CovariateModel::RandomSphere { radius: 1.0 },
        bound: BoundSpec::SubGaussian(SubGaussianParams::new(1.0, 0.1, SymMatrix::identity(1)).unwrap()),
        seed: 0,
        radius_scale: 1.0,
    };
    for eps in [0.1, 0.5, 0.9] {
        // both signs on the boundary plus an interior point
        let mut lambdas = lambda_directions(&spec, eps, 4, 3);
        lambdas.push(vec![0.5 * eps]);
        for est in check_supermartingale_batch(&lambdas, &spec, eps, 100_000, 12).unwrap() {
            assert!(est.within(3.0), "eps {eps}: {est:?}");
        }
    }
}

#[test]
fn stopping_index_matches_stepwise_replay() {
    let cov = CovariateModel::RandomSphere { radius: 1.0 };
    let noise = NoiseModel::RademacherScaled { b: 1.0 };
    for seed in 0..20u64 {
        let threshold = 2.0 + (seed % 5) as f64;
        let mut sim = Simulator::new(2, &cov, &noise, trial_rng(seed, 0));
        let obs: Vec<(Vec<f64>, f64)> = (0..400).map(|_| sim.step()).collect();

        let rule = StoppingRule::self_norm_at_least(threshold, 400);
        let stopped = run_until(obs.iter().cloned().map(Ok), &rule, SymMatrix::identity(2)).unwrap();

        let mut gram = nalgebra::DMatrix::<f64>::identity(2, 2);
        let mut s = DVector::<f64>::zeros(2);
        let mut expect = 400;
        for (k, step) in std::iter::once(None).chain(obs.iter().map(Some)).enumerate() {
            if let Some((x, w)) = step {
                let x = DVector::from_column_slice(x);
                s += &x * *w;
                gram += &x * x.transpose();
            }
            let lhs = (s.transpose() * gram.clone().try_inverse().unwrap() * &s)[(0, 0)];
            if lhs >= threshold {
                expect = k as u64;
                break;
            }
        }
        assert_eq!(stopped.t(), expect, "seed {seed}");
    }
}

#[test]
fn data_burnin_matches_eigenvalue_oracle() {
    let d = 3;
    let nu = 0.2;
    let noise = NoiseModel::Uniform { b: 1.0 };
    let cov = CovariateModel::RandomSphere { radius: 1.0 };
    let bx = cov.b_x_sq(d);
    let mut p = BernsteinParams::new(noise.sigma_var_sq(), 1.0, bx.clone(), SymMatrix::zeros(d), bx.clone(), 0.4, nu, 0.1)
        .unwrap();
    p.v = bx.scale(p.minimal_v_scale() * 1.5);
    let lam_max_v = p.v.max_eigenvalue();
    let mut sim = Simulator::new(d, &cov, &noise, trial_rng(4, 0));
    let mut state = MartingaleState::new(d, SymMatrix::zeros(d)).unwrap();
    let mut flipped = None;
    for t in 1..=2_000u64 {
        let (x, w) = sim.step();
        state.observe(&x, w).unwrap();
        let lam_min = dense(&state.v_t()).symmetric_eigen().eigenvalues.min();
        let status = burnin_check(&state, &p).unwrap();
        assert!(status.static_ok);
        // V is a multiple of I, so the PSD check reduces to eigenvalues
        let oracle = lam_min >= E * (1.0 + nu).powi(2) * lam_max_v;
        if (lam_min - E * (1.0 + nu).powi(2) * lam_max_v).abs() > 1e-6 {
            assert_eq!(status.data_ok, oracle, "t = {t}");
        }
        if status.data_ok && flipped.is_none() {
            flipped = Some(t);
        }
    }
    assert!(flipped.is_some());
}

#[test]
fn scalar_gaussian_kl_matches_quadrature() {
    for (m, a, b) in [(0.0, 1.0, 1.0), (0.7, 0.3, 2.0), (-2.0, 4.0, 0.5), (0.1, 1e-2, 1.0)] {
        let kl = kl_gaussian(&[m], &SymMatrix::diag(&[a]), &SymMatrix::diag(&[b])).unwrap();
        let sa: f64 = a.sqrt();
        let (lo, hi) = (m - 14.0 * sa, m + 14.0 * sa);
        let n = 400_000;
        let h = (hi - lo) / n as f64;
        let logp = |x: f64| -0.5 * (x - m).powi(2) / a - 0.5 * (2.0 * std::f64::consts::PI * a).ln();
        let logq = |x: f64| -0.5 * x * x / b - 0.5 * (2.0 * std::f64::consts::PI * b).ln();
        let f = |x: f64| logp(x).exp() * (logp(x) - logq(x));
        // Simpson's rule
        let mut acc = f(lo) + f(hi);
        for i in 1..n {
            acc += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let quad = acc * h / 3.0;
        assert!((kl - quad).abs() < 1e-6, "({m}, {a}, {b}): {kl} vs {quad}");
    }
}

#[test]
fn four_dimensional_containment_vs_dense_boundary_sampling() {
    let mut r = rng(44);
    let d = 4;
    let mut compared = 0;
    for _ in 0..12 {
        let s_out = random_psd(&mut r, d, d, 0.3);
        let s_in = random_psd(&mut r, d, d, 0.05).scale(0.15);
        let c_out = gaussian_vec(&mut r, d);
        let c_in: Vec<f64> = c_out.iter().zip(gaussian_vec(&mut r, d)).map(|(a, b)| a + 0.3 * b).collect();
        let outer = Ellipsoid::new(c_out.clone(), s_out.clone()).unwrap();
        let inner = Ellipsoid::new(c_in.clone(), s_in.clone()).unwrap();
        let exact = max_outer_form(&outer, &inner).unwrap();
        // 10⁶ boundary samples, no ascent
        let mut best = f64::NEG_INFINITY;
        let l = dense(&s_in).cholesky().unwrap().l();
        for _ in 0..1_000_000 {
            let g = DVector::from_vec(gaussian_vec(&mut r, d));
            let x = DVector::from_column_slice(&c_in) + &l * (&g / g.norm());
            best = best.max(outer.form(x.as_slice()));
        }
        assert!(best <= exact * (1.0 + 1e-9));
        if (exact - 1.0).abs() > 0.02 * exact {
            compared += 1;
            assert_eq!(best <= 1.0, ellipsoid_contains(&outer, &inner, 1e-9).unwrap(), "exact {exact} sampled {best}");
        }
    }
    assert!(compared >= 6);
}
