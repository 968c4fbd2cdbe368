use selfnorm::experiments::{
    oful_run, regret_comparison, ridge_coverage, BanditEnv, LinearModel, RadiusProvider, RidgeAccumulator,
    RidgeBound, RidgeCoverageSpec,
};
use selfnorm::verification::{trial_rng, CovariateModel, NoiseModel, Simulator};
use selfnorm::SymMatrix;

fn two_arm_env() -> BanditEnv {
    BanditEnv {
        arms: vec![vec![1.0, 0.0], vec![0.6, 0.8]],
        theta_star: vec![0.5, 0.3],
        noise: NoiseModel::TwoPoint { p: 0.05, b: 1.0 },
        ridge: 1.0,
        theta_bound: (0.34f64).sqrt(),
    }
}

#[test]
fn bernstein_radius_does_not_lose_on_low_variance_noise() {
    let providers = [
        RadiusProvider::SubGaussian { delta: 0.05 },
        RadiusProvider::Bernstein { delta: 0.05, eps: 0.3, nu: 0.5, v_factor: 1.000001 },
    ];
    let means = regret_comparison(&two_arm_env(), &providers, 10_000, 100, 21).unwrap();
    assert!(means[1] <= means[0], "bernstein {} vs sub-gaussian {}", means[1], means[0]);
}

#[test]
fn cumulative_regret_is_nondecreasing_and_trace_is_reproducible() {
    let env = two_arm_env();
    let p = RadiusProvider::Bernstein { delta: 0.1, eps: 0.3, nu: 0.5, v_factor: 1.000001 };
    let a = oful_run(&env, &p, 3_000, 5).unwrap();
    let b = oful_run(&env, &p, 3_000, 5).unwrap();
    assert_eq!(a, b);
    assert!(a.delta_inflated);
    for w in a.steps.windows(2) {
        assert!(w[1].cum_regret >= w[0].cum_regret);
        assert!(w[1].regret >= 0.0);
    }
}

#[test]
fn ridge_error_identity_on_simulated_paths() {
    for (seed, gamma) in [(1u64, SymMatrix::identity(3)), (2, SymMatrix::diag(&[0.1, 5.0, 1.0]))] {
        let model = LinearModel {
            theta_star: vec![0.3, -1.0, 2.0],
            noise: NoiseModel::TruncatedGaussian { s: 0.4, b: 1.0 },
        };
        let cov = CovariateModel::RandomSphere { radius: 2.0 };
        let mut acc = RidgeAccumulator::new(3, gamma).unwrap();
        let mut sim = Simulator::new(3, &cov, &model.noise, trial_rng(seed, 0));
        for _ in 0..2_000 {
            let (x, w) = sim.step();
            assert!((model.response(&x, w) - (x[0] * 0.3 - x[1] + 2.0 * x[2])).abs() <= model.noise.b_w());
            acc.observe(&x, w, model.response(&x, w)).unwrap();
            assert!(acc.error_identity_residual(&model.theta_star).unwrap() < 1e-10);
        }
    }
}

#[test]
fn unregularized_bernstein_ridge_coverage() {
    let spec = RidgeCoverageSpec {
        model: LinearModel {
            theta_star: vec![0.4, -0.2],
            noise: NoiseModel::Uniform { b: 1.0 },
        },
        covariates: CovariateModel::RandomSphere { radius: 1.0 },
        gamma: SymMatrix::zeros(2),
        bound: RidgeBound::Bernstein {
            eps: 0.3,
            nu: 0.2,
            v_factor: 1.0,
        },
        delta: 0.1,
        t: 400,
        n_trials: 10_000,
        seed: 17,
    };
    let r = ridge_coverage(&spec).unwrap();
    assert!(r.n_trials - r.n_burnin_failures >= 9_000, "{r:?}");
    assert!(r.clopper_pearson_95.1 <= 0.1, "{r:?}");
}
