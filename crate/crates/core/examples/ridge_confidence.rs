//! Online ridge regression with a confidence ellipsoid for the parameter,
//! then the empirical miss rate of that ellipsoid.
//!
//! cargo run --release --example ridge_confidence

use selfnorm::bounds::subgaussian_radius_sq;
use selfnorm::experiments::{confidence_ellipsoid, ridge_coverage, LinearModel, RidgeAccumulator, RidgeBound, RidgeCoverageSpec};
use selfnorm::verification::{trial_rng, CovariateModel, NoiseModel, Simulator};
use selfnorm::{SubGaussianParams, SymMatrix};

fn main() -> selfnorm::Result<()> {
    let d = 2;
    let model = LinearModel {
        theta_star: vec![0.7, -0.4],
        noise: NoiseModel::Uniform { b: 0.5 },
    };
    let covariates = CovariateModel::RandomSphere { radius: 1.0 };
    let gamma = SymMatrix::scaled_identity(d, 0.1);

    let mut acc = RidgeAccumulator::new(d, gamma.clone())?;
    let mut sim = Simulator::new(d, &covariates, &model.noise, trial_rng(2, 0));
    for _ in 0..500 {
        let (x, w) = sim.step();
        let y = model.response(&x, w);
        acc.observe(&x, w, y)?;
    }
    let theta_hat = acc.ridge_estimate()?;
    let params = SubGaussianParams::new(model.noise.sigma_subg_sq(), 0.05, gamma.clone())?;
    let report = subgaussian_radius_sq(acc.state(), &params)?;
    let set = confidence_ellipsoid(acc.state(), &report, &theta_hat)?;
    println!("theta_hat = {theta_hat:?}");
    println!("radius² = {:?}", report.radius_sq);
    println!("theta_star inside: {}", set.contains_point(&model.theta_star, 0.0));

    let spec = RidgeCoverageSpec {
        model,
        covariates,
        gamma,
        bound: RidgeBound::SubGaussian,
        delta: 0.05,
        t: 500,
        n_trials: 2_000,
        seed: 9,
    };
    let cov = ridge_coverage(&spec)?;
    println!(
        "misses {}/{}  CP95 upper {:.4} (δ = 0.05)",
        cov.n_violations, cov.n_trials, cov.clopper_pearson_95.1
    );
    Ok(())
}
