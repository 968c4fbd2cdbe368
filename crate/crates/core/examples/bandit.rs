//! Optimistic linear bandit with sub-Gaussian and Bernstein confidence
//! radii on a two-armed problem with rare large noise.
//!
//! The Bernstein provider falls back to the sub-Gaussian radius until its
//! burn-in holds, which needs both arm directions to be well explored.
//!
//! cargo run --release --example bandit

use selfnorm::experiments::{oful_run, regret_comparison, BanditEnv, ProviderMode, RadiusProvider};
use selfnorm::verification::NoiseModel;

fn main() -> selfnorm::Result<()> {
    let env = BanditEnv {
        arms: vec![vec![1.0, 0.0], vec![0.6, 0.8]],
        theta_star: vec![0.5, 0.3],
        noise: NoiseModel::TwoPoint { p: 0.05, b: 1.0 },
        ridge: 1.0,
        theta_bound: (0.5f64 * 0.5 + 0.3 * 0.3).sqrt(),
    };
    let providers = [
        RadiusProvider::SubGaussian { delta: 0.05 },
        RadiusProvider::Bernstein { delta: 0.05, eps: 0.3, nu: 0.5, v_factor: 1.000001 },
    ];
    let horizon = 10_000;

    let trace = oful_run(&env, &providers[1], horizon, 0)?;
    let bernstein_steps = trace
        .steps
        .iter()
        .filter(|s| s.provider_mode == ProviderMode::Bernstein)
        .count();
    println!("single run: {bernstein_steps}/{horizon} steps used the Bernstein radius");

    let means = regret_comparison(&env, &providers, horizon, 100, 1)?;
    for (p, m) in providers.iter().zip(means) {
        println!("{p:?}: mean cumulative regret {m:.2}");
    }
    Ok(())
}
