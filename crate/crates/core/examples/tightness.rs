//! Bernstein vs sub-Gaussian radius² on the same paths, for a skewed
//! low-variance noise and for Rademacher noise (where the variance equals
//! the proxy and Bernstein cannot win).
//!
//! cargo run --release --example tightness

use selfnorm::verification::{tightness_comparison, CovariateModel, NoiseModel, TightnessCell};

fn main() -> selfnorm::Result<()> {
    let noises = [
        NoiseModel::TwoPoint { p: 0.05, b: 1.0 },
        NoiseModel::RademacherScaled { b: 1.0 },
    ];
    let mut cells = Vec::new();
    for noise in &noises {
        for t in [100, 1_000, 10_000] {
            cells.push(TightnessCell {
                d: 1,
                t,
                noise: noise.clone(),
                covariates: CovariateModel::RandomSphere { radius: 1.0 },
                eps: 0.1,
                nu: 0.1,
                delta: 0.05,
                v_factor: 1.000001,
                n_trials: 200,
                seed: 3,
            });
        }
    }
    println!(
        "{:<24} {:>6} {:>10} {:>10} {:>10} {:>10}",
        "noise", "T", "burn-in", "ratio", "predicted", "alpha"
    );
    for row in tightness_comparison(&cells)? {
        let ratio = row.mean_ratio.map_or("-".to_string(), |r| format!("{r:.4}"));
        println!(
            "{:<24} {:>6} {:>10.3} {:>10} {:>10.4} {:>10.4}",
            row.noise, row.t, row.burnin_failure_rate, ratio, row.predicted_ratio, row.mean_alpha
        );
    }
    Ok(())
}
