//! Monte Carlo coverage of both bounds, at a fixed horizon and under an
//! adaptive stopping time, certified with a Clopper-Pearson upper limit.
//!
//! cargo run --release --example coverage

use selfnorm::verification::{coverage_experiment, BoundSpec, CovariateModel, NoiseModel, StopSpec, TrialSpec};
use selfnorm::{BernsteinParams, SubGaussianParams, SymMatrix};

fn main() -> selfnorm::Result<()> {
    let d = 2;
    let noise = NoiseModel::TwoPoint { p: 0.2, b: 1.0 };
    let covariates = CovariateModel::Ar1 {
        a: vec![vec![0.8, 0.1], vec![0.0, 0.7]],
        noise_scale: 0.5,
        radius: 1.0,
    };
    let b_x_sq = covariates.b_x_sq(d);

    let subg = BoundSpec::SubGaussian(SubGaussianParams::new(1.0, 0.05, SymMatrix::identity(d))?);
    let mut p = BernsteinParams::new(
        noise.sigma_var_sq(),
        noise.b_w(),
        b_x_sq.clone(),
        SymMatrix::zeros(d),
        b_x_sq.clone(),
        0.2,
        0.2,
        0.05,
    )?;
    p.v = b_x_sq.scale(p.minimal_v_scale() * 1.01);
    let bern = BoundSpec::Bernstein(p);

    let stops = [
        StopSpec::Horizon { t: 2_000 },
        StopSpec::LogdetGain { c: 8.0, t_max: 20_000 },
    ];
    for bound in [subg, bern] {
        for stop in &stops {
            let spec = TrialSpec {
                d,
                stop: stop.clone(),
                noise: noise.clone(),
                covariates: covariates.clone(),
                bound: bound.clone(),
                seed: 11,
                radius_scale: 1.0,
            };
            let r = coverage_experiment(&spec, 2_000)?;
            let kind = match bound {
                BoundSpec::SubGaussian(_) => "sub-gaussian",
                BoundSpec::Bernstein(_) => "bernstein",
            };
            println!(
                "{kind:<13} {:<40} misses {:>3}/{:<5} burn-in failures {:>4}  CP95 upper {:.4}  certified {}",
                format!("{stop:?}"),
                r.n_violations,
                r.n_trials - r.n_burnin_failures,
                r.n_burnin_failures,
                r.clopper_pearson_95.1,
                r.certifies()
            );
        }
    }
    Ok(())
}
