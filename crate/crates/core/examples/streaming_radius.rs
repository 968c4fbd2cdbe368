//! Feed a stream of observations into a `MartingaleState` and watch both
//! radii evolve against the realized self-normalized statistic.
//!
//! cargo run --release --example streaming_radius

use selfnorm::bounds::{bernstein_assess, subgaussian_radius_sq};
use selfnorm::verification::{trial_rng, CovariateModel, NoiseModel, Simulator};
use selfnorm::{BernsteinParams, MartingaleState, SubGaussianParams, SymMatrix};

fn main() -> selfnorm::Result<()> {
    let d = 3;
    let noise = NoiseModel::TwoPoint { p: 0.1, b: 1.0 };
    let covariates = CovariateModel::RandomSphere { radius: 1.0 };
    let b_x_sq = covariates.b_x_sq(d);

    let mut bern = BernsteinParams::new(
        noise.sigma_var_sq(),
        noise.b_w(),
        b_x_sq.clone(),
        SymMatrix::zeros(d),
        b_x_sq.clone(),
        0.1,
        0.1,
        0.05,
    )?;
    // Smallest V that satisfies the data-free half of burn-in.
    let c = bern.minimal_v_scale() * 1.000001;
    bern.v = b_x_sq.scale(c);
    bern.gamma = bern.v.clone();
    let subg = SubGaussianParams::new(noise.sigma_subg_sq(), 0.05, bern.gamma.clone())?;

    let mut sim = Simulator::new(d, &covariates, &noise, trial_rng(1, 0));
    let mut state = MartingaleState::new(d, bern.gamma.clone())?;
    println!("{:>7} {:>12} {:>12} {:>12} {:>8}", "t", "lhs", "subg r²", "bern r²", "alpha");
    for t in 1..=100_000u64 {
        let (x, w) = sim.step();
        state.observe(&x, w)?;
        if t.is_power_of_two() || t % 20_000 == 0 {
            let sg = subgaussian_radius_sq(&state, &subg)?;
            let be = bernstein_assess(&state, &bern)?;
            let bern_col = match be.radius_sq {
                Some(r) => format!("{r:12.3}"),
                None => format!("{:>12}", "burn-in"),
            };
            println!(
                "{t:>7} {:12.3} {:12.3} {bern_col} {:8.4}",
                state.self_norm_sq()?,
                sg.radius_sq.unwrap_or(f64::NAN),
                be.alpha
            );
        }
    }
    Ok(())
}
