use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{trial_rng, CovariateModel, NoiseModel, Simulator};
use crate::bounds::{bernstein_assess, subgaussian_radius_sq, BernsteinParams, SubGaussianParams};
use crate::error::Result;
use crate::stream::MartingaleState;

/// One grid cell: both bounds evaluated on the same paths with `Γ = V`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TightnessCell {
    pub d: usize,
    pub t: u64,
    pub noise: NoiseModel,
    pub covariates: CovariateModel,
    pub eps: f64,
    pub nu: f64,
    pub delta: f64,
    /// `Γ = V = v_factor·c_min·B_X²` with `c_min` the smallest static-admissible scale.
    pub v_factor: f64,
    pub n_trials: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TightnessRow {
    pub d: usize,
    pub t: u64,
    pub noise: String,
    pub eps: f64,
    pub nu: f64,
    pub n_trials: u64,
    pub n_burnin_pass: u64,
    pub burnin_failure_rate: f64,
    pub mean_subg_radius_sq: f64,
    /// NaN when no trial passed burn-in.
    pub mean_bernstein_radius_sq: f64,
    /// Mean over burn-in-passing trials of the per-trial radius² ratio.
    pub mean_ratio: Option<f64>,
    pub mean_alpha: f64,
    /// `σ²_var / ((1−ε)σ²_subG)`, the limit as `α → 0` with matched log-determinants.
    pub predicted_ratio: f64,
}

fn run_cell(cell: &TightnessCell) -> Result<TightnessRow> {
    let d = cell.d;
    cell.noise.validate()?;
    cell.covariates.validate(d)?;
    let b_x_sq = cell.covariates.b_x_sq(d);
    let sigma_var_sq = cell.noise.sigma_var_sq();
    let mut bern = BernsteinParams::new(
        sigma_var_sq,
        cell.noise.b_w(),
        b_x_sq.clone(),
        b_x_sq.clone(),
        b_x_sq.clone(),
        cell.eps,
        cell.nu,
        cell.delta,
    )?;
    let gamma = b_x_sq.scale(bern.minimal_v_scale() * cell.v_factor);
    bern.v = gamma.clone();
    bern.gamma = gamma.clone();
    let subg = SubGaussianParams::new(cell.noise.sigma_subg_sq(), cell.delta, gamma.clone())?;

    let per_trial: Vec<(f64, Option<(f64, f64)>)> = (0..cell.n_trials)
        .into_par_iter()
        .map(|i| -> Result<_> {
            let mut sim = Simulator::new(d, &cell.covariates, &cell.noise, trial_rng(cell.seed, i));
            let mut state = MartingaleState::new(d, gamma.clone())?;
            for _ in 0..cell.t {
                let (x, w) = sim.step();
                state.observe(&x, w)?;
            }
            let rs = subgaussian_radius_sq(&state, &subg)?.radius_sq.unwrap_or(f64::NAN);
            let rb = bernstein_assess(&state, &bern)?;
            Ok((rs, rb.radius_sq.map(|r| (r, rb.alpha))))
        })
        .collect::<Result<_>>()?;

    let n = cell.n_trials as f64;
    let mut subg_sum = 0.0;
    let (mut pass, mut bern_sum, mut ratio_sum, mut alpha_sum) = (0u64, 0.0, 0.0, 0.0);
    for (rs, rb) in &per_trial {
        subg_sum += rs;
        if let Some((r, a)) = rb {
            pass += 1;
            bern_sum += r;
            ratio_sum += r / rs;
            alpha_sum += a;
        }
    }
    let p = pass as f64;
    Ok(TightnessRow {
        d,
        t: cell.t,
        noise: cell.noise.label(),
        eps: cell.eps,
        nu: cell.nu,
        n_trials: cell.n_trials,
        n_burnin_pass: pass,
        burnin_failure_rate: 1.0 - p / n,
        mean_subg_radius_sq: subg_sum / n,
        mean_bernstein_radius_sq: if pass > 0 { bern_sum / p } else { f64::NAN },
        mean_ratio: (pass > 0).then(|| ratio_sum / p),
        mean_alpha: if pass > 0 { alpha_sum / p } else { f64::NAN },
        predicted_ratio: sigma_var_sq / ((1.0 - cell.eps) * cell.noise.sigma_subg_sq()),
    })
}

/// Mean realized radii of both bounds per cell, in input order.
pub fn tightness_comparison(cells: &[TightnessCell]) -> Result<Vec<TightnessRow>> {
    cells.iter().map(run_cell).collect()
}
