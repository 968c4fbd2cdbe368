use std::f64::consts::E;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{trial_rng, CovariateModel, NoiseModel, Simulator};
use crate::bounds::{burnin_check, scaled_alpha, bernstein_priors, BernsteinParams};
use crate::error::Result;
use crate::linalg::{cholesky, max_outer_form, SymMatrix, DEFAULT_CONTAINMENT_TOL};
use crate::stream::MartingaleState;

const SUFFICIENT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct SufficiencyInstance {
    pub state: MartingaleState,
    pub params: BernsteinParams,
    pub synthetic: bool,
}

/// Both scalar sufficient conditions for `ρ ⊆ π`, with `y = (1+α)⁻¹(V_τ+Γ)⁻¹S_τ`
/// in unit-variance coordinates:
///
/// - `derived`: `(√(d+2)/(√e(1+ν)) + ‖y‖_V)² ≤ e⁻¹(d+2)` (Young's inequality);
/// - `printed`: `(√(d+2)/(1+ν) + ‖y‖_V)² ≤ e⁻¹(d+2)`, strictly stronger.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SufficientCondition {
    pub derived: bool,
    pub printed: bool,
}

pub fn sufficient_condition(state: &MartingaleState, p: &BernsteinParams) -> Result<SufficientCondition> {
    let d = state.dim() as f64;
    let alpha = scaled_alpha(state, p)?;
    let y_norm = (state.cross_norm_sq(&p.v)? / p.sigma_var_eps_sq()).sqrt() / (1.0 + alpha);
    let rhs = (d + 2.0) / E;
    let derived = ((d + 2.0).sqrt() / (E.sqrt() * (1.0 + p.nu)) + y_norm).powi(2);
    let printed = ((d + 2.0).sqrt() / (1.0 + p.nu) + y_norm).powi(2);
    Ok(SufficientCondition {
        derived: derived <= rhs * (1.0 + SUFFICIENT_SLACK),
        printed: printed <= rhs * (1.0 + SUFFICIENT_SLACK),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SufficiencyRow {
    pub d: usize,
    pub synthetic: bool,
    pub admitted: bool,
    pub alpha: f64,
    /// `max_{x∈ρ} xᵀΣ_π⁻¹x`; contained iff `≤ 1`. NaN for skipped instances.
    pub max_form: f64,
    pub contained: bool,
    pub sufficient: Option<SufficientCondition>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SufficiencyReport {
    pub n_instances: usize,
    pub n_admitted: usize,
    pub n_skipped: usize,
    pub n_containment_failures: usize,
    pub n_sufficient_derived: usize,
    pub n_derived_not_contained: usize,
    pub n_sufficient_printed: usize,
    pub n_printed_not_contained: usize,
    pub worst_max_form: f64,
    pub rows: Vec<SufficiencyRow>,
}

impl SufficiencyReport {
    pub fn passed(&self) -> bool {
        self.n_containment_failures == 0 && self.n_derived_not_contained == 0 && self.n_printed_not_contained == 0
    }
}

fn assess(inst: &SufficiencyInstance) -> Result<SufficiencyRow> {
    let d = inst.state.dim();
    let status = burnin_check(&inst.state, &inst.params)?;
    if !status.ok() {
        return Ok(SufficiencyRow {
            d,
            synthetic: inst.synthetic,
            admitted: false,
            alpha: f64::NAN,
            max_form: f64::NAN,
            contained: false,
            sufficient: None,
        });
    }
    let (rho, pi) = bernstein_priors(&inst.state, &inst.params)?;
    let max_form = max_outer_form(&pi, &rho)?;
    Ok(SufficiencyRow {
        d,
        synthetic: inst.synthetic,
        admitted: true,
        alpha: scaled_alpha(&inst.state, &inst.params)?,
        max_form,
        contained: max_form <= 1.0 + DEFAULT_CONTAINMENT_TOL,
        sufficient: Some(sufficient_condition(&inst.state, &inst.params)?),
    })
}

/// Runs the exact containment oracle on every instance passing burn-in and
/// cross-checks both scalar sufficient conditions against it.
pub fn check_alpha_sufficiency(instances: &[SufficiencyInstance]) -> Result<SufficiencyReport> {
    let rows: Vec<SufficiencyRow> = instances.par_iter().map(assess).collect::<Result<_>>()?;
    let admitted: Vec<&SufficiencyRow> = rows.iter().filter(|r| r.admitted).collect();
    let count = |f: &dyn Fn(&SufficiencyRow) -> bool| admitted.iter().filter(|r| f(r)).count();
    let derived = |r: &SufficiencyRow| r.sufficient.is_some_and(|s| s.derived);
    let printed = |r: &SufficiencyRow| r.sufficient.is_some_and(|s| s.printed);
    Ok(SufficiencyReport {
        n_instances: rows.len(),
        n_admitted: admitted.len(),
        n_skipped: rows.len() - admitted.len(),
        n_containment_failures: count(&|r| !r.contained),
        n_sufficient_derived: count(&derived),
        n_derived_not_contained: count(&|r| derived(r) && !r.contained),
        n_sufficient_printed: count(&printed),
        n_printed_not_contained: count(&|r| printed(r) && !r.contained),
        worst_max_form: admitted.iter().map(|r| r.max_form).fold(f64::NEG_INFINITY, f64::max),
        rows,
    })
}

fn random_psd(d: usize, scale: f64, rng: &mut impl Rng) -> SymMatrix {
    let mut g = SymMatrix::zeros(d);
    for _ in 0..d {
        let v: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        g.add_outer(&v, scale / d as f64);
    }
    g
}

fn random_params(d: usize, rng: &mut impl Rng) -> Result<(BernsteinParams, NoiseModel, CovariateModel)> {
    let b = rng.random_range(0.5..2.0);
    let noise = NoiseModel::RademacherScaled { b };
    let radius = rng.random_range(0.5..2.0);
    let covariates = if rng.random::<bool>() {
        CovariateModel::RandomSphere { radius }
    } else {
        let a = (0..d)
            .map(|i| (0..d).map(|j| if i == j { 0.7 } else { 0.1 }).collect())
            .collect();
        CovariateModel::Ar1 { a, noise_scale: 1.0, radius }
    };
    let eps = rng.random_range(0.05..0.5);
    let nu = rng.random_range(0.05..1.0);
    let b_x_sq = covariates.b_x_sq(d);
    let gamma = if rng.random::<bool>() {
        SymMatrix::zeros(d)
    } else {
        random_psd(d, rng.random_range(0.1..5.0), rng)
    };
    let mut p = BernsteinParams::new(b * b, b, b_x_sq.clone(), gamma, b_x_sq.clone(), eps, nu, 0.05)?;
    p.v = b_x_sq.scale(p.minimal_v_scale() * (1.0 + rng.random_range(0.0..1.0)));
    Ok((p, noise, covariates))
}

/// Instances from real simulations, stopped when the data burn-in first holds
/// or a random number of steps later.
pub fn realized_instances(n: usize, dims: &[usize], seed: u64) -> Result<Vec<SufficiencyInstance>> {
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i as u64);
            let d = dims[i % dims.len()];
            let (params, noise, covariates) = random_params(d, &mut rng)?;
            let mut sim = Simulator::new(d, &covariates, &noise, trial_rng(seed ^ 0x5eed, i as u64));
            let mut state = MartingaleState::new(d, params.gamma.clone())?;
            while !burnin_check(&state, &params)?.data_ok {
                let (x, w) = sim.step();
                state.observe(&x, w)?;
            }
            let extra = rng.random_range(0..=state.t() / 2);
            for _ in 0..extra {
                let (x, w) = sim.step();
                state.observe(&x, w)?;
            }
            Ok(SufficiencyInstance {
                state,
                params,
                synthetic: false,
            })
        })
        .collect()
}

/// Instances with `V_τ+Γ = G` for a random `G ⪰ e(1+ν)²V` and a single
/// observation placing `S_τ` so that the cross norm spans small to very
/// large `α`, half of them along the most sensitive direction.
pub fn synthetic_instances(n: usize, dims: &[usize], seed: u64) -> Result<Vec<SufficiencyInstance>> {
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i as u64);
            let d = dims[i % dims.len()];
            let (mut params, _, _) = random_params(d, &mut rng)?;
            let df = d as f64;
            let data = params.data_threshold();
            let g = &data.scale(1.0 + rng.random_range(0.0..0.5)) + &random_psd(d, rng.random_range(0.0..3.0), &mut rng);
            let l = cholesky(&g)?;
            // M = L⁻¹VL⁻ᵀ
            let cols: Vec<Vec<f64>> = (0..d)
                .map(|j| {
                    let mut e = vec![0.0; d];
                    e[j] = 1.0;
                    l.forward_solve(&params.v.mul_vec(&l.backward_solve(&e)))
                })
                .collect();
            let m = SymMatrix::from_fn(d, |a, b| 0.5 * (cols[a][b] + cols[b][a]));
            let u = if rng.random::<bool>() {
                let (_, vecs) = m.eigen();
                vecs[d - 1].clone()
            } else {
                crate::linalg::unit_sphere_point(d, &mut rng)
            };
            let c = rng.random_range(0.1..0.9);
            let x = l.lower_mul(&u).into_iter().map(|v| v * c).collect::<Vec<_>>();
            let kappa = params.nu.powi(2) * (df + 2.0) / (E * (1.0 + params.nu).powi(2))
                * rng.random_range(-3.0f64..5.0).exp();
            let w = (kappa * params.sigma_var_eps_sq()).sqrt() / (c * m.quad_form(&u).sqrt());
            let mut xx = SymMatrix::zeros(d);
            xx.add_outer(&x, 1.0);
            let gamma = &g - &xx;
            params.gamma = gamma.clone();
            let state = MartingaleState::new(d, gamma)?.observed(&x, w)?;
            Ok(SufficiencyInstance {
                state,
                params,
                synthetic: true,
            })
        })
        .collect()
}
