use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::RidgeAccumulator;
use crate::bounds::{bernstein_radius_sq_observable, subgaussian_radius_sq, BernsteinParams, SubGaussianParams};
use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, norm_sq, SymMatrix};
use crate::stream::fmt17;
use crate::verification::{trial_rng, NoiseModel};

/// Finite-armed linear bandit with rewards `⟨θ⋆, a⟩ + W`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditEnv {
    pub arms: Vec<Vec<f64>>,
    pub theta_star: Vec<f64>,
    pub noise: NoiseModel,
    /// `Γ = ridge·I`.
    pub ridge: f64,
    /// Known bound on `‖θ⋆‖`, used for the regularization bias term.
    pub theta_bound: f64,
}

impl BanditEnv {
    pub fn dim(&self) -> usize {
        self.theta_star.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.arms.is_empty() {
            return Err(invalid("env.arms", "at least one arm required"));
        }
        let d = self.dim();
        if self.arms.iter().any(|a| a.len() != d) {
            return Err(invalid("env.arms", format!("every arm needs length {d}")));
        }
        if !(self.ridge > 0.0) {
            return Err(invalid("env.ridge", "must be positive"));
        }
        if !(self.theta_bound >= norm_sq(&self.theta_star).sqrt()) {
            return Err(invalid("env.theta_bound", "smaller than ‖θ⋆‖"));
        }
        self.noise.validate()
    }

    /// `B_X² = max_a ‖a‖²·I`, so every `aaᵀ ⪯ B_X²`.
    pub fn b_x_sq(&self) -> SymMatrix {
        let r2 = self.arms.iter().map(|a| norm_sq(a)).fold(0.0, f64::max);
        SymMatrix::scaled_identity(self.dim(), r2)
    }

    fn best_mean(&self) -> f64 {
        self.arms.iter().map(|a| dot(&self.theta_star, a)).fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadiusProvider {
    SubGaussian { delta: f64 },
    /// Bernstein radius with the observable `α` bound and `V = v_factor·c_min·B_X²`,
    /// capped by the sub-Gaussian radius; the sub-Gaussian radius alone
    /// before burn-in. Consults two bounds, so holds with probability `1−2δ`.
    Bernstein { delta: f64, eps: f64, nu: f64, v_factor: f64 },
    /// Constant `θ`-space radius; `∞` selects the most uncertain arm.
    Fixed { c: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderMode {
    SubGaussian,
    /// Bernstein provider before burn-in.
    Fallback,
    Bernstein,
    /// Bernstein provider after burn-in, sub-Gaussian radius smaller.
    BernsteinCapped,
    Fixed,
}

impl ProviderMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::SubGaussian => "sub_gaussian",
            Self::Fallback => "fallback",
            Self::Bernstein => "bernstein",
            Self::BernsteinCapped => "bernstein_capped",
            Self::Fixed => "fixed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: u64,
    pub arm: usize,
    pub regret: f64,
    pub cum_regret: f64,
    pub radius: f64,
    pub provider_mode: ProviderMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretTrace {
    pub env: BanditEnv,
    pub provider: RadiusProvider,
    pub horizon: u64,
    pub seed: u64,
    pub delta_inflated: bool,
    pub steps: Vec<TraceStep>,
}

impl RegretTrace {
    pub fn cum_regret(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.cum_regret)
    }

    /// Columns `step, arm, regret, cum_regret, radius, provider_mode`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e: std::io::Error| Error::Stream(e.to_string());
        writeln!(out, "step,arm,regret,cum_regret,radius,provider_mode").map_err(io)?;
        for s in &self.steps {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                s.step,
                s.arm,
                fmt17(s.regret),
                fmt17(s.cum_regret),
                fmt17(s.radius),
                s.provider_mode.as_str()
            )
            .map_err(io)?;
        }
        Ok(())
    }

    /// Everything except the per-step rows.
    pub fn metadata_json(&self) -> serde_json::Value {
        serde_json::json!({
            "env": self.env,
            "provider": self.provider,
            "horizon": self.horizon,
            "seed": self.seed,
            "delta_inflated": self.delta_inflated,
            "cum_regret": self.cum_regret(),
        })
    }
}

enum Radius {
    SubGaussian(SubGaussianParams),
    Bernstein(SubGaussianParams, BernsteinParams),
    Fixed(f64),
}

impl Radius {
    fn build(env: &BanditEnv, provider: &RadiusProvider) -> Result<Self> {
        let d = env.dim();
        let gamma = SymMatrix::scaled_identity(d, env.ridge);
        Ok(match *provider {
            RadiusProvider::SubGaussian { delta } => {
                Self::SubGaussian(SubGaussianParams::new(env.noise.sigma_subg_sq(), delta, gamma)?)
            }
            RadiusProvider::Bernstein { delta, eps, nu, v_factor } => {
                let bx = env.b_x_sq();
                let subg = SubGaussianParams::new(env.noise.sigma_subg_sq(), delta, gamma.clone())?;
                let mut p = BernsteinParams::new(
                    env.noise.sigma_var_sq(),
                    env.noise.b_w(),
                    bx.clone(),
                    gamma,
                    bx.clone(),
                    eps,
                    nu,
                    delta,
                )?;
                p.v = bx.scale(p.minimal_v_scale() * v_factor);
                Self::Bernstein(subg, p)
            }
            RadiusProvider::Fixed { c } => {
                if !(c >= 0.0) {
                    return Err(invalid("provider.c", "must be non-negative"));
                }
                Self::Fixed(c)
            }
        })
    }

    /// `θ`-space radius: `‖S‖`-radius plus `√λ_max(Γ)·‖θ⋆‖` bias.
    fn radius(&self, acc: &RidgeAccumulator, bias: f64) -> Result<(f64, ProviderMode)> {
        let state = acc.state();
        Ok(match self {
            Self::Fixed(c) => (*c, ProviderMode::Fixed),
            Self::SubGaussian(p) => {
                let r2 = subgaussian_radius_sq(state, p)?.radius_sq.unwrap_or(f64::INFINITY);
                (r2.sqrt() + bias, ProviderMode::SubGaussian)
            }
            Self::Bernstein(subg, p) => {
                let rs = subgaussian_radius_sq(state, subg)?.radius_sq.unwrap_or(f64::INFINITY);
                match bernstein_radius_sq_observable(state, p, subg)?.radius_sq {
                    None => (rs.sqrt() + bias, ProviderMode::Fallback),
                    Some(rb) if rb < rs => (rb.sqrt() + bias, ProviderMode::Bernstein),
                    Some(_) => (rs.sqrt() + bias, ProviderMode::BernsteinCapped),
                }
            }
        })
    }
}

/// Optimistic arm selection: maximize `⟨θ̂, a⟩ + r·‖a‖_{(V_t+Γ)⁻¹}`, lowest
/// index on exact ties. With `r = ∞` the arm maximizing `‖a‖_{(V_t+Γ)⁻¹}` is
/// chosen. Noise is the only random draw, so runs with the same seed see
/// the same noise sequence whatever the provider.
pub fn oful_run(env: &BanditEnv, provider: &RadiusProvider, horizon: u64, seed: u64) -> Result<RegretTrace> {
    env.validate()?;
    let radius = Radius::build(env, provider)?;
    let d = env.dim();
    let mut rng = trial_rng(seed, 0);
    let mut acc = RidgeAccumulator::new(d, SymMatrix::scaled_identity(d, env.ridge))?;
    let bias = env.ridge.sqrt() * env.theta_bound;
    let best = env.best_mean();
    let mut steps = Vec::with_capacity(horizon as usize);
    let mut cum = 0.0;
    for step in 0..horizon {
        let (r, mode) = radius.radius(&acc, bias)?;
        let chol = acc.state().gram_chol()?;
        let theta_hat = chol.solve(acc.xy());
        let mut arm = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (i, a) in env.arms.iter().enumerate() {
            let width = chol.quad_form_inv(a).sqrt();
            let score = if r.is_infinite() { width } else { dot(&theta_hat, a) + r * width };
            if score > best_score {
                best_score = score;
                arm = i;
            }
        }
        let a = &env.arms[arm];
        let w = env.noise.sample(&mut rng);
        let mean = dot(&env.theta_star, a);
        acc.observe(a, w, mean + w)?;
        let regret = (best - mean).max(0.0);
        cum += regret;
        steps.push(TraceStep {
            step,
            arm,
            regret,
            cum_regret: cum,
            radius: r,
            provider_mode: mode,
        });
    }
    Ok(RegretTrace {
        env: env.clone(),
        provider: provider.clone(),
        horizon,
        seed,
        delta_inflated: matches!(provider, RadiusProvider::Bernstein { .. }),
        steps,
    })
}

/// Mean final cumulative regret per provider over seeds `0..n_seeds` derived
/// from `seed`; every provider sees the same seeds.
pub fn regret_comparison(
    env: &BanditEnv,
    providers: &[RadiusProvider],
    horizon: u64,
    n_seeds: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    providers
        .iter()
        .map(|p| {
            let regrets: Vec<f64> = (0..n_seeds)
                .into_par_iter()
                .map(|i| Ok(oful_run(env, p, horizon, crate::verification::derive_seed(seed, i))?.cum_regret()))
                .collect::<Result<_>>()?;
            Ok(regrets.iter().sum::<f64>() / n_seeds as f64)
        })
        .collect()
}
