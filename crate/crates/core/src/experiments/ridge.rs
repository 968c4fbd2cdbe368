use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{bernstein_assess, subgaussian_radius_sq, BernsteinParams, BoundReport, SubGaussianParams};
use crate::error::{invalid, Error, Result};
use crate::linalg::{axpy, dot, Ellipsoid, SymMatrix};
use crate::stream::MartingaleState;
use crate::verification::{trial_rng, CovariateModel, CoverageReport, NoiseModel, Simulator};

/// `Y_k = ⟨θ⋆, X_k⟩ + W_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub theta_star: Vec<f64>,
    pub noise: NoiseModel,
}

impl LinearModel {
    pub fn response(&self, x: &[f64], w: f64) -> f64 {
        dot(&self.theta_star, x) + w
    }
}

/// Ridge regression state: the martingale `(S_t, V_t+Γ)` together with
/// `Σ Y_k X_k`.
#[derive(Debug, Clone)]
pub struct RidgeAccumulator {
    state: MartingaleState,
    xy: Vec<f64>,
}

impl RidgeAccumulator {
    pub fn new(d: usize, gamma: SymMatrix) -> Result<Self> {
        Ok(Self {
            state: MartingaleState::new(d, gamma)?,
            xy: vec![0.0; d],
        })
    }

    /// Records covariate `x`, its noise `w` and response `y`.
    pub fn observe(&mut self, x: &[f64], w: f64, y: f64) -> Result<()> {
        self.state.observe(x, w)?;
        axpy(y, x, &mut self.xy);
        Ok(())
    }

    pub fn state(&self) -> &MartingaleState {
        &self.state
    }

    pub fn xy(&self) -> &[f64] {
        &self.xy
    }

    /// `θ̂ = (V_t+Γ)⁻¹ Σ Y_k X_k`.
    pub fn ridge_estimate(&self) -> Result<Vec<f64>> {
        Ok(self.state.gram_chol()?.solve(&self.xy))
    }

    /// `‖(θ̂ − θ⋆) − (V_t+Γ)⁻¹(S_t − Γθ⋆)‖_∞`, zero up to rounding.
    pub fn error_identity_residual(&self, theta_star: &[f64]) -> Result<f64> {
        let chol = self.state.gram_chol()?;
        let theta_hat = chol.solve(&self.xy);
        let mut rhs = self.state.s().to_vec();
        axpy(-1.0, &self.state.regularizer().mul_vec(theta_star), &mut rhs);
        let rhs = chol.solve(&rhs);
        Ok(theta_hat
            .iter()
            .zip(theta_star)
            .zip(&rhs)
            .map(|((h, t), r)| (h - t - r).abs())
            .fold(0.0, f64::max))
    }
}

/// `{θ : ‖θ − θ̂‖²_{V_t+Γ} ≤ r²}` with `r²` from `report`.
pub fn confidence_ellipsoid(state: &MartingaleState, report: &BoundReport, theta_hat: &[f64]) -> Result<Ellipsoid> {
    let r2 = match report.radius_sq {
        Some(r) => r,
        None => {
            return Err(match report.burnin_status() {
                Some(s) => Error::BurninViolated(s),
                None => invalid("report", "no radius"),
            })
        }
    };
    if !(r2 > 0.0) {
        return Err(invalid("radius_sq", "a confidence ellipsoid needs a positive radius"));
    }
    let shape = state.gram_chol()?.inverse().scale(r2);
    Ellipsoid::new(theta_hat.to_vec(), shape)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RidgeBound {
    SubGaussian,
    /// `V = v_factor·c_min·B_X²`, `c_min` the smallest static-admissible scale.
    Bernstein { eps: f64, nu: f64, v_factor: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeCoverageSpec {
    pub model: LinearModel,
    pub covariates: CovariateModel,
    pub gamma: SymMatrix,
    pub bound: RidgeBound,
    pub delta: f64,
    pub t: u64,
    pub n_trials: u64,
    pub seed: u64,
}

type Evaluator = Box<dyn Fn(&MartingaleState) -> Result<BoundReport> + Send + Sync>;

impl RidgeCoverageSpec {
    fn evaluator(&self) -> Result<Evaluator> {
        let d = self.model.theta_star.len();
        crate::linalg::check_dim(d, self.gamma.dim())?;
        self.model.noise.validate()?;
        self.covariates.validate(d)?;
        Ok(match self.bound {
            RidgeBound::SubGaussian => {
                let p = SubGaussianParams::new(self.model.noise.sigma_subg_sq(), self.delta, self.gamma.clone())?;
                Box::new(move |s| subgaussian_radius_sq(s, &p))
            }
            RidgeBound::Bernstein { eps, nu, v_factor } => {
                let bx = self.covariates.b_x_sq(d);
                let noise = &self.model.noise;
                let mut p = BernsteinParams::new(
                    noise.sigma_var_sq(),
                    noise.b_w(),
                    bx.clone(),
                    self.gamma.clone(),
                    bx.clone(),
                    eps,
                    nu,
                    self.delta,
                )?;
                p.v = bx.scale(p.minimal_v_scale() * v_factor);
                Box::new(move |s| bernstein_assess(s, &p))
            }
        })
    }
}

/// Fraction of trials whose confidence ellipsoid misses `θ⋆`. Trials without
/// a radius (failed burn-in or singular `V_t+Γ`) are counted separately.
pub fn ridge_coverage(spec: &RidgeCoverageSpec) -> Result<CoverageReport> {
    if spec.n_trials == 0 {
        return Err(invalid("n_trials", "must be at least 1"));
    }
    let eval = spec.evaluator()?;
    let d = spec.model.theta_star.len();
    let outcomes: Vec<Option<(bool, f64, f64)>> = (0..spec.n_trials)
        .into_par_iter()
        .map(|i| -> Result<_> {
            let mut sim = Simulator::new(d, &spec.covariates, &spec.model.noise, trial_rng(spec.seed, i));
            let mut acc = RidgeAccumulator::new(d, spec.gamma.clone())?;
            for _ in 0..spec.t {
                let (x, w) = sim.step();
                let y = spec.model.response(&x, w);
                acc.observe(&x, w, y)?;
            }
            if !acc.state().is_pd() {
                return Ok(None);
            }
            let report = eval(acc.state())?;
            let Some(r2) = report.radius_sq else { return Ok(None) };
            let theta_hat = acc.ridge_estimate()?;
            let diff: Vec<f64> = theta_hat.iter().zip(&spec.model.theta_star).map(|(a, b)| a - b).collect();
            let err = acc.state().gram().quad_form(&diff);
            Ok(Some((err > r2, err, r2)))
        })
        .collect::<Result<_>>()?;
    let (mut viol, mut burn, mut lhs, mut rad) = (0, 0, 0.0, 0.0);
    for o in &outcomes {
        match o {
            None => burn += 1,
            Some((v, e, r)) => {
                viol += *v as u64;
                lhs += e;
                rad += r;
            }
        }
    }
    Ok(CoverageReport::from_sums(
        spec.n_trials,
        viol,
        burn,
        spec.delta,
        lhs,
        rad,
        (spec.t * spec.n_trials) as f64,
    ))
}
