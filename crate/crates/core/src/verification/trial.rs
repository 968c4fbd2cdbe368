use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{clopper_pearson, derive_seed, trial_rng, CovariateModel, CovariateStream, NoiseModel, TrialRng};
use crate::bounds::{bernstein_assess, subgaussian_radius_sq, BernsteinParams, BoundReport, SubGaussianParams};
use crate::error::{invalid, Error, Result};
use crate::linalg::{cholesky, SymMatrix};
use crate::stream::{MartingaleState, StoppingRule};

/// Draws `(X_k, W_k)` pairs from one generator, `X_k` strictly before `W_k`.
pub struct Simulator {
    rng: TrialRng,
    covariates: CovariateStream,
    noise: NoiseModel,
    pending_x: bool,
}

impl Simulator {
    pub fn new(d: usize, covariates: &CovariateModel, noise: &NoiseModel, rng: TrialRng) -> Self {
        Self {
            rng,
            covariates: covariates.stream(d),
            noise: noise.clone(),
            pending_x: false,
        }
    }

    /// Next covariate. Fails if the previous covariate has no noise yet.
    pub fn next_x(&mut self) -> Result<Vec<f64>> {
        if self.pending_x {
            return Err(Error::Stream("covariate requested twice without a noise draw".into()));
        }
        self.pending_x = true;
        Ok(self.covariates.next(&mut self.rng))
    }

    /// Noise for the covariate returned by the last [`Self::next_x`].
    pub fn next_w(&mut self) -> Result<f64> {
        if !self.pending_x {
            return Err(Error::Stream("noise requested before its covariate".into()));
        }
        self.pending_x = false;
        Ok(self.noise.sample(&mut self.rng))
    }

    pub fn step(&mut self) -> (Vec<f64>, f64) {
        let x = self.next_x().expect("step keeps x/w alternation");
        let w = self.next_w().expect("step keeps x/w alternation");
        (x, w)
    }
}

/// How the stopping time of a trial is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StopSpec {
    Horizon { t: u64 },
    /// Stop once `log det(V_t + R) − log det R ≥ c`, where `R` is `Γ` when
    /// positive definite and the Bernstein `V` otherwise.
    LogdetGain { c: f64, t_max: u64 },
    /// Stop once `‖S_t‖²_{(V_t+Γ)⁻¹} ≥ threshold`.
    SelfNormAtLeast { threshold: f64, t_max: u64 },
}

impl StopSpec {
    pub fn t_max(&self) -> u64 {
        match *self {
            Self::Horizon { t } => t,
            Self::LogdetGain { t_max, .. } | Self::SelfNormAtLeast { t_max, .. } => t_max,
        }
    }

    pub fn is_adaptive(&self) -> bool {
        !matches!(self, Self::Horizon { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundSpec {
    SubGaussian(SubGaussianParams),
    Bernstein(BernsteinParams),
}

impl BoundSpec {
    pub fn gamma(&self) -> &SymMatrix {
        match self {
            Self::SubGaussian(p) => &p.gamma,
            Self::Bernstein(p) => &p.gamma,
        }
    }

    pub fn delta(&self) -> f64 {
        match self {
            Self::SubGaussian(p) => p.delta,
            Self::Bernstein(p) => p.delta,
        }
    }

    pub fn dim(&self) -> usize {
        self.gamma().dim()
    }

    pub fn evaluate(&self, state: &MartingaleState) -> Result<BoundReport> {
        match self {
            Self::SubGaussian(p) => subgaussian_radius_sq(state, p),
            Self::Bernstein(p) => bernstein_assess(state, p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSpec {
    pub d: usize,
    pub stop: StopSpec,
    pub noise: NoiseModel,
    pub covariates: CovariateModel,
    pub bound: BoundSpec,
    pub seed: u64,
    /// Multiplies the radius before comparison. Debugging aid; 1 for real runs.
    #[serde(default = "one")]
    pub radius_scale: f64,
}

fn one() -> f64 {
    1.0
}

impl TrialSpec {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(invalid("d", "must be at least 1"));
        }
        crate::linalg::check_dim(self.d, self.bound.dim())?;
        self.noise.validate()?;
        self.covariates.validate(self.d)?;
        if let BoundSpec::Bernstein(p) = &self.bound {
            // The model must satisfy the assumptions the parameters claim.
            if self.noise.b_w() > p.b_w * (1.0 + 1e-12) {
                return Err(invalid("bound.b_w", "smaller than the noise model's bound"));
            }
            if self.noise.sigma_var_sq() > p.sigma_var_sq * (1.0 + 1e-12) {
                return Err(invalid("bound.sigma_var_sq", "smaller than the noise model's variance"));
            }
            let bx = self.covariates.b_x_sq(self.d);
            if !crate::linalg::psd_order_leq(&bx, &p.b_x_sq, crate::linalg::default_psd_tol(&p.b_x_sq)) {
                return Err(invalid("bound.b_x_sq", "does not dominate the covariate bound"));
            }
        }
        if let BoundSpec::SubGaussian(p) = &self.bound {
            if self.noise.sigma_subg_sq() > p.sigma_subg_sq * (1.0 + 1e-12) {
                return Err(invalid("bound.sigma_subg_sq", "smaller than the noise model's proxy"));
            }
        }
        if !(self.radius_scale >= 0.0) {
            return Err(invalid("radius_scale", "must be non-negative"));
        }
        Ok(())
    }

    /// Stopping rule for this spec.
    pub fn stopping_rule(&self) -> Result<StoppingRule> {
        Ok(match self.stop {
            StopSpec::Horizon { t } => StoppingRule::horizon(t),
            StopSpec::LogdetGain { c, t_max } => {
                let reference = match &self.bound {
                    BoundSpec::Bernstein(p) if cholesky(&p.gamma).is_err() => p.v.clone(),
                    b => b.gamma().clone(),
                };
                let base = cholesky(&reference)
                    .map_err(|_| invalid("stop", "logdet rule needs a positive definite reference"))?
                    .logdet();
                StoppingRule::new(t_max, move |s: &MartingaleState| {
                    let gram = s.gram() - s.regularizer();
                    let m = &gram + &reference;
                    cholesky(&m).map(|f| f.logdet() - base >= c).unwrap_or(false)
                })
            }
            StopSpec::SelfNormAtLeast { threshold, t_max } => StoppingRule::self_norm_at_least(threshold, t_max),
        })
    }
}

/// One simulated path evaluated at its stopping time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    /// `‖S_τ‖²_{(V_τ+Γ)⁻¹}`; NaN when `V_τ+Γ` is singular.
    pub lhs: f64,
    pub report: BoundReport,
    pub t: u64,
}

impl TrialOutcome {
    /// `None` when burn-in failed, otherwise whether `lhs` exceeds the
    /// radius times `scale`.
    pub fn violated(&self, scale: f64) -> Option<bool> {
        self.report.radius_sq.map(|r| self.lhs > r * scale)
    }
}

/// Simulates one path until the spec's stopping rule fires.
pub fn run_trial(spec: &TrialSpec, rng: TrialRng) -> Result<TrialOutcome> {
    let rule = spec.stopping_rule()?;
    let mut sim = Simulator::new(spec.d, &spec.covariates, &spec.noise, rng);
    let mut state = MartingaleState::new(spec.d, spec.bound.gamma().clone())?;
    while !rule.should_stop(&state) {
        let (x, w) = sim.step();
        state.observe(&x, w)?;
    }
    let lhs = if state.is_pd() { state.self_norm_sq()? } else { f64::NAN };
    let report = spec.bound.evaluate(&state)?;
    Ok(TrialOutcome { lhs, report, t: state.t() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub n_trials: u64,
    pub n_violations: u64,
    pub n_covered: u64,
    pub n_burnin_failures: u64,
    /// `n_violations / (n_trials − n_burnin_failures)`; NaN if no trial passed burn-in.
    pub failure_rate: f64,
    pub burnin_failure_fraction: f64,
    pub clopper_pearson_95: (f64, f64),
    pub delta: f64,
    pub mean_lhs: f64,
    pub mean_radius_sq: f64,
    pub mean_stopping_time: f64,
}

impl CoverageReport {
    /// Upper confidence bound on the failure rate is at most `δ`.
    pub fn certifies(&self) -> bool {
        self.clopper_pearson_95.1 <= self.delta
    }
}

const CHUNK: usize = 256;

/// Runs `n_trials` independent trials, trial `i` seeded by
/// `derive_seed(spec.seed, i)`. Results do not depend on the rayon pool size.
pub fn coverage_experiment(spec: &TrialSpec, n_trials: u64) -> Result<CoverageReport> {
    if n_trials == 0 {
        return Err(invalid("n_trials", "must be at least 1"));
    }
    spec.validate()?;
    let chunks: Vec<(u64, u64, f64, f64, f64)> = (0..n_trials.div_ceil(CHUNK as u64))
        .into_par_iter()
        .map(|c| -> Result<_> {
            let (mut viol, mut burn, mut lhs, mut rad, mut t) = (0u64, 0u64, 0.0, 0.0, 0.0);
            let lo = c * CHUNK as u64;
            for i in lo..(lo + CHUNK as u64).min(n_trials) {
                let out = run_trial(spec, trial_rng(spec.seed, i))?;
                t += out.t as f64;
                match out.violated(spec.radius_scale) {
                    None => burn += 1,
                    Some(v) => {
                        viol += v as u64;
                        lhs += out.lhs;
                        rad += out.report.radius_sq.unwrap_or(0.0) * spec.radius_scale;
                    }
                }
            }
            Ok((viol, burn, lhs, rad, t))
        })
        .collect::<Result<_>>()?;
    let (mut viol, mut burn, mut lhs, mut rad, mut t) = (0u64, 0u64, 0.0, 0.0, 0.0);
    for c in chunks {
        viol += c.0;
        burn += c.1;
        lhs += c.2;
        rad += c.3;
        t += c.4;
    }
    Ok(CoverageReport::from_sums(n_trials, viol, burn, spec.bound.delta(), lhs, rad, t))
}

impl CoverageReport {
    /// Assembles a report from raw counts and sums over admitted trials
    /// (`lhs`, `radius_sq`) and over all trials (`t`).
    pub fn from_sums(n_trials: u64, violations: u64, burnin_failures: u64, delta: f64, lhs: f64, radius_sq: f64, t: f64) -> Self {
        let admitted = n_trials - burnin_failures;
        let adm = admitted as f64;
        CoverageReport {
            n_trials,
            n_violations: violations,
            n_covered: admitted - violations,
            n_burnin_failures: burnin_failures,
            failure_rate: if admitted > 0 { violations as f64 / adm } else { f64::NAN },
            burnin_failure_fraction: burnin_failures as f64 / n_trials as f64,
            clopper_pearson_95: clopper_pearson(violations, admitted, 0.95),
            delta,
            mean_lhs: lhs / adm,
            mean_radius_sq: radius_sq / adm,
            mean_stopping_time: t / n_trials as f64,
        }
    }
}

/// Seed of trial `i` under master seed `master`; exposed for replay.
pub fn trial_seed(master: u64, i: u64) -> u64 {
    derive_seed(master, i)
}
