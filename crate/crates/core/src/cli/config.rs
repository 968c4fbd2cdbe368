use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bounds::{BernsteinParams, BoundKind, SubGaussianParams};
use crate::error::Error;
use crate::experiments::RadiusProvider;
use crate::linalg::SymMatrix;
use crate::verification::{BoundSpec, CovariateModel, NoiseModel, StopSpec};

/// A validation failure located by its dotted config path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Maps a library error onto a config path under `prefix`.
fn located(prefix: &str, e: Error) -> ConfigError {
    match e {
        Error::InvalidParameter { name, reason } => ConfigError::new(format!("{prefix}.{name}"), reason),
        other => ConfigError::new(prefix, other.to_string()),
    }
}

/// Matrix written as `identity:c`, `diag:[a, b, ..]` or `dense:[[..], ..]`
/// (row-major). Formatting uses shortest round-trip floats, so parsing the
/// printed form gives back the same value.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixSpec {
    Identity(f64),
    Diag(Vec<f64>),
    Dense(Vec<Vec<f64>>),
}

impl MatrixSpec {
    pub fn build(&self, d: usize) -> Result<SymMatrix, String> {
        match self {
            Self::Identity(c) => Ok(SymMatrix::scaled_identity(d, *c)),
            Self::Diag(v) => {
                if v.len() != d {
                    return Err(format!("diag has {} entries, expected {d}", v.len()));
                }
                Ok(SymMatrix::diag(v))
            }
            Self::Dense(rows) => {
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(format!("dense matrix must be {d}x{d}"));
                }
                SymMatrix::from_rows(rows).map_err(|e| e.to_string())
            }
        }
    }
}

impl fmt::Display for MatrixSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        match self {
            Self::Identity(c) => write!(f, "identity:{c:?}"),
            Self::Diag(v) => write!(f, "diag:[{}]", list(v)),
            Self::Dense(rows) => {
                let rows: Vec<String> = rows.iter().map(|r| format!("[{}]", list(r))).collect();
                write!(f, "dense:[{}]", rows.join(", "))
            }
        }
    }
}

impl FromStr for MatrixSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, body) = s
            .split_once(':')
            .ok_or_else(|| format!("`{s}`: expected identity:c, diag:[..] or dense:[[..]]"))?;
        let bad = |e: serde_json::Error| format!("`{s}`: {e}");
        let m = match kind.trim() {
            "identity" => Self::Identity(body.trim().parse::<f64>().map_err(|e| format!("`{s}`: {e}"))?),
            "diag" => Self::Diag(serde_json::from_str(body).map_err(bad)?),
            "dense" => Self::Dense(serde_json::from_str(body).map_err(bad)?),
            other => return Err(format!("unknown matrix kind `{other}`")),
        };
        let finite = match &m {
            Self::Identity(c) => c.is_finite(),
            Self::Diag(v) => v.iter().all(|x| x.is_finite()),
            Self::Dense(r) => r.iter().flatten().all(|x| x.is_finite()),
        };
        if !finite {
            return Err(format!("`{s}`: entries must be finite"));
        }
        Ok(m)
    }
}

impl Serialize for MatrixSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for MatrixSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundConfig {
    pub kind: BoundKind,
    pub delta: f64,
    /// Defaults to the noise model's proxy.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_subg_sq: Option<f64>,
    /// Defaults to the noise model's variance.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_var_sq: Option<f64>,
    /// Defaults to the noise model's bound.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_w: Option<f64>,
    /// Defaults to the covariate model's bound.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_x_sq: Option<MatrixSpec>,
    pub gamma: MatrixSpec,
    /// Defaults to `v_factor` times the smallest static-admissible multiple of `B_X²`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v: Option<MatrixSpec>,
    pub v_factor: f64,
    pub eps: f64,
    pub nu: f64,
    /// `V = Γ` with `α` bounded through the sub-Gaussian radius (failure probability `2δ`).
    pub ridge_recipe: bool,
}

impl Default for BoundConfig {
    fn default() -> Self {
        Self {
            kind: BoundKind::SubGaussian,
            delta: 0.05,
            sigma_subg_sq: None,
            sigma_var_sq: None,
            b_w: None,
            b_x_sq: None,
            gamma: MatrixSpec::Identity(1.0),
            v: None,
            v_factor: 1.000001,
            eps: 0.1,
            nu: 0.1,
            ridge_recipe: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub noise: NoiseModel,
    pub covariates: CovariateModel,
    pub stop: StopSpec,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            noise: NoiseModel::RademacherScaled { b: 1.0 },
            covariates: CovariateModel::RandomSphere { radius: 1.0 },
            stop: StopSpec::Horizon { t: 200 },
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadiusConfig {
    /// Observation log (`t,x0,..,w`); no log means no observations.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Identities,
    SecondMoment,
    Kl,
    Containment,
    Coverage,
    Supermartingale,
}

impl Suite {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Identities => "identities",
            Self::SecondMoment => "second-moment",
            Self::Kl => "kl",
            Self::Containment => "containment",
            Self::Coverage => "coverage",
            Self::Supermartingale => "supermartingale",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub suites: Vec<Suite>,
    /// Monte Carlo sample count (identities, second moment, supermartingale).
    pub n: u64,
    /// Trials for the coverage suite.
    pub trials: u64,
    /// Instances for the containment and kl suites.
    pub instances: usize,
    pub dims: Vec<usize>,
    pub d_max: usize,
    pub lambdas: usize,
    /// Multiplies every coverage radius. Values below 1 probe that the
    /// harness detects violations; real runs use 1.
    pub radius_scale: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            suites: vec![Suite::Identities],
            n: 1000,
            trials: 1000,
            instances: 200,
            dims: vec![1, 2, 3, 5],
            d_max: 10,
            lambdas: 20,
            radius_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Bandit,
    Ridge,
    Tightness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TightnessConfig {
    pub ts: Vec<u64>,
    pub noises: Vec<NoiseModel>,
}

impl Default for TightnessConfig {
    fn default() -> Self {
        Self {
            ts: vec![1000, 10_000],
            noises: vec![
                NoiseModel::TwoPoint { p: 0.05, b: 1.0 },
                NoiseModel::RademacherScaled { b: 1.0 },
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub horizon: u64,
    /// Bandit runs per provider; trials per cell for ridge and tightness.
    pub trials: u64,
    pub arms: Vec<Vec<f64>>,
    pub theta_star: Vec<f64>,
    pub ridge: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_bound: Option<f64>,
    /// Defaults to the sub-Gaussian and Bernstein providers built from `[bound]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub providers: Option<Vec<RadiusProvider>>,
    pub tightness: TightnessConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::Bandit,
            horizon: 1000,
            trials: 1,
            arms: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            theta_star: vec![1.0, 0.9],
            ridge: 1.0,
            theta_bound: None,
            providers: None,
            tightness: TightnessConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    /// Worker threads; unset uses all cores. Outputs do not depend on it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    pub d: usize,
    pub bound: BoundConfig,
    pub model: ModelConfig,
    pub radius: RadiusConfig,
    pub verify: VerifyConfig,
    pub experiment: ExperimentConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: None,
            workers: None,
            d: 2,
            bound: BoundConfig::default(),
            model: ModelConfig::default(),
            radius: RadiusConfig::default(),
            verify: VerifyConfig::default(),
            experiment: ExperimentConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            let path = match e.span() {
                Some(span) => format!("line {}", text[..span.start].lines().count().max(1)),
                None => "config".into(),
            };
            ConfigError::new(path, msg)
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    /// Every problem with the config, not only the first.
    pub fn validate(&self) -> Vec<ConfigError> {
        let mut errs = Vec::new();
        let d = self.d;
        if d == 0 {
            errs.push(ConfigError::new("d", "must be at least 1"));
            return errs;
        }
        if self.workers == Some(0) {
            errs.push(ConfigError::new("workers", "must be at least 1"));
        }
        let b = &self.bound;
        for (name, v) in [("delta", b.delta), ("eps", b.eps), ("nu", b.nu)] {
            if !(v > 0.0 && v < 1.0) {
                errs.push(ConfigError::new(format!("bound.{name}"), format!("{v} not in (0, 1)")));
            }
        }
        if !(b.v_factor >= 1.0) {
            errs.push(ConfigError::new("bound.v_factor", "must be at least 1"));
        }
        let mut matrix = |path: &str, m: &Option<MatrixSpec>| {
            if let Some(m) = m {
                if let Err(e) = m.build(d) {
                    errs.push(ConfigError::new(path, e));
                }
            }
        };
        matrix("bound.gamma", &Some(b.gamma.clone()));
        matrix("bound.b_x_sq", &b.b_x_sq);
        matrix("bound.v", &b.v);
        if let Err(e) = self.model.noise.validate() {
            errs.push(located("model", e));
        }
        if let Err(e) = self.model.covariates.validate(d) {
            errs.push(located("model", e));
        }
        let v = &self.verify;
        if v.n == 0 {
            errs.push(ConfigError::new("verify.n", "must be at least 1"));
        }
        if v.trials == 0 {
            errs.push(ConfigError::new("verify.trials", "must be at least 1"));
        }
        if v.dims.is_empty() || v.dims.contains(&0) {
            errs.push(ConfigError::new("verify.dims", "must be a non-empty list of positive dimensions"));
        }
        if v.d_max == 0 {
            errs.push(ConfigError::new("verify.d_max", "must be at least 1"));
        }
        if !(v.radius_scale >= 0.0 && v.radius_scale.is_finite()) {
            errs.push(ConfigError::new("verify.radius_scale", "must be finite and non-negative"));
        }
        let x = &self.experiment;
        if x.trials == 0 {
            errs.push(ConfigError::new("experiment.trials", "must be at least 1"));
        }
        if x.kind == ExperimentKind::Bandit {
            if x.arms.is_empty() {
                errs.push(ConfigError::new("experiment.arms", "at least one arm required"));
            }
            if x.arms.iter().any(|a| a.len() != x.theta_star.len()) {
                errs.push(ConfigError::new("experiment.arms", "arm length must match theta_star"));
            }
            if !(x.ridge > 0.0) {
                errs.push(ConfigError::new("experiment.ridge", "must be positive"));
            }
        }
        if x.kind == ExperimentKind::Ridge && x.theta_star.len() != d {
            errs.push(ConfigError::new("experiment.theta_star", format!("needs length {d}")));
        }
        if x.kind == ExperimentKind::Tightness {
            if x.tightness.ts.is_empty() || x.tightness.noises.is_empty() {
                errs.push(ConfigError::new("experiment.tightness", "grid must be non-empty"));
            }
            for (i, n) in x.tightness.noises.iter().enumerate() {
                if let Err(e) = n.validate() {
                    errs.push(located(&format!("experiment.tightness.noises[{i}]"), e));
                }
            }
        }
        errs
    }

    /// Bound parameters, with unset fields taken from the model when `model` is
    /// given. Without a model every field the bound needs must be present.
    pub fn bound_spec(&self, use_model: bool) -> Result<BoundSpec, Vec<ConfigError>> {
        let d = self.d;
        let b = &self.bound;
        let noise = use_model.then_some(&self.model.noise);
        let mut errs = Vec::new();
        let gamma = match b.gamma.build(d) {
            Ok(g) => g,
            Err(e) => return Err(vec![ConfigError::new("bound.gamma", e)]),
        };
        let mut need = |path: &'static str, v: Option<f64>, fallback: Option<f64>| {
            v.or(fallback).unwrap_or_else(|| {
                errs.push(ConfigError::new(path, "required"));
                f64::NAN
            })
        };
        match b.kind {
            BoundKind::SubGaussian => {
                let s = need("bound.sigma_subg_sq", b.sigma_subg_sq, noise.map(NoiseModel::sigma_subg_sq));
                if !errs.is_empty() {
                    return Err(errs);
                }
                SubGaussianParams::new(s, b.delta, gamma)
                    .map(BoundSpec::SubGaussian)
                    .map_err(|e| vec![located("bound", e)])
            }
            BoundKind::Bernstein => {
                let var = need("bound.sigma_var_sq", b.sigma_var_sq, noise.map(NoiseModel::sigma_var_sq));
                let b_w = need("bound.b_w", b.b_w, noise.map(NoiseModel::b_w));
                let b_x_sq = match (&b.b_x_sq, use_model) {
                    (Some(m), _) => m.build(d).map_err(|e| ConfigError::new("bound.b_x_sq", e)),
                    (None, true) => Ok(self.model.covariates.b_x_sq(d)),
                    (None, false) => Err(ConfigError::new("bound.b_x_sq", "required")),
                };
                let b_x_sq = match b_x_sq {
                    Ok(m) => m,
                    Err(e) => {
                        errs.push(e);
                        SymMatrix::identity(d)
                    }
                };
                if !errs.is_empty() {
                    return Err(errs);
                }
                let build = || -> Result<BernsteinParams, Error> {
                    let mut p = if b.ridge_recipe {
                        BernsteinParams::ridge(var, b_w, b_x_sq.clone(), gamma.clone(), b.eps, b.nu, b.delta)?
                    } else {
                        let v0 = b_x_sq.clone();
                        BernsteinParams::new(var, b_w, b_x_sq.clone(), gamma.clone(), v0, b.eps, b.nu, b.delta)?
                    };
                    if !b.ridge_recipe {
                        p.v = match &b.v {
                            Some(m) => {
                                let v = m.build(d).map_err(|e| crate::error::invalid("v", e))?;
                                crate::linalg::cholesky(&v).map_err(|_| crate::error::invalid("v", "must be positive definite"))?;
                                v
                            }
                            None => b_x_sq.scale(p.minimal_v_scale() * b.v_factor),
                        };
                    }
                    Ok(p)
                };
                build().map(BoundSpec::Bernstein).map_err(|e| vec![located("bound", e)])
            }
        }
    }

    /// Sub-Gaussian companion parameters for the observable-`α` route.
    pub fn subgaussian_companion(&self, p: &BernsteinParams) -> Result<SubGaussianParams, ConfigError> {
        let s = self.bound.sigma_subg_sq.unwrap_or(p.b_w * p.b_w);
        SubGaussianParams::new(s, p.delta, p.gamma.clone()).map_err(|e| located("bound", e))
    }

    pub fn providers(&self) -> Vec<RadiusProvider> {
        self.experiment.providers.clone().unwrap_or_else(|| {
            vec![
                RadiusProvider::SubGaussian { delta: self.bound.delta },
                RadiusProvider::Bernstein {
                    delta: self.bound.delta,
                    eps: self.bound.eps,
                    nu: self.bound.nu,
                    v_factor: self.bound.v_factor,
                },
            ]
        })
    }
}
