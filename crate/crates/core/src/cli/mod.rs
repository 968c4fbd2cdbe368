//! Command-line front end: `radius`, `verify` and `experiment`.
//!
//! Configuration comes from an optional TOML file (see [`RunConfig`]) with
//! flag overrides on top. The whole config is validated before anything is
//! computed or written. Exit codes: 0 success, 1 I/O or runtime error,
//! 2 invalid config or log, 3 burn-in violated, 4 a verification check failed.

mod commands;
mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{
    BoundConfig, ConfigError, ExperimentConfig, ExperimentKind, MatrixSpec, ModelConfig, RadiusConfig, RunConfig,
    Suite, TightnessConfig, VerifyConfig,
};

use crate::bounds::BoundKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Ok = 0,
    Runtime = 1,
    Config = 2,
    Burnin = 3,
    Falsified = 4,
}

#[derive(Debug, Parser)]
#[command(name = "selfnorm", version, about = "Self-normalized martingale confidence radii")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads; results are identical for every value.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum BoundArg {
    #[value(alias = "sub_gaussian", alias = "sub-gaussian")]
    Subgaussian,
    Bernstein,
}

#[derive(Debug, Args, Default)]
pub struct BoundFlags {
    #[arg(long, value_enum)]
    pub bound: Option<BoundArg>,
    #[arg(long)]
    pub delta: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Replay an observation log and report the confidence radius.
    Radius {
        /// Observation log with header `t,x0,..,w`.
        #[arg(long)]
        log: Option<PathBuf>,
        #[command(flatten)]
        bound: BoundFlags,
    },
    /// Run verification suites.
    Verify {
        #[arg(long, value_enum)]
        suite: Vec<Suite>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        instances: Option<usize>,
        #[command(flatten)]
        bound: BoundFlags,
    },
    /// Run a bandit, ridge-coverage or tightness experiment.
    Experiment {
        #[arg(long, value_enum)]
        kind: Option<ExperimentKind>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        horizon: Option<u64>,
        #[command(flatten)]
        bound: BoundFlags,
    },
}

impl Cli {
    /// Config file (or defaults) with every flag applied.
    pub fn resolve_config(&self) -> Result<RunConfig, ConfigError> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| ConfigError::new("--config", format!("{}: {e}", path.display())))?;
                RunConfig::from_toml(&text)?
            }
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out_dir {
            cfg.out_dir = Some(o.clone());
        }
        if let Some(w) = self.workers {
            cfg.workers = Some(w);
        }
        let bound = match &self.command {
            Command::Radius { log, bound } => {
                if let Some(l) = log {
                    cfg.radius.log = Some(l.clone());
                }
                bound
            }
            Command::Verify {
                suite,
                trials,
                n,
                instances,
                bound,
            } => {
                if !suite.is_empty() {
                    cfg.verify.suites = suite.clone();
                }
                if let Some(t) = trials {
                    cfg.verify.trials = *t;
                }
                if let Some(n) = n {
                    cfg.verify.n = *n;
                }
                if let Some(i) = instances {
                    cfg.verify.instances = *i;
                }
                bound
            }
            Command::Experiment {
                kind,
                trials,
                horizon,
                bound,
            } => {
                if let Some(k) = kind {
                    cfg.experiment.kind = *k;
                }
                if let Some(t) = trials {
                    cfg.experiment.trials = *t;
                }
                if let Some(h) = horizon {
                    cfg.experiment.horizon = *h;
                }
                bound
            }
        };
        if let Some(b) = bound.bound {
            cfg.bound.kind = match b {
                BoundArg::Subgaussian => BoundKind::SubGaussian,
                BoundArg::Bernstein => BoundKind::Bernstein,
            };
        }
        if let Some(d) = bound.delta {
            cfg.bound.delta = d;
        }
        Ok(cfg)
    }
}

/// Parses `args` and runs the command, writing human-readable output to
/// `out` and diagnostics to `err`.
pub fn run_with_args<I, T>(args: I, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { ExitCode::Config as i32 } else { 0 };
            let _ = write!(err, "{e}");
            return code;
        }
    };
    run(&cli, out, err) as i32
}

pub fn run(cli: &Cli, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> ExitCode {
    let cfg = match cli.resolve_config() {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "config error: {e}");
            return ExitCode::Config;
        }
    };
    let errs = cfg.validate();
    if !errs.is_empty() {
        for e in &errs {
            let _ = writeln!(err, "config error: {e}");
        }
        return ExitCode::Config;
    }
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return ExitCode::Runtime;
        }
    };
    pool.install(|| match &cli.command {
        Command::Radius { .. } => commands::radius(&cfg, out, err),
        Command::Verify { .. } => commands::verify(&cfg, out, err),
        Command::Experiment { .. } => commands::experiment(&cfg, out, err),
    })
}
