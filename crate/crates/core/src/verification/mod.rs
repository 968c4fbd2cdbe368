//! Monte Carlo harness for the bounds.
//!
//! Processes are simulated so that `X_k` is generated before `W_k` at every
//! step; noise is a martingale difference sequence with known conditional
//! variance and a.s. bound. Every experiment is seeded: trial `i` of an
//! experiment with master seed `m` runs on its own ChaCha stream derived
//! from `(m, i)`, so results do not depend on how trials are scheduled
//! across threads.

mod checks;
mod covariates;
mod noise;
mod rng;
mod stats;
mod sufficiency;
mod tightness;
mod trial;

pub use checks::{
    check_identities, check_second_moment, check_supermartingale, check_supermartingale_batch,
    lambda_directions, IdentityReport, SupermartingaleEstimate,
};
pub use covariates::{CovariateModel, CovariateStream};
pub use noise::NoiseModel;
pub use rng::{derive_seed, trial_rng, TrialRng};
pub use stats::{clopper_pearson, mean_and_std_err};
pub use sufficiency::{
    check_alpha_sufficiency, realized_instances, sufficient_condition, synthetic_instances,
    SufficiencyInstance, SufficiencyReport, SufficiencyRow, SufficientCondition,
};
pub use tightness::{tightness_comparison, TightnessCell, TightnessRow};
pub use trial::{
    coverage_experiment, run_trial, trial_seed, BoundSpec, CoverageReport, Simulator, StopSpec, TrialOutcome,
    TrialSpec,
};
