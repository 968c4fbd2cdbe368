//! Applications of the radii: online ridge regression confidence sets and an
//! optimism-based linear bandit.

mod bandit;
mod ridge;

pub use bandit::{oful_run, regret_comparison, BanditEnv, ProviderMode, RadiusProvider, RegretTrace, TraceStep};
pub use ridge::{confidence_ellipsoid, ridge_coverage, LinearModel, RidgeAccumulator, RidgeBound, RidgeCoverageSpec};
