//! Confidence radii for vector-valued self-normalized martingales.
//!
//! Two radii are provided for `‖S_τ‖²_{(V_τ+Γ)⁻¹}` with `S_t = Σ W_k X_k` and
//! `V_t = Σ X_k X_kᵀ`: the classical sub-Gaussian one, driven by a variance
//! proxy, and a Bernstein-type one driven by the conditional variance of
//! bounded noise. Around them sit
//!
//! - [`linalg`]: Cholesky factors with rank-one updates, PSD ordering,
//!   ellipsoids (uniform sampling, exact containment).
//! - [`stream`]: the streaming state `(t, S_t, V_t+Γ)` and stopping rules.
//! - [`bounds`]: both radii, burn-in checks and the closed forms used in
//!   their derivation (KL divergences, completed-square identities).
//! - [`verification`]: a seeded Monte Carlo harness that checks coverage,
//!   the exponential supermartingale inequality, the ellipsoid moment and
//!   nesting facts.
//! - [`experiments`]: ridge regression confidence sets and an optimistic
//!   linear bandit comparing the two radii.
//! - [`cli`]: configuration, subcommands and report emission behind the
//!   `selfnorm` binary.

// `!(x > 0.0)` rejects NaN along with non-positive values; index loops mirror
// the triangular algebra.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bounds;
pub mod cli;
mod error;
pub mod experiments;
pub mod linalg;
pub mod stream;
pub mod verification;

pub use bounds::{
    bernstein_radius_sq, subgaussian_radius_sq, BernsteinParams, BoundKind, BoundReport, BurninStatus,
    SubGaussianParams,
};
pub use error::{Error, Result};
pub use linalg::{CholFactor, Ellipsoid, SymMatrix};
pub use stream::{MartingaleState, StoppingRule};
