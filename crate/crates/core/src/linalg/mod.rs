//! Dense symmetric / positive-definite linear algebra for moderate `d`.
//!
//! Everything here works on plain `Vec<f64>` vectors and row-major dense
//! storage. The pieces are:
//!
//! - [`SymMatrix`]: symmetric storage, PSD ordering, eigenvalues.
//! - [`CholFactor`]: Cholesky factor with cached log-determinant, O(d²)
//!   rank-one updates, triangular solves and Mahalanobis forms.
//! - [`Ellipsoid`]: `{x : (x-c)ᵀ Σ⁻¹ (x-c) ≤ 1}` with uniform sampling and an
//!   exact containment test (trust-region subproblem on the unit ball).

mod cholesky;
mod containment;
mod ellipsoid;
mod matrix;

pub use cholesky::{cholesky, CholFactor};
pub(crate) use cholesky::cholesky_with_floor;
pub use containment::{ellipsoid_contains, max_outer_form, DEFAULT_CONTAINMENT_TOL};
pub use ellipsoid::{sample_uniform_ellipsoid, Ellipsoid};
pub(crate) use ellipsoid::unit_sphere_point;
pub use matrix::{default_psd_tol, psd_order_leq, psd_order_margin, SymMatrix};

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// `y += a·x`
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
