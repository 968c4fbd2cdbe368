//! Exact ellipsoid containment.
//!
//! Inner points are written `c_in + L_in·u` with `‖u‖ ≤ 1`. With
//! `R = L_out⁻¹·L_in` and `r = L_out⁻¹·(c_in − c_out)` the outer quadratic
//! form becomes
//!
//! ```text
//! f(u) = uᵀ M u + 2 gᵀu + k,    M = RᵀR,  g = Rᵀr,  k = ‖r‖²
//! ```
//!
//! a convex quadratic maximized over the unit ball. The maximizer solves
//! `(μI − M)u = g`, `‖u‖ = 1`, `μ ≥ λ_max(M)`; in the eigenbasis of `M` the
//! multiplier is the unique root of the secular equation
//! `Σ ĝᵢ²/(μ − mᵢ)² = 1` on `(λ_max, λ_max + ‖g‖]`. When `g` has no component
//! along the top eigenspace and the remaining sum stays below one at
//! `μ = λ_max` (the "hard case"), the slack is filled along a top eigenvector.

use super::{check_dim, norm_sq, Ellipsoid};
use crate::error::Result;

/// Default slack for boundary ties: "contained" means `max form ≤ 1 + tol`.
pub const DEFAULT_CONTAINMENT_TOL: f64 = 1e-9;

const MULTIPLIER_TOL: f64 = 1e-12;
const MAX_ITER: usize = 500;

/// `max { (x − c_out)ᵀ Σ_out⁻¹ (x − c_out) : x ∈ inner }`.
pub fn max_outer_form(outer: &Ellipsoid, inner: &Ellipsoid) -> Result<f64> {
    check_dim(outer.dim(), inner.dim())?;
    let d = outer.dim();
    if d == 0 {
        return Ok(0.0);
    }
    let lo = outer.shape_factor();
    let li = inner.shape_factor();

    // R = L_out⁻¹ L_in, column by column
    let mut r_mat = vec![0.0; d * d];
    let mut col = vec![0.0; d];
    for j in 0..d {
        for (i, c) in col.iter_mut().enumerate() {
            *c = li.lower(i, j);
        }
        let sol = lo.forward_solve(&col);
        for i in 0..d {
            r_mat[i * d + j] = sol[i];
        }
    }
    let delta: Vec<f64> = inner
        .center()
        .iter()
        .zip(outer.center())
        .map(|(a, b)| a - b)
        .collect();
    let r = lo.forward_solve(&delta);
    let k = norm_sq(&r);

    let m = super::SymMatrix::from_fn(d, |a, b| (0..d).map(|i| r_mat[i * d + a] * r_mat[i * d + b]).sum());
    let g: Vec<f64> = (0..d)
        .map(|a| (0..d).map(|i| r_mat[i * d + a] * r[i]).sum())
        .collect();

    let (evals, evecs) = m.eigen();
    // M is PSD; clamp rounding noise
    let evals: Vec<f64> = evals.into_iter().map(|v| v.max(0.0)).collect();
    let gh: Vec<f64> = evecs.iter().map(|q| super::dot(q, &g)).collect();

    Ok(maximize_on_ball(&evals, &gh) + k)
}

/// `max_{‖u‖≤1} Σ mᵢuᵢ² + 2ĝᵢuᵢ` for `mᵢ ≥ 0` sorted ascending.
fn maximize_on_ball(m: &[f64], gh: &[f64]) -> f64 {
    let d = m.len();
    let m_max = m[d - 1];
    let gnorm = norm_sq(gh).sqrt();
    if gnorm == 0.0 {
        return m_max;
    }
    let top_tol = 1e-13 * m_max.max(1.0);
    let is_top = |i: usize| m_max - m[i] <= top_tol;

    let g_top_sq: f64 = (0..d).filter(|&i| is_top(i)).map(|i| gh[i] * gh[i]).sum();
    let phi_rest_at_max: f64 = (0..d)
        .filter(|&i| !is_top(i))
        .map(|i| (gh[i] / (m_max - m[i])).powi(2))
        .sum();

    if g_top_sq <= (1e-15 * gnorm).powi(2) && phi_rest_at_max <= 1.0 {
        // hard case: μ = λ_max
        let mut value = 0.0;
        for i in (0..d).filter(|&i| !is_top(i)) {
            let ui = gh[i] / (m_max - m[i]);
            value += m[i] * ui * ui + 2.0 * gh[i] * ui;
        }
        let tau = (1.0 - phi_rest_at_max).max(0.0).sqrt();
        return value + m_max * tau * tau + 2.0 * g_top_sq.sqrt() * tau;
    }

    if m_max + gnorm == m_max {
        // bracket below resolution; the maximum lies in [m_max, m_max + 2‖g‖]
        return m_max + 2.0 * gnorm;
    }
    let mu = solve_secular(m, gh, m_max, m_max + gnorm);
    let mut u: Vec<f64> = (0..d).map(|i| gh[i] / (mu - m[i])).collect();
    let n = norm_sq(&u).sqrt();
    if n > 0.0 {
        u.iter_mut().for_each(|v| *v /= n);
    }
    (0..d).map(|i| m[i] * u[i] * u[i] + 2.0 * gh[i] * u[i]).sum()
}

/// Root of `Σ ĝᵢ²/(μ − mᵢ)² = 1` on `(lo, hi]`, via safeguarded Newton on
/// `ψ(μ) = φ(μ)^{-1/2} − 1` (nearly linear in μ).
fn solve_secular(m: &[f64], gh: &[f64], mut lo: f64, mut hi: f64) -> f64 {
    let psi = |mu: f64| -> (f64, f64) {
        let mut phi = 0.0;
        let mut dphi3 = 0.0;
        for (mi, gi) in m.iter().zip(gh) {
            let t = mu - mi;
            if t <= 0.0 {
                return (f64::NEG_INFINITY, f64::INFINITY);
            }
            let q = gi * gi / (t * t);
            phi += q;
            dphi3 += q / t;
        }
        if phi == 0.0 {
            return (f64::INFINITY, 0.0);
        }
        let inv_sqrt = phi.powf(-0.5);
        (inv_sqrt - 1.0, inv_sqrt * dphi3 / phi)
    };

    let mut mu = hi;
    for _ in 0..MAX_ITER {
        let (val, slope) = psi(mu);
        if val == 0.0 {
            return mu;
        }
        if val < 0.0 {
            lo = mu;
        } else {
            hi = mu;
        }
        if hi - lo <= MULTIPLIER_TOL * mu.abs().max(1.0) {
            break;
        }
        let newton = mu - val / slope;
        mu = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    // the upper end keeps ‖u‖ ≤ 1
    hi
}

/// `inner ⊆ outer`, deciding `max form ≤ 1 + tol` exactly.
pub fn ellipsoid_contains(outer: &Ellipsoid, inner: &Ellipsoid, tol: f64) -> Result<bool> {
    Ok(max_outer_form(outer, inner)? <= 1.0 + tol)
}
