//! Confidence radii for self-normalized martingales and the closed forms
//! behind them.
//!
//! Sub-Gaussian radius (noise with variance proxy `σ²_subG`):
//!
//! ```text
//! ‖S_τ‖²_{(V_τ+Γ)⁻¹} ≤ σ²_subG · [ log det(V_τ+Γ)/det Γ + 2 log(1/δ) ]
//! ```
//!
//! Bernstein radius (bounded noise `|W| ≤ B_W`, `XXᵀ ⪯ B_X²`, conditional
//! variance `σ²_var`), valid once `V_τ+Γ ⪰ e(1+ν)²V ⪰ (1+ν)²ε⁻¹(d+2)B_W²B_X²`:
//!
//! ```text
//! ‖S_τ‖²_{(V_τ+Γ)⁻¹} ≤ (1+α)²/((1+2α)(1−ε)) · σ²_var · [ log det(V_τ+Γ)/det V + 2 log(1/δ) ]
//! α = ( √e(1+ν)·‖S_τ‖_{(V_τ+Γ)⁻¹V(V_τ+Γ)⁻¹} / (ν√(d+2)) − 1 ) ∨ 0
//! ```
//!
//! The Bernstein quantities are stated for unit `σ²_{var,ε} = σ²_var/(1−ε)`.
//! For general variance the data are rescaled first: `α` is evaluated on
//! `S_τ/σ_{var,ε}` and the static burn-in condition on `B_W/σ_{var,ε}`. With
//! `σ²_{var,ε} = 1` this is exactly the formula above.
//!
//! Failure probabilities are passed as `δ`; every exponent uses
//! `u = log(1/δ)`.

use std::f64::consts::E;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{
    check_dim, cholesky, default_psd_tol, dot, ellipsoid_contains, max_outer_form, psd_order_margin,
    CholFactor, Ellipsoid, SymMatrix, DEFAULT_CONTAINMENT_TOL,
};
use crate::stream::MartingaleState;

fn check_unit_interval(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("{v} not in (0, 1)")))
    }
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("{v} must be positive and finite")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubGaussianParams {
    pub sigma_subg_sq: f64,
    pub delta: f64,
    pub gamma: SymMatrix,
}

impl SubGaussianParams {
    pub fn new(sigma_subg_sq: f64, delta: f64, gamma: SymMatrix) -> Result<Self> {
        check_positive("sigma_subg_sq", sigma_subg_sq)?;
        check_unit_interval("delta", delta)?;
        gamma.check_psd(default_psd_tol(&gamma))?;
        Ok(Self {
            sigma_subg_sq,
            delta,
            gamma,
        })
    }

    pub fn dim(&self) -> usize {
        self.gamma.dim()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernsteinParams {
    pub sigma_var_sq: f64,
    pub b_w: f64,
    pub b_x_sq: SymMatrix,
    pub gamma: SymMatrix,
    pub v: SymMatrix,
    pub eps: f64,
    pub nu: f64,
    pub delta: f64,
    /// Set by [`BernsteinParams::ridge`]: `α` is meant to be controlled
    /// through the sub-Gaussian bound, so the overall failure probability is
    /// `2δ`.
    #[serde(default)]
    pub delta_inflated: bool,
}

impl BernsteinParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        sigma_var_sq: f64,
        b_w: f64,
        b_x_sq: SymMatrix,
        gamma: SymMatrix,
        v: SymMatrix,
        eps: f64,
        nu: f64,
        delta: f64,
    ) -> Result<Self> {
        check_positive("sigma_var_sq", sigma_var_sq)?;
        check_positive("b_w", b_w)?;
        if sigma_var_sq > b_w * b_w * (1.0 + 1e-12) {
            return Err(invalid(
                "sigma_var_sq",
                format!("{sigma_var_sq} exceeds B_W² = {}", b_w * b_w),
            ));
        }
        check_unit_interval("eps", eps)?;
        check_unit_interval("nu", nu)?;
        check_unit_interval("delta", delta)?;
        let d = v.dim();
        check_dim(d, b_x_sq.dim())?;
        check_dim(d, gamma.dim())?;
        cholesky(&b_x_sq).map_err(|_| invalid("b_x_sq", "must be positive definite"))?;
        cholesky(&v).map_err(|_| invalid("v", "must be positive definite"))?;
        gamma.check_psd(default_psd_tol(&gamma))?;
        Ok(Self {
            sigma_var_sq,
            b_w,
            b_x_sq,
            gamma,
            v,
            eps,
            nu,
            delta,
            delta_inflated: false,
        })
    }

    /// Ridge-regression recipe: `V = Γ`, with `α` to be controlled by the
    /// sub-Gaussian bound at the cost of failure probability `2δ`.
    #[allow(clippy::too_many_arguments)]
    pub fn ridge(
        sigma_var_sq: f64,
        b_w: f64,
        b_x_sq: SymMatrix,
        gamma: SymMatrix,
        eps: f64,
        nu: f64,
        delta: f64,
    ) -> Result<Self> {
        let mut p = Self::new(sigma_var_sq, b_w, b_x_sq, gamma.clone(), gamma, eps, nu, delta)?;
        p.delta_inflated = true;
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.v.dim()
    }

    /// `σ²_{var,ε} = σ²_var / (1 − ε)`.
    pub fn sigma_var_eps_sq(&self) -> f64 {
        self.sigma_var_sq / (1.0 - self.eps)
    }

    /// `B_W²` in unit-variance coordinates, `B_W² / σ²_{var,ε}`.
    pub fn b_w_sq_unit(&self) -> f64 {
        self.b_w * self.b_w / self.sigma_var_eps_sq()
    }

    /// `e(1+ν)²·V`.
    pub fn data_threshold(&self) -> SymMatrix {
        self.v.scale(E * (1.0 + self.nu).powi(2))
    }

    /// `(1+ν)²ε⁻¹(d+2)·B_W²·B_X²` (unit-variance `B_W`).
    pub fn static_threshold(&self) -> SymMatrix {
        let d = self.dim() as f64;
        self.b_x_sq
            .scale((1.0 + self.nu).powi(2) / self.eps * (d + 2.0) * self.b_w_sq_unit())
    }

    /// Smallest `c` such that `V = c·B_X²` passes the static condition.
    pub fn minimal_v_scale(&self) -> f64 {
        (self.dim() as f64 + 2.0) * self.b_w_sq_unit() / (self.eps * E)
    }
}

/// Which of the two burn-in inequalities hold, with their eigenvalue margins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BurninStatus {
    /// `V_τ+Γ ⪰ e(1+ν)²V`
    pub data_ok: bool,
    /// `e(1+ν)²V ⪰ (1+ν)²ε⁻¹(d+2)B_W²B_X²`
    pub static_ok: bool,
    pub data_margin: f64,
    pub static_margin: f64,
}

impl BurninStatus {
    pub fn ok(&self) -> bool {
        self.data_ok && self.static_ok
    }
}

impl fmt::Display for BurninStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "data condition {} (margin {}), static condition {} (margin {})",
            if self.data_ok { "holds" } else { "fails" },
            self.data_margin,
            if self.static_ok { "holds" } else { "fails" },
            self.static_margin
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    #[serde(alias = "subgaussian")]
    SubGaussian,
    Bernstein,
}

/// Output of a radius evaluation. Diagnostics that are undefined for the
/// state at hand (e.g. before `V_t+Γ` is invertible) are `NaN`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    /// Right-hand side of the bound; `None` when burn-in fails.
    pub radius_sq: Option<f64>,
    pub alpha: f64,
    pub leading_factor: f64,
    /// `log det(V_τ+Γ) − log det(Γ)` (sub-Gaussian) or `− log det(V)` (Bernstein).
    pub logdet_ratio: f64,
    pub burnin_ok: bool,
    pub data_margin: Option<f64>,
    pub static_margin: Option<f64>,
    /// Realized `‖S_τ‖²_{(V_τ+Γ)⁻¹}`.
    pub self_norm_sq: f64,
    pub delta_inflated: bool,
}

impl BoundReport {
    /// `Some(lhs ≤ radius²)` when a radius exists.
    pub fn covers(&self) -> Option<bool> {
        self.radius_sq.map(|r| self.self_norm_sq <= r)
    }

    pub fn burnin_status(&self) -> Option<BurninStatus> {
        match (self.data_margin, self.static_margin) {
            (Some(dm), Some(sm)) => Some(BurninStatus {
                data_ok: self.burnin_ok || dm >= 0.0,
                static_ok: self.burnin_ok || sm >= 0.0,
                data_margin: dm,
                static_margin: sm,
            }),
            _ => None,
        }
    }
}

fn check_regularizer(state: &MartingaleState, gamma: &SymMatrix) -> Result<()> {
    check_dim(state.dim(), gamma.dim())?;
    if state.regularizer() != gamma {
        return Err(invalid("gamma", "does not match the state's regularizer"));
    }
    Ok(())
}

/// Sub-Gaussian radius `σ²_subG·[log det(V_τ+Γ)/det Γ + 2 log(1/δ)]`.
pub fn subgaussian_radius_sq(state: &MartingaleState, p: &SubGaussianParams) -> Result<BoundReport> {
    check_regularizer(state, &p.gamma)?;
    let gamma_logdet = cholesky(&p.gamma).map_err(|_| Error::GammaSingular)?.logdet();
    let logdet_ratio = state.gram_logdet()? - gamma_logdet;
    let radius_sq = p.sigma_subg_sq * (logdet_ratio + 2.0 * (1.0 / p.delta).ln());
    Ok(BoundReport {
        kind: BoundKind::SubGaussian,
        radius_sq: Some(radius_sq),
        alpha: 0.0,
        leading_factor: 1.0,
        logdet_ratio,
        burnin_ok: true,
        data_margin: None,
        static_margin: None,
        self_norm_sq: state.self_norm_sq()?,
        delta_inflated: false,
    })
}

/// Both sides of the unregularized deviation bound
/// `‖S‖²_{V⁻¹} − ‖S‖²_{V⁻¹ΓV⁻¹} ≤ σ²·[log det V/det Γ + 2 log(1/δ)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemarkBound {
    pub lhs: f64,
    pub rhs: f64,
}

impl RemarkBound {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs
    }
}

pub fn subgaussian_remark_bound(state: &MartingaleState, p: &SubGaussianParams) -> Result<RemarkBound> {
    check_dim(state.dim(), p.dim())?;
    let v_chol = cholesky(&state.v_t()).map_err(|_| Error::Singular)?;
    let gamma_logdet = cholesky(&p.gamma).map_err(|_| Error::GammaSingular)?.logdet();
    remark_bound_from_parts(&v_chol, state.s(), &p.gamma, gamma_logdet, p)
}

fn remark_bound_from_parts(
    v_chol: &CholFactor,
    s: &[f64],
    gamma: &SymMatrix,
    gamma_logdet: f64,
    p: &SubGaussianParams,
) -> Result<RemarkBound> {
    let y = v_chol.solve(s);
    let lhs = dot(s, &y) - gamma.quad_form(&y);
    let rhs = p.sigma_subg_sq * (v_chol.logdet() - gamma_logdet + 2.0 * (1.0 / p.delta).ln());
    Ok(RemarkBound { lhs, rhs })
}

/// `α` from a squared cross norm in unit-variance coordinates.
pub fn alpha_from_cross_norm_sq(cross_norm_sq: f64, d: usize, nu: f64) -> f64 {
    let num = E.sqrt() * (1.0 + nu) * cross_norm_sq.max(0.0).sqrt();
    (num / (nu * (d as f64 + 2.0).sqrt()) - 1.0).max(0.0)
}

/// `α = (√e(1+ν)‖S_τ‖_{(V_τ+Γ)⁻¹V(V_τ+Γ)⁻¹}/(ν√(d+2)) − 1) ∨ 0`, evaluated on
/// the state as given (i.e. already in unit-variance coordinates).
pub fn bernstein_alpha(state: &MartingaleState, v: &SymMatrix, nu: f64) -> Result<f64> {
    Ok(alpha_from_cross_norm_sq(state.cross_norm_sq(v)?, state.dim(), nu))
}

/// `α` for general `σ²_var`: the cross norm of `S_τ/σ_{var,ε}`.
pub fn scaled_alpha(state: &MartingaleState, p: &BernsteinParams) -> Result<f64> {
    let cross = state.cross_norm_sq(&p.v)? / p.sigma_var_eps_sq();
    Ok(alpha_from_cross_norm_sq(cross, state.dim(), p.nu))
}

pub fn burnin_check(state: &MartingaleState, p: &BernsteinParams) -> Result<BurninStatus> {
    check_dim(state.dim(), p.dim())?;
    let data = p.data_threshold();
    let data_margin = psd_order_margin(&data, state.gram());
    let static_margin = psd_order_margin(&p.static_threshold(), &data);
    Ok(BurninStatus {
        data_ok: data_margin >= -default_psd_tol(state.gram()),
        static_ok: static_margin >= -default_psd_tol(&data),
        data_margin,
        static_margin,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeadingFactorMode {
    Exact,
    QuadraticRelax,
    LinearRelax,
}

/// `(1+α)²/((1+2α)(1−ε))`, or one of its upper relaxations
/// `(1+α²)/(1−ε)` and `(1+α/2)/(1−ε)`.
pub fn leading_factor(alpha: f64, eps: f64, mode: LeadingFactorMode) -> f64 {
    let core = match mode {
        LeadingFactorMode::Exact => (1.0 + alpha).powi(2) / (1.0 + 2.0 * alpha),
        LeadingFactorMode::QuadraticRelax => 1.0 + alpha * alpha,
        LeadingFactorMode::LinearRelax => 1.0 + 0.5 * alpha,
    };
    core / (1.0 - eps)
}

/// Evaluates the Bernstein bound. Never fails on burn-in: a failed burn-in
/// yields `burnin_ok = false` and `radius_sq = None`.
pub fn bernstein_assess(state: &MartingaleState, p: &BernsteinParams) -> Result<BoundReport> {
    check_regularizer(state, &p.gamma)?;
    let status = burnin_check(state, p)?;
    let v_logdet = cholesky(&p.v)?.logdet();
    let (alpha, logdet_ratio, self_norm_sq) = if state.is_pd() {
        (
            scaled_alpha(state, p)?,
            state.gram_logdet()? - v_logdet,
            state.self_norm_sq()?,
        )
    } else {
        (f64::NAN, f64::NAN, f64::NAN)
    };
    let lf = leading_factor(alpha, p.eps, LeadingFactorMode::Exact);
    let radius_sq = status
        .ok()
        .then(|| lf * p.sigma_var_sq * (logdet_ratio + 2.0 * (1.0 / p.delta).ln()));
    Ok(BoundReport {
        kind: BoundKind::Bernstein,
        radius_sq,
        alpha,
        leading_factor: lf,
        logdet_ratio,
        burnin_ok: status.ok(),
        data_margin: Some(status.data_margin),
        static_margin: Some(status.static_margin),
        self_norm_sq,
        delta_inflated: p.delta_inflated,
    })
}

/// Bernstein radius; [`Error::BurninViolated`] when either burn-in
/// inequality fails.
pub fn bernstein_radius_sq(state: &MartingaleState, p: &BernsteinParams) -> Result<BoundReport> {
    let report = bernstein_assess(state, p)?;
    if report.burnin_ok {
        Ok(report)
    } else {
        Err(Error::BurninViolated(
            report.burnin_status().expect("bernstein reports carry margins"),
        ))
    }
}

/// Upper bound on `α` that uses no noise values: the cross norm is bounded by
/// `λ_max((V_τ+Γ)^{-1/2} V (V_τ+Γ)^{-1/2})·‖S_τ‖²_{(V_τ+Γ)⁻¹}` and the latter
/// by the sub-Gaussian radius. Valid on the sub-Gaussian event, hence `2δ`.
pub fn alpha_upper_via_subgaussian(
    state: &MartingaleState,
    p: &BernsteinParams,
    subg: &SubGaussianParams,
) -> Result<f64> {
    let chol = state.gram_chol()?;
    let d = state.dim();
    // W = L⁻¹ V L⁻ᵀ
    let mut cols = vec![vec![0.0; d]; d];
    let mut e = vec![0.0; d];
    for (j, col) in cols.iter_mut().enumerate() {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[j] = 1.0;
        let lt_inv_e = chol.backward_solve(&e);
        *col = chol.forward_solve(&p.v.mul_vec(&lt_inv_e));
    }
    let w = SymMatrix::from_fn(d, |i, j| 0.5 * (cols[j][i] + cols[i][j]));
    let lam_max = w.max_eigenvalue().max(0.0);
    let subg_radius = subgaussian_radius_sq(state, subg)?
        .radius_sq
        .expect("sub-Gaussian reports always carry a radius");
    let cross_upper = lam_max * subg_radius / p.sigma_var_eps_sq();
    Ok(alpha_from_cross_norm_sq(cross_upper, d, p.nu))
}

/// Bernstein radius with `α` replaced by [`alpha_upper_via_subgaussian`];
/// computable without access to `S_τ`. The report is flagged
/// `delta_inflated`.
pub fn bernstein_radius_sq_observable(
    state: &MartingaleState,
    p: &BernsteinParams,
    subg: &SubGaussianParams,
) -> Result<BoundReport> {
    let mut report = bernstein_assess(state, p)?;
    report.delta_inflated = true;
    if !report.burnin_ok {
        return Ok(report);
    }
    let alpha = alpha_upper_via_subgaussian(state, p, subg)?;
    let lf = leading_factor(alpha, p.eps, LeadingFactorMode::Exact);
    report.alpha = alpha;
    report.leading_factor = lf;
    report.radius_sq = Some(lf * p.sigma_var_sq * (report.logdet_ratio + 2.0 * (1.0 / p.delta).ln()));
    Ok(report)
}

/// `Z(λ) = ⟨λ, S_t⟩ − ½‖λ‖²_{V_t}`.
pub fn eval_z_linear(lambda: &[f64], state: &MartingaleState) -> Result<f64> {
    check_dim(state.dim(), lambda.len())?;
    Ok(dot(lambda, state.s()) - 0.5 * state.v_t().quad_form(lambda))
}

/// `½‖S‖²_{(V+Γ)⁻¹} − ½‖λ − (V+Γ)⁻¹S‖²_{V+Γ} + ½‖λ‖²_Γ`.
pub fn eval_z_completed(lambda: &[f64], state: &MartingaleState) -> Result<f64> {
    check_dim(state.dim(), lambda.len())?;
    let chol = state.gram_chol()?;
    let center = chol.solve(state.s());
    let diff: Vec<f64> = lambda.iter().zip(&center).map(|(a, b)| a - b).collect();
    Ok(0.5 * dot(state.s(), &center) - 0.5 * state.gram().quad_form(&diff)
        + 0.5 * state.regularizer().quad_form(lambda))
}

/// `½‖S‖²_{V⁻¹} − ½‖λ − V⁻¹S‖²_V` (unregularized completed square; needs
/// `V_t ≻ 0`).
pub fn eval_z_completed_unregularized(lambda: &[f64], state: &MartingaleState) -> Result<f64> {
    check_dim(state.dim(), lambda.len())?;
    let v = state.v_t();
    let chol = cholesky(&v).map_err(|_| Error::Singular)?;
    let center = chol.solve(state.s());
    let diff: Vec<f64> = lambda.iter().zip(&center).map(|(a, b)| a - b).collect();
    Ok(0.5 * dot(state.s(), &center) - 0.5 * v.quad_form(&diff))
}

/// `tr(A⁻¹B)` for PD `A` given by its factor.
fn trace_inv_product(a: &CholFactor, b: &SymMatrix) -> f64 {
    let d = b.dim();
    let mut col = vec![0.0; d];
    (0..d)
        .map(|j| {
            for (i, c) in col.iter_mut().enumerate() {
                *c = b.get(i, j);
            }
            a.solve(&col)[j]
        })
        .sum()
}

/// `KL(N(m, Σ_ρ) ‖ N(0, Σ_π)) = ½[tr(Σ_π⁻¹Σ_ρ − I) + mᵀΣ_π⁻¹m + log det Σ_π/det Σ_ρ]`.
pub fn kl_gaussian(mean_rho: &[f64], sigma_rho: &SymMatrix, sigma_pi: &SymMatrix) -> Result<f64> {
    let d = sigma_pi.dim();
    check_dim(d, sigma_rho.dim())?;
    check_dim(d, mean_rho.len())?;
    let pi = cholesky(sigma_pi).map_err(|_| Error::Singular)?;
    let rho = cholesky(sigma_rho).map_err(|_| Error::Singular)?;
    let tr = trace_inv_product(&pi, sigma_rho);
    let kl = 0.5 * (tr - d as f64 + pi.quad_form_inv(mean_rho) + pi.logdet() - rho.logdet());
    Ok(kl.max(0.0))
}

/// KL between uniform distributions on nested ellipsoids,
/// `½ log det Σ_π / det Σ_ρ`. [`Error::NotContained`] unless `ρ ⊆ π`.
pub fn kl_uniform_ellipsoids(rho: &Ellipsoid, pi: &Ellipsoid) -> Result<f64> {
    let max_form = max_outer_form(pi, rho)?;
    if max_form > 1.0 + DEFAULT_CONTAINMENT_TOL {
        return Err(Error::NotContained { max_form });
    }
    Ok((0.5 * (pi.logdet_shape() - rho.logdet_shape())).max(0.0))
}

/// `E UUᵀ = Σ/(d+2)` for `U` uniform on `{xᵀΣ⁻¹x ≤ 1}`.
pub fn uniform_ellipsoid_second_moment(shape: &SymMatrix) -> SymMatrix {
    shape.scale(1.0 / (shape.dim() as f64 + 2.0))
}

/// The uniform-ellipsoid posterior/prior pair of the Bernstein argument, in
/// unit-variance coordinates:
/// `ρ`: center `(1+α)⁻¹(V_τ+Γ)⁻¹S_τ/σ_{var,ε}`, shape `(d+2)(V_τ+Γ)⁻¹`;
/// `π`: center `0`, shape `e⁻¹(d+2)V⁻¹`.
pub fn bernstein_priors(state: &MartingaleState, p: &BernsteinParams) -> Result<(Ellipsoid, Ellipsoid)> {
    check_dim(state.dim(), p.dim())?;
    let d = state.dim() as f64;
    let chol = state.gram_chol()?;
    let alpha = scaled_alpha(state, p)?;
    let scale = 1.0 / ((1.0 + alpha) * p.sigma_var_eps_sq().sqrt());
    let center: Vec<f64> = chol.solve(state.s()).into_iter().map(|v| v * scale).collect();
    let rho = Ellipsoid::new(center, chol.inverse().scale(d + 2.0))?;
    let pi = Ellipsoid::new(vec![0.0; state.dim()], cholesky(&p.v)?.inverse().scale((d + 2.0) / E))?;
    Ok((rho, pi))
}

/// Whether `ρ ⊆ π` for [`bernstein_priors`].
pub fn priors_nested(state: &MartingaleState, p: &BernsteinParams) -> Result<bool> {
    let (rho, pi) = bernstein_priors(state, p)?;
    ellipsoid_contains(&pi, &rho, DEFAULT_CONTAINMENT_TOL)
}

/// Both sides of the Gaussian-prior inequality (unit variance proxy)
///
/// ```text
/// ‖S‖²_{(V+Γ)⁻¹} + ‖S‖²_{(V+Γ)⁻¹Γ(V+Γ)⁻¹} − ‖S‖²_{(V+Γ)⁻¹Σ_π⁻¹(V+Γ)⁻¹}
///     ≤ tr(Σ_π⁻¹Σ_ρ + V Σ_ρ − I) + log det Σ_π/det Σ_ρ + 2 log(1/δ)
/// ```
///
/// With `Σ_ρ = (V+Γ)⁻¹`, `Σ_π = Γ⁻¹` it collapses to the sub-Gaussian radius.
pub fn gaussian_prior_inequality(
    state: &MartingaleState,
    sigma_rho: &SymMatrix,
    sigma_pi: &SymMatrix,
    delta: f64,
) -> Result<RemarkBound> {
    let d = state.dim();
    check_dim(d, sigma_rho.dim())?;
    check_dim(d, sigma_pi.dim())?;
    let chol = state.gram_chol()?;
    let pi = cholesky(sigma_pi).map_err(|_| Error::Singular)?;
    let rho = cholesky(sigma_rho).map_err(|_| Error::Singular)?;
    let y = chol.solve(state.s());
    let lhs = dot(state.s(), &y) + state.regularizer().quad_form(&y) - pi.quad_form_inv(&y);
    let v_t = state.v_t();
    let tr_v_rho: f64 = (0..d)
        .map(|i| (0..d).map(|k| v_t.get(i, k) * sigma_rho.get(k, i)).sum::<f64>())
        .sum();
    let rhs = trace_inv_product(&pi, sigma_rho) + tr_v_rho - d as f64 + pi.logdet() - rho.logdet()
        + 2.0 * (1.0 / delta).ln();
    Ok(RemarkBound { lhs, rhs })
}

/// Plug-in `mean(w²)`. For experiments only; radii always take `σ²_var` as a
/// parameter.
pub fn plug_in_variance(ws: &[f64]) -> f64 {
    if ws.is_empty() {
        return 0.0;
    }
    ws.iter().map(|w| w * w).sum::<f64>() / ws.len() as f64
}
