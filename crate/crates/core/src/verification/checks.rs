use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{derive_seed, trial_rng, Simulator, TrialSpec};
use crate::bounds::{eval_z_completed, eval_z_linear};
use crate::error::{Error, Result};
use crate::linalg::{dot, sample_uniform_ellipsoid, Ellipsoid, SymMatrix};
use crate::stream::MartingaleState;

const CHUNK: u64 = 1024;

/// Sums `f(i)` over `0..n` in fixed-size chunks; the summation order, and so
/// the result, does not depend on the thread count.
fn chunked_sum<T, F>(n: u64, zero: T, f: F, add: fn(&mut T, &T)) -> Result<T>
where
    T: Clone + Send + Sync,
    F: Fn(u64, &mut T) -> Result<()> + Sync,
{
    let parts: Vec<T> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| -> Result<T> {
            let mut acc = zero.clone();
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                f(i, &mut acc)?;
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = zero;
    for p in &parts {
        add(&mut total, p);
    }
    Ok(total)
}

#[allow(clippy::ptr_arg)] // matches the accumulator type of `chunked_sum`
fn add_vec(a: &mut Vec<f64>, b: &Vec<f64>) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub n: u64,
    /// Worst relative gap between `⟨λ,S⟩ − ½‖λ‖²_V` and the regularized completed square.
    pub max_rel_err_completed: f64,
    /// Worst relative gap between the two sides of the regularized/unregularized rearrangement.
    pub max_rel_err_rearranged: f64,
    pub failures: u64,
    pub tol: f64,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

fn random_instance(rng: &mut impl Rng, d_max: usize) -> Result<(MartingaleState, Vec<f64>)> {
    let d = rng.random_range(1..=d_max);
    let mut g = SymMatrix::zeros(d);
    for _ in 0..rng.random_range(0..=d) {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        g.add_outer(&v, rng.random_range(0.1..2.0));
    }
    let mut state = MartingaleState::new(d, g)?;
    for _ in 0..(d + rng.random_range(0..3 * d)) {
        let x: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        state.observe(&x, rng.random_range(-2.0..2.0))?;
    }
    let lambda: Vec<f64> = (0..d).map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal)).collect();
    Ok((state, lambda))
}

/// Checks the completed-square identities on `n` random instances with
/// `d ≤ d_max`. Gaps are relative to the magnitude of the terms involved.
pub fn check_identities(n: u64, d_max: usize, seed: u64, tol: f64) -> Result<IdentityReport> {
    let (a, b, f) = chunked_sum(
        n,
        (0.0f64, 0.0f64, 0u64),
        |i, acc| {
            let mut rng = trial_rng(seed, i);
            let (state, lambda) = random_instance(&mut rng, d_max)?;
            let chol = state.gram_chol()?;
            let center = chol.solve(state.s());
            let v = state.v_t();
            let scale = 1.0
                + dot(&lambda, state.s()).abs()
                + 0.5 * state.gram().quad_form(&lambda)
                + 0.5 * dot(state.s(), &center);
            let z = eval_z_linear(&lambda, &state)?;
            let e1 = (z - eval_z_completed(&lambda, &state)?).abs() / scale;

            // ‖S‖²_{V⁻¹} − ‖λ − V⁻¹S‖²_V against the regularized right side.
            let vchol = crate::linalg::cholesky(&v).map_err(|_| Error::Singular)?;
            let vc = vchol.solve(state.s());
            let dv: Vec<f64> = lambda.iter().zip(&vc).map(|(l, c)| l - c).collect();
            let lhs = dot(state.s(), &vc) - v.quad_form(&dv);
            let dg: Vec<f64> = lambda.iter().zip(&center).map(|(l, c)| l - c).collect();
            let rhs = dot(state.s(), &center) - state.gram().quad_form(&dg) + state.regularizer().quad_form(&lambda);
            let scale2 = scale + 0.5 * dot(state.s(), &vc);
            let e2 = (lhs - rhs).abs() / (2.0 * scale2);

            acc.0 = acc.0.max(e1);
            acc.1 = acc.1.max(e2);
            acc.2 += (e1 > tol || e2 > tol || !e1.is_finite() || !e2.is_finite()) as u64;
            Ok(())
        },
        |t, p| {
            t.0 = t.0.max(p.0);
            t.1 = t.1.max(p.1);
            t.2 += p.2;
        },
    )?;
    Ok(IdentityReport {
        n,
        max_rel_err_completed: a,
        max_rel_err_rearranged: b,
        failures: f,
        tol,
    })
}

/// `‖Ê UUᵀ − Σ/(d+2)‖_F / ‖Σ/(d+2)‖_F` from `n` uniform draws on
/// `{xᵀΣ⁻¹x ≤ 1}`. With `n = 0` the empirical moment is `0` and the error `1`.
pub fn check_second_moment(shape: &SymMatrix, n: u64, seed: u64) -> Result<f64> {
    let e = Ellipsoid::new(vec![0.0; shape.dim()], shape.clone())?;
    let d = shape.dim();
    let sum = chunked_sum(
        n,
        vec![0.0; d * d],
        |i, acc| {
            let mut rng = trial_rng(seed, i);
            let u = sample_uniform_ellipsoid(&e, &mut rng);
            for a in 0..d {
                for b in 0..d {
                    acc[a * d + b] += u[a] * u[b];
                }
            }
            Ok(())
        },
        add_vec,
    )?;
    let target = crate::bounds::uniform_ellipsoid_second_moment(shape);
    let denom = (n.max(1)) as f64;
    let emp = SymMatrix::from_fn(d, |a, b| 0.5 * (sum[a * d + b] + sum[b * d + a]) / denom);
    Ok((&emp - &target).frobenius_norm() / target.frobenius_norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupermartingaleEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub n: u64,
}

impl SupermartingaleEstimate {
    /// `mean ≤ 1 + k·std_err`.
    pub fn within(&self, k: f64) -> bool {
        self.mean <= 1.0 + k * self.std_err
    }
}

fn lambda_domain(spec: &TrialSpec, lambda: &[f64], eps: f64) -> Result<()> {
    crate::linalg::check_dim(spec.d, lambda.len())?;
    let norm_sq = spec.noise.b_w().powi(2) * spec.covariates.b_x_sq(spec.d).quad_form(lambda);
    if norm_sq > eps * eps {
        return Err(Error::LambdaOutOfDomain { norm_sq, limit: eps * eps });
    }
    Ok(())
}

/// Monte Carlo estimate of `E exp(⟨λ,S_τ⟩ − σ²_{var,ε}‖λ‖²_{V_τ}/2)` with `σ²_var`,
/// `B_W`, `B_X²` taken from the spec's noise and covariate models and `τ`
/// from its stopping rule. Path `i` uses `trial_rng(seed, i)`.
pub fn check_supermartingale(
    lambda: &[f64],
    spec: &TrialSpec,
    eps: f64,
    n: u64,
    seed: u64,
) -> Result<SupermartingaleEstimate> {
    Ok(check_supermartingale_batch(&[lambda.to_vec()], spec, eps, n, seed)?[0])
}

/// [`check_supermartingale`] for several `λ` on shared paths.
pub fn check_supermartingale_batch(
    lambdas: &[Vec<f64>],
    spec: &TrialSpec,
    eps: f64,
    n: u64,
    seed: u64,
) -> Result<Vec<SupermartingaleEstimate>> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(crate::error::invalid("eps", format!("{eps} not in (0, 1)")));
    }
    for l in lambdas {
        lambda_domain(spec, l, eps)?;
    }
    let rule = spec.stopping_rule()?;
    let sig = spec.noise.sigma_var_sq() / (1.0 - eps);
    let k = lambdas.len();
    let sums = chunked_sum(
        n,
        vec![0.0; 2 * k],
        |i, acc| {
            let mut sim = Simulator::new(spec.d, &spec.covariates, &spec.noise, trial_rng(seed, i));
            let mut state = MartingaleState::new(spec.d, spec.bound.gamma().clone())?;
            while !rule.should_stop(&state) {
                let (x, w) = sim.step();
                state.observe(&x, w)?;
            }
            let v = state.v_t();
            for (j, l) in lambdas.iter().enumerate() {
                let m = (dot(l, state.s()) - 0.5 * sig * v.quad_form(l)).exp();
                acc[2 * j] += m;
                acc[2 * j + 1] += m * m;
            }
            Ok(())
        },
        add_vec,
    )?;
    Ok((0..k)
        .map(|j| {
            let nf = n as f64;
            let mean = sums[2 * j] / nf;
            let var = if n > 1 {
                ((sums[2 * j + 1] - nf * mean * mean) / (nf - 1.0)).max(0.0)
            } else {
                0.0
            };
            SupermartingaleEstimate {
                mean,
                std_err: (var / nf).sqrt(),
                n,
            }
        })
        .collect())
}

/// `count` random directions scaled onto the boundary `‖λ‖²_{B_X²B_W²} = ε²`.
pub fn lambda_directions(spec: &TrialSpec, eps: f64, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let bx = spec.covariates.b_x_sq(spec.d);
    let bw2 = spec.noise.b_w().powi(2);
    (0..count)
        .map(|i| {
            let mut rng = trial_rng(derive_seed(seed, 0x1a3b), i as u64);
            let u = crate::linalg::unit_sphere_point(spec.d, &mut rng);
            let s = eps / (bw2 * bx.quad_form(&u)).sqrt() * (1.0 - 1e-12);
            u.into_iter().map(|v| v * s).collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::SubGaussianParams;
    use crate::verification::{BoundSpec, CovariateModel, NoiseModel, StopSpec};

    fn spec(t: u64) -> TrialSpec {
        TrialSpec {
            d: 1,
            stop: StopSpec::Horizon { t },
            noise: NoiseModel::TwoPoint { p: 0.05, b: 1.0 },
            covariates: CovariateModel::RandomSphere { radius: 1.0 },
            bound: BoundSpec::SubGaussian(SubGaussianParams::new(1.0, 0.1, SymMatrix::identity(1)).unwrap()),
            seed: 1,
            radius_scale: 1.0,
        }
    }

    #[test]
    fn zero_lambda_is_exactly_one() {
        let est = check_supermartingale(&[0.0], &spec(100), 0.5, 1000, 3).unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.std_err, 0.0);
    }

    #[test]
    fn out_of_domain_lambda_is_rejected() {
        let eps: f64 = 0.5;
        let l = (1.01f64).sqrt() * eps;
        let err = check_supermartingale(&[l], &spec(10), eps, 10, 0).unwrap_err();
        assert!(matches!(err, Error::LambdaOutOfDomain { .. }));
    }

    #[test]
    fn boundary_lambda_two_point() {
        let s = spec(100);
        let lambdas = lambda_directions(&s, 0.5, 2, 4);
        for est in check_supermartingale_batch(&lambdas, &s, 0.5, 20_000, 8).unwrap() {
            assert!(est.within(3.0), "{est:?}");
        }
    }

    #[test]
    fn second_moment_closed_forms() {
        assert_eq!(check_second_moment(&SymMatrix::identity(2), 0, 0).unwrap(), 1.0);
        let err = check_second_moment(&SymMatrix::identity(1), 200_000, 1).unwrap();
        assert!(err < 0.01, "{err}");
    }

    #[test]
    fn identities_hold() {
        let r = check_identities(500, 6, 7, 1e-9).unwrap();
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn deterministic_across_pool_sizes() {
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| check_second_moment(&SymMatrix::diag(&[1.0, 4.0]), 10_000, 5).unwrap())
        };
        assert_eq!(run(1).to_bits(), run(4).to_bits());
    }
}
