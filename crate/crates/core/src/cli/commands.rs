use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde_json::json;

use super::config::{ConfigError, ExperimentKind, RunConfig, Suite};
use super::ExitCode;
use crate::bounds::{
    bernstein_assess, bernstein_radius_sq_observable, kl_uniform_ellipsoids, subgaussian_radius_sq, BoundKind,
    BoundReport,
};
use crate::error::Error;
use crate::experiments::{
    oful_run, regret_comparison, ridge_coverage, LinearModel, RadiusProvider, RidgeBound, RidgeCoverageSpec,
};
use crate::linalg::{max_outer_form, norm_sq, Ellipsoid, SymMatrix};
use crate::stream::{fmt17, ObservationLog};
use crate::verification::{
    check_alpha_sufficiency, check_identities, check_second_moment, check_supermartingale_batch, coverage_experiment,
    derive_seed, lambda_directions, realized_instances, synthetic_instances, tightness_comparison, trial_rng,
    BoundSpec, TightnessCell, TrialSpec,
};

/// Files produced by a command, written together once everything succeeded.
#[derive(Default)]
struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    fn json(&mut self, name: &str, v: &serde_json::Value) {
        let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
        s.push('\n');
        self.add(name, s.into_bytes());
    }

    fn flush(self, dir: Option<&Path>) -> std::io::Result<()> {
        let Some(dir) = dir else { return Ok(()) };
        std::fs::create_dir_all(dir)?;
        for (name, bytes) in self.files {
            std::fs::write(dir.join(name), bytes)?;
        }
        Ok(())
    }
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record(r).expect("in-memory csv");
    }
    w.into_inner().expect("in-memory csv")
}

fn opt17(v: Option<f64>) -> String {
    v.map(fmt17).unwrap_or_default()
}

fn config_errors(err: &mut dyn Write, errs: &[ConfigError]) -> ExitCode {
    for e in errs {
        let _ = writeln!(err, "config error: {e}");
    }
    ExitCode::Config
}

fn runtime(err: &mut dyn Write, e: impl std::fmt::Display) -> ExitCode {
    let _ = writeln!(err, "error: {e}");
    ExitCode::Runtime
}

fn finish(outputs: Outputs, cfg: &RunConfig, err: &mut dyn Write, code: ExitCode) -> ExitCode {
    match outputs.flush(cfg.out_dir.as_deref()) {
        Ok(()) => code,
        Err(e) => runtime(err, e),
    }
}

/// Human-readable report, floats in shortest round-trip form.
pub(crate) fn format_report(r: &BoundReport, t: u64) -> String {
    let kind = match r.kind {
        BoundKind::SubGaussian => "sub_gaussian",
        BoundKind::Bernstein => "bernstein",
    };
    let mut s = format!("bound: {kind}\nt: {t}\n");
    match r.radius_sq {
        Some(v) => s += &format!("radius_sq: {v:?}\n"),
        None => s += "radius_sq: none\n",
    }
    s += &format!("self_norm_sq: {:?}\n", r.self_norm_sq);
    if let Some(c) = r.covers() {
        s += &format!("covered: {c}\n");
    }
    s += &format!("logdet_ratio: {:?}\n", r.logdet_ratio);
    s += &format!("alpha: {:?}\n", r.alpha);
    s += &format!("leading_factor: {:?}\n", r.leading_factor);
    if let (Some(dm), Some(sm)) = (r.data_margin, r.static_margin) {
        s += &format!(
            "burnin: {}\ndata_margin: {dm:?}\nstatic_margin: {sm:?}\n",
            if r.burnin_ok { "ok" } else { "violated" }
        );
    }
    s += &format!("delta_inflated: {}\n", r.delta_inflated);
    s
}

pub(super) fn radius(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> ExitCode {
    let spec = match cfg.bound_spec(false) {
        Ok(s) => s,
        Err(errs) => return config_errors(err, &errs),
    };
    let log = match &cfg.radius.log {
        None => ObservationLog::new(cfg.d),
        Some(path) => {
            let file = match std::fs::File::open(path) {
                Ok(f) => f,
                Err(e) => return config_errors(err, &[ConfigError::new("radius.log", format!("{}: {e}", path.display()))]),
            };
            match ObservationLog::read_csv(file) {
                Ok(l) => l,
                Err(e) => return config_errors(err, &[ConfigError::new("radius.log", e.to_string())]),
            }
        }
    };
    if log.d != cfg.d {
        return config_errors(
            err,
            &[ConfigError::new("radius.log", format!("log has d = {}, config has d = {}", log.d, cfg.d))],
        );
    }
    if let BoundSpec::Bernstein(p) = &spec {
        let bx = match crate::linalg::cholesky(&p.b_x_sq) {
            Ok(f) => f,
            Err(e) => return config_errors(err, &[ConfigError::new("bound.b_x_sq", e.to_string())]),
        };
        for (k, o) in log.rows.iter().enumerate() {
            let row = k + 1;
            if o.w.abs() > p.b_w * (1.0 + 1e-12) {
                let msg = format!("row {row}: |w| = {:?} exceeds b_w = {:?}", o.w.abs(), p.b_w);
                return config_errors(err, &[ConfigError::new("radius.log", msg)]);
            }
            let q = bx.quad_form_inv(&o.x);
            if q > 1.0 + 1e-9 {
                let msg = format!("row {row}: x xᵀ is not dominated by b_x_sq (xᵀB⁻¹x = {q:?})");
                return config_errors(err, &[ConfigError::new("radius.log", msg)]);
            }
        }
    }
    let state = match log.replay(spec.gamma().clone()) {
        Ok(s) => s,
        Err(e) => return runtime(err, e),
    };
    let report = match &spec {
        BoundSpec::SubGaussian(p) => subgaussian_radius_sq(&state, p),
        BoundSpec::Bernstein(p) if p.delta_inflated => match cfg.subgaussian_companion(p) {
            Ok(sg) => bernstein_radius_sq_observable(&state, p, &sg),
            Err(e) => return config_errors(err, &[e]),
        },
        BoundSpec::Bernstein(p) => bernstein_assess(&state, p),
    };
    let report = match report {
        Ok(r) => r,
        Err(Error::GammaSingular) => {
            return config_errors(err, &[ConfigError::new("bound.gamma", "must be positive definite")])
        }
        Err(e) => return runtime(err, e),
    };
    let text = format_report(&report, state.t());
    let _ = out.write_all(text.as_bytes());
    let mut outputs = Outputs::default();
    outputs.json("radius.json", &json!({ "t": state.t(), "report": report }));
    let code = if report.burnin_ok {
        ExitCode::Ok
    } else {
        let _ = writeln!(
            err,
            "burn-in violated: data margin {:?}, static margin {:?}",
            report.data_margin.unwrap_or(f64::NAN),
            report.static_margin.unwrap_or(f64::NAN)
        );
        ExitCode::Burnin
    };
    finish(outputs, cfg, err, code)
}

struct SuiteResult {
    passed: bool,
    line: String,
    summary: serde_json::Value,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

fn suite_seed(cfg: &RunConfig, suite: Suite) -> u64 {
    derive_seed(cfg.seed, suite as u64 + 1)
}

fn trial_spec(cfg: &RunConfig, seed: u64) -> Result<TrialSpec, Vec<ConfigError>> {
    let spec = TrialSpec {
        d: cfg.d,
        stop: cfg.model.stop.clone(),
        noise: cfg.model.noise.clone(),
        covariates: cfg.model.covariates.clone(),
        bound: cfg.bound_spec(true)?,
        seed,
        radius_scale: cfg.verify.radius_scale,
    };
    spec.validate().map_err(|e| vec![ConfigError::new("model", e.to_string())])?;
    Ok(spec)
}

fn random_shape(d: usize, rng: &mut impl Rng) -> SymMatrix {
    let mut m = SymMatrix::scaled_identity(d, 0.1);
    for _ in 0..d {
        let v: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        m.add_outer(&v, 1.0);
    }
    m
}

fn run_suite(cfg: &RunConfig, suite: Suite) -> Result<SuiteResult, Error> {
    let v = &cfg.verify;
    let seed = suite_seed(cfg, suite);
    Ok(match suite {
        Suite::Identities => {
            let r = check_identities(v.n, v.d_max, seed, 1e-9)?;
            SuiteResult {
                passed: r.passed(),
                line: format!(
                    "n={} failures={} max_rel_err_completed={:?} max_rel_err_rearranged={:?}",
                    r.n, r.failures, r.max_rel_err_completed, r.max_rel_err_rearranged
                ),
                summary: serde_json::to_value(&r).expect("serializable"),
                header: vec!["n", "d_max", "tol", "max_rel_err_completed", "max_rel_err_rearranged", "failures"],
                rows: vec![vec![
                    r.n.to_string(),
                    v.d_max.to_string(),
                    fmt17(r.tol),
                    fmt17(r.max_rel_err_completed),
                    fmt17(r.max_rel_err_rearranged),
                    r.failures.to_string(),
                ]],
            }
        }
        Suite::SecondMoment => {
            let tol = (20.0 / (v.n as f64).sqrt()).max(0.02);
            let mut rows = Vec::new();
            let mut worst: f64 = 0.0;
            let mut passed = true;
            for (i, &d) in v.dims.iter().enumerate() {
                let mut rng = trial_rng(seed, i as u64);
                let shape = if d == 1 { SymMatrix::identity(1) } else { random_shape(d, &mut rng) };
                let e = check_second_moment(&shape, v.n, derive_seed(seed, 1000 + i as u64))?;
                let ok = e <= tol;
                passed &= ok;
                worst = worst.max(e);
                rows.push(vec![d.to_string(), v.n.to_string(), fmt17(e), fmt17(tol), ok.to_string()]);
            }
            SuiteResult {
                passed,
                line: format!("n={} worst_rel_frobenius_error={worst:?} tol={tol:?}", v.n),
                summary: json!({ "n": v.n, "tol": tol, "worst_rel_frobenius_error": worst }),
                header: vec!["d", "n", "rel_frobenius_error", "tol", "passed"],
                rows,
            }
        }
        Suite::Kl => kl_suite(cfg, seed)?,
        Suite::Containment => {
            let half = v.instances / 2;
            let mut inst = realized_instances(half, &v.dims, derive_seed(seed, 1))?;
            inst.extend(synthetic_instances(v.instances - half, &v.dims, derive_seed(seed, 2))?);
            let r = check_alpha_sufficiency(&inst)?;
            let rows = r
                .rows
                .iter()
                .map(|row| {
                    let suff = |f: fn(&crate::verification::SufficientCondition) -> bool| {
                        row.sufficient.as_ref().map(|s| f(s).to_string()).unwrap_or_default()
                    };
                    vec![
                        row.d.to_string(),
                        row.synthetic.to_string(),
                        row.admitted.to_string(),
                        fmt17(row.alpha),
                        fmt17(row.max_form),
                        row.contained.to_string(),
                        suff(|s| s.derived),
                        suff(|s| s.printed),
                    ]
                })
                .collect();
            SuiteResult {
                passed: r.passed(),
                line: format!(
                    "admitted={} skipped={} containment_failures={} sufficient_derived={} (not contained {}) sufficient_printed={} (not contained {}) worst_max_form={:?}",
                    r.n_admitted,
                    r.n_skipped,
                    r.n_containment_failures,
                    r.n_sufficient_derived,
                    r.n_derived_not_contained,
                    r.n_sufficient_printed,
                    r.n_printed_not_contained,
                    r.worst_max_form
                ),
                summary: json!({
                    "n_instances": r.n_instances,
                    "n_admitted": r.n_admitted,
                    "n_skipped": r.n_skipped,
                    "n_containment_failures": r.n_containment_failures,
                    "n_sufficient_derived": r.n_sufficient_derived,
                    "n_derived_not_contained": r.n_derived_not_contained,
                    "n_sufficient_printed": r.n_sufficient_printed,
                    "n_printed_not_contained": r.n_printed_not_contained,
                    "worst_max_form": r.worst_max_form,
                }),
                header: vec![
                    "d",
                    "synthetic",
                    "admitted",
                    "alpha",
                    "max_form",
                    "contained",
                    "sufficient_derived",
                    "sufficient_printed",
                ],
                rows,
            }
        }
        Suite::Coverage => {
            let spec = trial_spec(cfg, seed).map_err(|e| Error::Stream(e[0].to_string()))?;
            let r = coverage_experiment(&spec, v.trials)?;
            let kind = match spec.bound {
                BoundSpec::SubGaussian(_) => "sub_gaussian",
                BoundSpec::Bernstein(_) => "bernstein",
            };
            SuiteResult {
                passed: r.certifies(),
                line: format!(
                    "bound={kind} delta={:?} trials={} violations={} burnin_failures={} failure_rate={:?} cp95=[{:?}, {:?}]",
                    r.delta,
                    r.n_trials,
                    r.n_violations,
                    r.n_burnin_failures,
                    r.failure_rate,
                    r.clopper_pearson_95.0,
                    r.clopper_pearson_95.1
                ),
                summary: serde_json::to_value(&r).expect("serializable"),
                header: vec![
                    "bound",
                    "delta",
                    "n_trials",
                    "n_violations",
                    "n_covered",
                    "n_burnin_failures",
                    "failure_rate",
                    "cp95_lo",
                    "cp95_hi",
                    "mean_lhs",
                    "mean_radius_sq",
                    "mean_stopping_time",
                ],
                rows: vec![vec![
                    kind.into(),
                    fmt17(r.delta),
                    r.n_trials.to_string(),
                    r.n_violations.to_string(),
                    r.n_covered.to_string(),
                    r.n_burnin_failures.to_string(),
                    fmt17(r.failure_rate),
                    fmt17(r.clopper_pearson_95.0),
                    fmt17(r.clopper_pearson_95.1),
                    fmt17(r.mean_lhs),
                    fmt17(r.mean_radius_sq),
                    fmt17(r.mean_stopping_time),
                ]],
            }
        }
        Suite::Supermartingale => {
            let spec = trial_spec(cfg, seed).map_err(|e| Error::Stream(e[0].to_string()))?;
            let eps = cfg.bound.eps;
            let lambdas = lambda_directions(&spec, eps, v.lambdas, seed);
            let ests = check_supermartingale_batch(&lambdas, &spec, eps, v.n, derive_seed(seed, 7))?;
            let passed = ests.iter().all(|e| e.within(3.0));
            let worst = ests
                .iter()
                .map(|e| (e.mean - 1.0) / e.std_err.max(f64::MIN_POSITIVE))
                .fold(f64::NEG_INFINITY, f64::max);
            let rows = lambdas
                .iter()
                .zip(&ests)
                .enumerate()
                .map(|(i, (l, e))| {
                    vec![
                        i.to_string(),
                        fmt17(norm_sq(l).sqrt()),
                        fmt17(e.mean),
                        fmt17(e.std_err),
                        e.within(3.0).to_string(),
                    ]
                })
                .collect();
            SuiteResult {
                passed,
                line: format!("lambdas={} n={} eps={eps:?} worst_z={worst:?}", lambdas.len(), v.n),
                summary: json!({ "eps": eps, "n": v.n, "estimates": ests, "worst_z": worst }),
                header: vec!["index", "lambda_norm", "mean", "std_err", "passed"],
                rows,
            }
        }
    })
}

/// Contained pairs `ρ = c + t·L_π B·ball` with `‖L_π⁻¹c‖ + t‖B‖ ≤ 1`, whose KL is
/// `−d log t − log|det B|`; non-contained pairs with the center of `ρ` outside `π`.
fn kl_suite(cfg: &RunConfig, seed: u64) -> Result<SuiteResult, Error> {
    let v = &cfg.verify;
    let mut rows = Vec::new();
    let (mut bad_kl, mut bad_reject, mut worst_gap) = (0usize, 0usize, 0.0f64);
    for i in 0..2 * v.instances {
        let mut rng = trial_rng(seed, i as u64);
        let d = v.dims[i % v.dims.len()];
        let contained = i < v.instances;
        let shape_pi = random_shape(d, &mut rng);
        let pi = Ellipsoid::new(vec![0.0; d], shape_pi.clone())?;
        // B = diag(s)·rotation-free; ‖B‖ = max s
        let s: Vec<f64> = (0..d).map(|_| rng.random_range(0.2..1.0)).collect();
        let smax = s.iter().cloned().fold(0.0, f64::max);
        let t = rng.random_range(0.1..0.9);
        let dir = crate::linalg::unit_sphere_point(d, &mut rng);
        let offset = if contained {
            rng.random_range(0.0..(1.0 - t * smax))
        } else {
            rng.random_range(1.05..2.0)
        };
        let l = pi.shape_factor();
        let c = l.lower_mul(&dir.iter().map(|x| x * offset).collect::<Vec<_>>());
        // Σ_ρ = t² L diag(s²) Lᵀ
        let cols: Vec<Vec<f64>> = (0..d)
            .map(|j| {
                let mut e = vec![0.0; d];
                e[j] = t * s[j];
                l.lower_mul(&e)
            })
            .collect();
        let shape_rho = SymMatrix::from_fn(d, |a, b| (0..d).map(|k| cols[k][a] * cols[k][b]).sum());
        let rho = Ellipsoid::new(c, shape_rho)?;
        let max_form = max_outer_form(&pi, &rho)?;
        let expected = -(d as f64) * t.ln() - s.iter().map(|x| x.ln()).sum::<f64>();
        let (kl, ok) = match kl_uniform_ellipsoids(&rho, &pi) {
            Ok(kl) => {
                let gap = (kl - expected).abs() / expected.abs().max(1.0);
                worst_gap = worst_gap.max(gap);
                (Some(kl), contained && gap <= 1e-9 && max_form <= 1.0 + 1e-9)
            }
            Err(Error::NotContained { .. }) => (None, !contained && max_form > 1.0),
            Err(e) => return Err(e),
        };
        if !ok {
            if contained {
                bad_kl += 1;
            } else {
                bad_reject += 1;
            }
        }
        rows.push(vec![
            d.to_string(),
            contained.to_string(),
            opt17(kl),
            fmt17(expected),
            fmt17(max_form),
            ok.to_string(),
        ]);
    }
    Ok(SuiteResult {
        passed: bad_kl == 0 && bad_reject == 0,
        line: format!(
            "contained_pairs={} mismatches={bad_kl} rejected_pairs={} missed_rejections={bad_reject} worst_rel_gap={worst_gap:?}",
            v.instances, v.instances
        ),
        summary: json!({
            "pairs": v.instances,
            "kl_mismatches": bad_kl,
            "missed_rejections": bad_reject,
            "worst_rel_gap": worst_gap,
        }),
        header: vec!["d", "contained_by_construction", "kl", "expected", "oracle_max_form", "passed"],
        rows,
    })
}

pub(super) fn verify(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> ExitCode {
    let mut suites = cfg.verify.suites.clone();
    suites.dedup();
    if suites.iter().any(|s| matches!(s, Suite::Coverage | Suite::Supermartingale)) {
        if let Err(errs) = trial_spec(cfg, 0) {
            return config_errors(err, &errs);
        }
    }
    let mut outputs = Outputs::default();
    let mut summaries = Vec::new();
    let mut all = true;
    for suite in suites {
        let r = match run_suite(cfg, suite) {
            Ok(r) => r,
            Err(e) => return runtime(err, format!("suite {}: {e}", suite.name())),
        };
        all &= r.passed;
        let _ = writeln!(
            out,
            "{}: {} {}",
            suite.name(),
            if r.passed { "PASS" } else { "FAIL" },
            r.line
        );
        outputs.add(format!("verify_{}.csv", suite.name()), csv_bytes(&r.header, &r.rows));
        summaries.push(json!({ "suite": suite.name(), "passed": r.passed, "details": r.summary }));
    }
    outputs.json(
        "verify_summary.json",
        &json!({ "seed": cfg.seed, "passed": all, "suites": summaries }),
    );
    if !all {
        let _ = writeln!(err, "verification failed");
    }
    finish(outputs, cfg, err, if all { ExitCode::Ok } else { ExitCode::Falsified })
}

fn provider_name(p: &RadiusProvider) -> &'static str {
    match p {
        RadiusProvider::SubGaussian { .. } => "sub_gaussian",
        RadiusProvider::Bernstein { .. } => "bernstein",
        RadiusProvider::Fixed { .. } => "fixed",
    }
}

pub(super) fn experiment(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> ExitCode {
    let x = &cfg.experiment;
    let mut outputs = Outputs::default();
    match x.kind {
        ExperimentKind::Bandit => {
            let env = crate::experiments::BanditEnv {
                arms: x.arms.clone(),
                theta_star: x.theta_star.clone(),
                noise: cfg.model.noise.clone(),
                ridge: x.ridge,
                theta_bound: x.theta_bound.unwrap_or_else(|| norm_sq(&x.theta_star).sqrt()),
            };
            if let Err(e) = env.validate() {
                return config_errors(err, &[ConfigError::new("experiment", e.to_string())]);
            }
            let providers = cfg.providers();
            let means = match regret_comparison(&env, &providers, x.horizon, x.trials, cfg.seed) {
                Ok(m) => m,
                Err(e) => return runtime(err, e),
            };
            let mut runs = Vec::new();
            for (i, (p, mean)) in providers.iter().zip(&means).enumerate() {
                let trace = match oful_run(&env, p, x.horizon, derive_seed(cfg.seed, 0)) {
                    Ok(t) => t,
                    Err(e) => return runtime(err, e),
                };
                let name = format!("bandit_{i}_{}", provider_name(p));
                let mut buf = Vec::new();
                if let Err(e) = trace.write_csv(&mut buf) {
                    return runtime(err, e);
                }
                outputs.add(format!("{name}.csv"), buf);
                outputs.json(&format!("{name}.json"), &trace.metadata_json());
                let _ = writeln!(
                    out,
                    "{name}: cum_regret(first seed)={:?} mean_cum_regret({} seeds)={mean:?}",
                    trace.cum_regret(),
                    x.trials
                );
                runs.push(json!({ "provider": p, "mean_cum_regret": mean }));
            }
            outputs.json(
                "bandit_summary.json",
                &json!({ "seed": cfg.seed, "horizon": x.horizon, "seeds": x.trials, "runs": runs }),
            );
        }
        ExperimentKind::Ridge => {
            let gamma = match cfg.bound.gamma.build(cfg.d) {
                Ok(g) => g,
                Err(e) => return config_errors(err, &[ConfigError::new("bound.gamma", e)]),
            };
            let spec = RidgeCoverageSpec {
                model: LinearModel {
                    theta_star: x.theta_star.clone(),
                    noise: cfg.model.noise.clone(),
                },
                covariates: cfg.model.covariates.clone(),
                gamma,
                bound: match cfg.bound.kind {
                    BoundKind::SubGaussian => RidgeBound::SubGaussian,
                    BoundKind::Bernstein => RidgeBound::Bernstein {
                        eps: cfg.bound.eps,
                        nu: cfg.bound.nu,
                        v_factor: cfg.bound.v_factor,
                    },
                },
                delta: cfg.bound.delta,
                t: x.horizon,
                n_trials: x.trials,
                seed: cfg.seed,
            };
            let r = match ridge_coverage(&spec) {
                Ok(r) => r,
                Err(Error::InvalidParameter { name, reason }) => {
                    return config_errors(err, &[ConfigError::new(name, reason)])
                }
                Err(e) => return runtime(err, e),
            };
            let _ = writeln!(
                out,
                "ridge: trials={} misses={} excluded={} miss_rate={:?} cp95=[{:?}, {:?}] delta={:?}",
                r.n_trials,
                r.n_violations,
                r.n_burnin_failures,
                r.failure_rate,
                r.clopper_pearson_95.0,
                r.clopper_pearson_95.1,
                r.delta
            );
            outputs.add(
                "ridge.csv",
                csv_bytes(
                    &["n_trials", "n_misses", "n_excluded", "miss_rate", "cp95_lo", "cp95_hi", "delta"],
                    &[vec![
                        r.n_trials.to_string(),
                        r.n_violations.to_string(),
                        r.n_burnin_failures.to_string(),
                        fmt17(r.failure_rate),
                        fmt17(r.clopper_pearson_95.0),
                        fmt17(r.clopper_pearson_95.1),
                        fmt17(r.delta),
                    ]],
                ),
            );
            outputs.json("ridge.json", &json!({ "spec": spec, "report": r }));
        }
        ExperimentKind::Tightness => {
            let mut cells = Vec::new();
            for noise in &x.tightness.noises {
                for &t in &x.tightness.ts {
                    cells.push(TightnessCell {
                        d: cfg.d,
                        t,
                        noise: noise.clone(),
                        covariates: cfg.model.covariates.clone(),
                        eps: cfg.bound.eps,
                        nu: cfg.bound.nu,
                        delta: cfg.bound.delta,
                        v_factor: cfg.bound.v_factor,
                        n_trials: x.trials,
                        seed: derive_seed(cfg.seed, cells.len() as u64),
                    });
                }
            }
            let rows = match tightness_comparison(&cells) {
                Ok(r) => r,
                Err(e) => return runtime(err, e),
            };
            for r in &rows {
                let ratio = r.mean_ratio.map_or("none".to_string(), |v| format!("{v:?}"));
                let _ = writeln!(
                    out,
                    "tightness: noise={} t={} ratio={ratio} predicted={:?} burnin_failure_rate={:?}",
                    r.noise, r.t, r.predicted_ratio, r.burnin_failure_rate
                );
            }
            let csv_rows: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.d.to_string(),
                        r.t.to_string(),
                        r.noise.clone(),
                        fmt17(r.eps),
                        fmt17(r.nu),
                        r.n_trials.to_string(),
                        r.n_burnin_pass.to_string(),
                        fmt17(r.burnin_failure_rate),
                        fmt17(r.mean_subg_radius_sq),
                        fmt17(r.mean_bernstein_radius_sq),
                        opt17(r.mean_ratio),
                        fmt17(r.mean_alpha),
                        fmt17(r.predicted_ratio),
                    ]
                })
                .collect();
            outputs.add(
                "tightness.csv",
                csv_bytes(
                    &[
                        "d",
                        "t",
                        "noise",
                        "eps",
                        "nu",
                        "n_trials",
                        "n_burnin_pass",
                        "burnin_failure_rate",
                        "mean_subg_radius_sq",
                        "mean_bernstein_radius_sq",
                        "ratio",
                        "mean_alpha",
                        "predicted_ratio",
                    ],
                    &csv_rows,
                ),
            );
            outputs.json("tightness.json", &json!({ "seed": cfg.seed, "rows": rows }));
        }
    }
    finish(outputs, cfg, err, ExitCode::Ok)
}
