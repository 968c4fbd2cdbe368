//! Acceptance gate: one check per criterion, one PASS/FAIL line each.
//!
//! Runs as a plain binary (`harness = false`) so the lines always reach the
//! terminal. Exits non-zero when any criterion fails. Sizes and tolerances
//! are the stated ones; wall-clock budgets are checked as part of each line.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use common::*;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use selfnorm::bounds::{kl_uniform_ellipsoids, leading_factor, LeadingFactorMode};
use selfnorm::linalg::{max_outer_form, Ellipsoid};
use selfnorm::verification::{
    check_alpha_sufficiency, check_identities, check_second_moment, check_supermartingale_batch,
    coverage_experiment, lambda_directions, realized_instances, synthetic_instances, tightness_comparison,
    BoundSpec, CovariateModel, NoiseModel, StopSpec, TightnessCell, TrialSpec,
};
use selfnorm::{BernsteinParams, Error, SubGaussianParams, SymMatrix};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn noises() -> Vec<NoiseModel> {
    vec![
        NoiseModel::RademacherScaled { b: 1.0 },
        NoiseModel::TwoPoint { p: 0.05, b: 1.0 },
        NoiseModel::Uniform { b: 1.0 },
        NoiseModel::TruncatedGaussian { s: 0.5, b: 1.0 },
    ]
}

fn covariate_models() -> Vec<CovariateModel> {
    vec![
        CovariateModel::RandomSphere { radius: 1.0 },
        CovariateModel::Ar1 {
            a: vec![vec![0.9, 0.2], vec![-0.2, 0.9]],
            noise_scale: 0.3,
            radius: 1.0,
        },
        CovariateModel::FixedDesign {
            vectors: vec![vec![1.0, 0.0], vec![0.6, 0.8], vec![0.0, -0.5]],
        },
    ]
}

fn identities() -> Outcome {
    let r = check_identities(10_000, 10, 101, 1e-9).unwrap();
    outcome(
        r.passed() && r.n == 10_000,
        format!(
            "{} instances, d ≤ 10, failures {}, max rel err {:.1e} (completed) / {:.1e} (rearranged), tol 1e-9",
            r.n, r.failures, r.max_rel_err_completed, r.max_rel_err_rearranged
        ),
    )
}

fn second_moment() -> Outcome {
    let mut r = rng(202);
    let mut errs = Vec::new();
    for d in [1usize, 2, 3, 5] {
        let shape = if d == 1 { SymMatrix::identity(1) } else { random_psd(&mut r, d, d, 0.2) };
        errs.push((d, check_second_moment(&shape, 1_000_000, 2020 + d as u64).unwrap()));
    }
    let worst = errs.iter().map(|e| e.1).fold(0.0, f64::max);
    let listed: Vec<String> = errs.iter().map(|(d, e)| format!("d={d}: {e:.4}")).collect();
    outcome(worst <= 0.02, format!("n = 10^6, rel Frobenius error {} (limit 0.02)", listed.join(", ")))
}

/// `ρ` shape `L B Lᵀ` with `Σ_π = L Lᵀ` and `B = Q diag(b) Qᵀ`, center at
/// `π`-distance at most `1 − √max b`, so `ρ ⊆ π` and the log-volume ratio is
/// `−Σ log bᵢ`.
fn kl_pairs() -> Outcome {
    let mut r = rng(303);
    let mut worst_rel = 0.0f64;
    let mut contained_ok = 0;
    let mut rejected_ok = 0;
    for i in 0..200 {
        let d = [1usize, 2, 3, 5][i % 4];
        let sigma_pi = random_psd(&mut r, d, d, 0.3);
        let l = dense(&sigma_pi).cholesky().unwrap().l();
        let q = DMatrix::<f64>::from_fn(d, d, |_, _| r.sample(rand_distr::StandardNormal)).qr().q();
        let b: Vec<f64> = (0..d).map(|_| r.random_range(0.05..0.6)).collect();
        let bm = &q * DMatrix::from_diagonal(&DVector::from_column_slice(&b)) * q.transpose();
        let sigma_rho = to_sym(&(&l * bm * l.transpose()));
        let dir = DVector::from_vec(gaussian_vec(&mut r, d));
        let dir = &dir / dir.norm();
        let pi = Ellipsoid::new(vec![0.0; d], sigma_pi).unwrap();
        if i < 100 {
            let bmax = b.iter().cloned().fold(0.0, f64::max);
            let reach = (1.0 - bmax.sqrt()) * r.random_range(0.0..0.999);
            let m = &l * dir * reach;
            let rho = Ellipsoid::new(m.as_slice().to_vec(), sigma_rho).unwrap();
            let expect = -0.5 * b.iter().map(|v| v.ln()).sum::<f64>();
            let kl = kl_uniform_ellipsoids(&rho, &pi).unwrap();
            worst_rel = worst_rel.max((kl - expect).abs() / expect);
            contained_ok += (max_outer_form(&pi, &rho).unwrap() <= 1.0) as u32;
        } else {
            // center itself outside π
            let m = &l * dir * r.random_range(1.05..2.0);
            let rho = Ellipsoid::new(m.as_slice().to_vec(), sigma_rho).unwrap();
            let oracle_out = max_outer_form(&pi, &rho).unwrap() > 1.0;
            let raised = matches!(kl_uniform_ellipsoids(&rho, &pi), Err(Error::NotContained { .. }));
            rejected_ok += (oracle_out && raised) as u32;
        }
    }
    outcome(
        worst_rel <= 1e-9 && contained_ok == 100 && rejected_ok == 100,
        format!(
            "contained pairs: {contained_ok}/100 confirmed, max rel KL error {worst_rel:.1e}; \
             non-contained: {rejected_ok}/100 raised NotContained"
        ),
    )
}

fn supermartingale() -> Outcome {
    let mut cells = 0;
    let mut bad = Vec::new();
    let mut worst_z = f64::NEG_INFINITY;
    let noises = [
        NoiseModel::TwoPoint { p: 0.05, b: 1.0 },
        NoiseModel::RademacherScaled { b: 1.0 },
        NoiseModel::TruncatedGaussian { s: 0.5, b: 1.0 },
    ];
    for (ni, noise) in noises.iter().enumerate() {
        for t in [10u64, 100] {
            let stops = [
                StopSpec::Horizon { t },
                StopSpec::SelfNormAtLeast { threshold: 1.0, t_max: t },
            ];
            for (si, stop) in stops.into_iter().enumerate() {
                let spec = TrialSpec {
                    d: 2,
                    stop: stop.clone(),
                    noise: noise.clone(),
                    covariates: CovariateModel::RandomSphere { radius: 1.0 },
                    bound: BoundSpec::SubGaussian(SubGaussianParams::new(1.0, 0.05, SymMatrix::identity(2)).unwrap()),
                    seed: 0,
                    radius_scale: 1.0,
                };
                let eps = 0.5;
                let seed = 400 + (ni * 4 + t as usize / 100 * 2 + si) as u64;
                let lambdas = lambda_directions(&spec, eps, 20, seed);
                for est in check_supermartingale_batch(&lambdas, &spec, eps, 100_000, seed).unwrap() {
                    cells += 1;
                    let z = (est.mean - 1.0) / est.std_err;
                    worst_z = worst_z.max(z);
                    if !est.within(3.0) {
                        bad.push(format!("{} T={t} {stop:?}: {est:?}", noise.label()));
                    }
                }
            }
        }
    }
    outcome(
        bad.is_empty() && cells == 240,
        format!(
            "{cells} (noise, T, stop, λ) cells at n = 10^5, boundary λ, ε = 0.5; max (mean−1)/se = {worst_z:.2}{}",
            if bad.is_empty() { String::new() } else { format!("; failing: {}", bad.join(" | ")) }
        ),
    )
}

fn model_grid(bound: impl Fn(&NoiseModel, &CovariateModel) -> (BoundSpec, StopSpec)) -> Vec<TrialSpec> {
    let mut specs = Vec::new();
    for (ni, noise) in noises().into_iter().enumerate() {
        for (ci, cov) in covariate_models().into_iter().enumerate() {
            let (b, stop) = bound(&noise, &cov);
            specs.push(TrialSpec {
                d: 2,
                stop,
                noise: noise.clone(),
                covariates: cov,
                bound: b,
                seed: 500 + (ni * 3 + ci) as u64,
                radius_scale: 1.0,
            });
        }
    }
    specs
}

fn coverage_summary(specs: &[TrialSpec], trials: u64) -> (bool, u64, u64, u64, f64, Vec<String>) {
    let (mut ok, mut viol, mut admitted, mut burn, mut worst) = (true, 0, 0, 0, 0.0f64);
    let mut failing = Vec::new();
    for s in specs {
        let r = coverage_experiment(s, trials).unwrap();
        viol += r.n_violations;
        admitted += r.n_trials - r.n_burnin_failures;
        burn += r.n_burnin_failures;
        worst = worst.max(r.clopper_pearson_95.1);
        if !r.certifies() {
            ok = false;
            failing.push(format!(
                "{} {} {:?}: {}/{} cp95 {:.4}",
                s.noise.label(),
                s.covariates.label(),
                s.stop,
                r.n_violations,
                r.n_trials - r.n_burnin_failures,
                r.clopper_pearson_95.1
            ));
        }
    }
    (ok, viol, admitted, burn, worst, failing)
}

fn subgaussian_coverage(delta: f64) -> Outcome {
    let specs = model_grid(|noise, cov| {
        let p = SubGaussianParams::new(noise.sigma_subg_sq(), delta, SymMatrix::identity(2)).unwrap();
        let stop = match cov {
            CovariateModel::FixedDesign { .. } => StopSpec::LogdetGain { c: 4.0, t_max: 400 },
            _ => StopSpec::Horizon { t: 200 },
        };
        (BoundSpec::SubGaussian(p), stop)
    });
    let (ok, viol, admitted, _, worst, failing) = coverage_summary(&specs, 10_000);
    outcome(
        ok,
        format!(
            "δ = {delta}: {} model cells × 10^4 trials, {viol} violations in {admitted}, worst CP95 upper {worst:.5}{}",
            specs.len(),
            if failing.is_empty() { String::new() } else { format!("; failing: {}", failing.join(" | ")) }
        ),
    )
}

fn bernstein_coverage() -> Outcome {
    let mut lines = Vec::new();
    let mut all = true;
    for delta in [0.01, 0.05, 0.1] {
        let specs = model_grid(|noise, cov| {
            let bx = cov.b_x_sq(2);
            let mut p = BernsteinParams::new(
                noise.sigma_var_sq(),
                noise.b_w(),
                bx.clone(),
                SymMatrix::zeros(2),
                bx.clone(),
                0.3,
                0.1,
                delta,
            )
            .unwrap();
            p.v = bx.scale(p.minimal_v_scale() * 1.000001);
            let stop = match cov {
                CovariateModel::FixedDesign { .. } => StopSpec::LogdetGain { c: 8.0, t_max: 6_000 },
                _ => StopSpec::Horizon { t: 1_500 },
            };
            (BoundSpec::Bernstein(p), stop)
        });
        let (ok, viol, admitted, burn, worst, failing) = coverage_summary(&specs, 10_000);
        all &= ok;
        let total = specs.len() as u64 * 10_000;
        lines.push(format!(
            "δ = {delta}: {viol} violations in {admitted} admitted, burn-in failure fraction {:.4}, worst CP95 upper {worst:.5}{}",
            burn as f64 / total as f64,
            if failing.is_empty() { String::new() } else { format!(" failing: {}", failing.join(" | ")) }
        ));
    }
    outcome(all, format!("12 model cells × 10^4 trials per δ; {}", lines.join("; ")))
}

fn containment_sufficiency() -> Outcome {
    let dims = [1, 2, 3, 5];
    let realized = check_alpha_sufficiency(&realized_instances(1_200, &dims, 707).unwrap()).unwrap();
    let synthetic = check_alpha_sufficiency(&synthetic_instances(1_000, &dims, 708).unwrap()).unwrap();
    let admitted = realized.n_admitted + synthetic.n_admitted;
    let failures = realized.n_containment_failures + synthetic.n_containment_failures;
    let implications_broken = realized.n_derived_not_contained
        + synthetic.n_derived_not_contained
        + realized.n_printed_not_contained
        + synthetic.n_printed_not_contained;
    outcome(
        realized.n_admitted >= 1_000 && failures == 0 && implications_broken == 0,
        format!(
            "{admitted} admitted ({} realized, {} synthetic), {failures} containment failures, worst max form {:.4}; \
             scalar condition held in {} (derived) / {} (as printed) instances, never without containment",
            realized.n_admitted,
            synthetic.n_admitted,
            realized.worst_max_form.max(synthetic.worst_max_form),
            realized.n_sufficient_derived + synthetic.n_sufficient_derived,
            realized.n_sufficient_printed + synthetic.n_sufficient_printed,
        ),
    )
}

fn leading_factor_relaxations() -> Outcome {
    let n = 100_000;
    let mut bad = 0;
    for i in 0..=n {
        let a = 100.0 * i as f64 / n as f64;
        let exact = leading_factor(a, 0.0, LeadingFactorMode::Exact);
        let relax = leading_factor(a, 0.0, LeadingFactorMode::QuadraticRelax)
            .min(leading_factor(a, 0.0, LeadingFactorMode::LinearRelax));
        let ok = if i == 0 { exact == relax } else { exact < relax };
        bad += !ok as u32;
    }
    outcome(bad == 0, format!("{} points on [0, 100], {bad} violations", n + 1))
}

fn tightness() -> Outcome {
    let cell = TightnessCell {
        d: 1,
        t: 10_000,
        noise: NoiseModel::TwoPoint { p: 0.05, b: 1.0 },
        covariates: CovariateModel::RandomSphere { radius: 1.0 },
        eps: 0.1,
        nu: 0.1,
        delta: 0.05,
        v_factor: 1.000001,
        n_trials: 200,
        seed: 909,
    };
    let row = tightness_comparison(&[cell]).unwrap().remove(0);
    let ratio = row.mean_ratio.unwrap_or(f64::NAN);
    outcome(
        (0.04..=0.12).contains(&ratio),
        format!(
            "two_point(0.05, 1), Γ = V, T = 10^4, ε = ν = 0.1: mean radius² ratio {ratio:.4} \
             (predicted limit {:.4}, mean α {:.3}, burn-in failure rate {})",
            row.predicted_ratio, row.mean_alpha, row.burnin_failure_rate
        ),
    )
}

fn containment_vs_brute_force() -> Outcome {
    let mut r = rng(1010);
    let (mut compared, mut skipped, mut disagree, mut contained, mut above) = (0, 0, 0, 0, 0);
    for d in [1usize, 2, 3, 5] {
        for _ in 0..1000 {
            let s_out = random_psd(&mut r, d, d, 0.2);
            let s_in = random_psd(&mut r, d, d, 0.05).scale(r.random_range(-4.0f64..0.5).exp());
            let c_out = gaussian_vec(&mut r, d);
            let spread = r.random_range(0.0..1.2);
            let c_in: Vec<f64> = c_out.iter().zip(gaussian_vec(&mut r, d)).map(|(a, b)| a + spread * b).collect();
            let exact = max_outer_form(
                &Ellipsoid::new(c_out.clone(), s_out.clone()).unwrap(),
                &Ellipsoid::new(c_in.clone(), s_in.clone()).unwrap(),
            )
            .unwrap();
            let brute = brute_max_form(&c_out, &s_out, &c_in, &s_in, 256, &mut r);
            above += (brute > exact * (1.0 + 1e-9) + 1e-12) as u32;
            if (exact - 1.0).abs() <= 1e-6 {
                skipped += 1;
                continue;
            }
            compared += 1;
            contained += (exact < 1.0) as u32;
            disagree += ((exact < 1.0) != (brute < 1.0)) as u32;
        }
    }
    outcome(
        disagree == 0 && above == 0,
        format!(
            "4000 instances (d ∈ {{1,2,3,5}}), {compared} with margin > 1e-6 ({contained} contained), \
             {disagree} disagreements, {above} brute-force values above the exact maximum, {skipped} skipped"
        ),
    )
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("run.toml");
    std::fs::write(
        &cfg_path,
        "seed = 11\n[model.noise]\nkind = \"two_point\"\np = 0.1\nb = 1.0\n[model.stop]\nkind = \"horizon\"\nt = 300\n\
         [verify]\nsuites = [\"identities\", \"second-moment\", \"kl\", \"containment\", \"coverage\", \"supermartingale\"]\n\
         n = 20000\ntrials = 3000\ninstances = 200\n\
         [experiment]\ntrials = 4\n[experiment.tightness]\nts = [500, 2000]\n",
    )
    .unwrap();
    let cfg = cfg_path.to_str().unwrap();
    let invocations: Vec<Vec<&str>> = vec![
        vec!["verify"],
        vec!["verify", "--bound", "bernstein"],
        vec!["experiment", "--kind", "bandit", "--horizon", "2000"],
        vec!["experiment", "--kind", "ridge", "--trials", "2000", "--horizon", "300"],
        vec!["experiment", "--kind", "tightness", "--trials", "50"],
    ];
    let mut mismatched = Vec::new();
    let mut files = 0;
    for args in &invocations {
        let mut snapshots = Vec::new();
        for (k, workers) in ["1", "4", "1", "3"].iter().enumerate() {
            let out_dir = tmp.path().join(format!("out_{k}"));
            let _ = std::fs::remove_dir_all(&out_dir);
            let mut full = vec!["selfnorm", "--config", cfg, "--workers", workers, "--out-dir", out_dir.to_str().unwrap()];
            full.extend_from_slice(args);
            let (mut out, mut err) = (Vec::new(), Vec::new());
            let code = selfnorm::cli::run_with_args(full, &mut out, &mut err);
            snapshots.push((code, out, read_dir(&out_dir)));
        }
        files += snapshots[0].2.len();
        if snapshots.iter().any(|s| s != &snapshots[0]) {
            mismatched.push(args.join(" "));
        }
    }
    outcome(
        mismatched.is_empty() && files > 0,
        format!(
            "{} invocations × worker counts 1, 4, 1, 3: {files} output files compared{}",
            invocations.len(),
            if mismatched.is_empty() { ", all byte-identical".to_string() } else { format!("; differing: {}", mismatched.join(" | ")) }
        ),
    )
}

fn read_dir(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .map(|it| {
            it.map(|e| {
                let e = e.unwrap();
                (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap())
            })
            .collect()
        })
        .unwrap_or_default();
    v.sort();
    v
}

fn main() {
    type Check = Box<dyn Fn() -> Outcome>;
    let criteria: Vec<(&str, &str, Duration, Check)> = vec![
        ("1", "completed-square identities", Duration::from_secs(10), Box::new(identities)),
        ("2", "uniform-ellipsoid second moment", Duration::from_secs(60), Box::new(second_moment)),
        ("3", "KL between nested uniform ellipsoids", Duration::from_secs(10), Box::new(kl_pairs)),
        ("4", "Bernstein exponential supermartingale", Duration::from_secs(300), Box::new(supermartingale)),
        ("5a", "sub-Gaussian coverage", Duration::from_secs(300), Box::new(|| subgaussian_coverage(0.01))),
        ("5b", "sub-Gaussian coverage", Duration::from_secs(300), Box::new(|| subgaussian_coverage(0.05))),
        ("5c", "sub-Gaussian coverage", Duration::from_secs(300), Box::new(|| subgaussian_coverage(0.1))),
        ("6", "Bernstein coverage", Duration::from_secs(600), Box::new(bernstein_coverage)),
        ("7", "posterior-in-prior containment", Duration::from_secs(120), Box::new(containment_sufficiency)),
        ("8", "leading-factor relaxations", Duration::from_secs(1), Box::new(leading_factor_relaxations)),
        ("9", "Bernstein vs sub-Gaussian tightness", Duration::from_secs(120), Box::new(tightness)),
        ("10", "containment oracle vs brute force", Duration::from_secs(120), Box::new(containment_vs_brute_force)),
        ("11", "determinism across worker counts", Duration::from_secs(600), Box::new(determinism)),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (id, name, budget, check) in &criteria {
        if !filter.is_empty() && !filter.iter().any(|f| f == id || name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let in_budget = elapsed <= *budget;
        let passed = result.passed && in_budget;
        failed += !passed as u32;
        println!(
            "{} [{id:>3}] {name}: {} ({:.2} s, budget {} s{})",
            if passed { "PASS" } else { "FAIL" },
            result.detail,
            elapsed.as_secs_f64(),
            budget.as_secs(),
            if in_budget { "" } else { ", exceeded" }
        );
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed as usize);
    if failed > 0 {
        std::process::exit(1);
    }
}
