//! Acceptance criteria, one pass/fail line each. Run with
//! `cargo test -p consensus-accel --test acceptance`; the process exits
//! nonzero when any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use consensus_accel::experiment::{connected_sample, run_pipeline, ExperimentOutcome, TrialRecord};
use consensus_accel::filter::{
    chebyshev_interval_filter, chebyshev_interval_optimum, design_minimax_filter, newton_baseline_filter,
    oracle_minimax_filter, predicted_spectral_radius, DesignProblem, FilterPolynomial,
};
use consensus_accel::seed::Stream;
use consensus_accel::spectral::{density_from_spectra, matrix_spectrum, GridSpec, MatrixKind, SupportRegion};
use consensus_accel::weights::{consensus_projector, Scheme, WeightMatrix};
use consensus_accel::{run_experiment, ExperimentConfig, ExperimentResult, GraphModel, Method};
use nalgebra::DMatrix;

type Verdict = Result<String, String>;

fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn uniform(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn design(points: Vec<f64>, degree: usize) -> FilterPolynomial {
    let region = SupportRegion::from_points(points, 1e-3, 0.0).unwrap();
    design_minimax_filter(&DesignProblem { region, degree }).unwrap()
}

/// The region `[0.2, 1.6]` of `L̂_R` maps to `[-0.6, 0.8]` under `W = I - L̂_R`.
const INTERVAL: (f64, f64) = (-0.6, 0.8);

fn chebyshev_closed_form() -> Verdict {
    let clock = Instant::now();
    let (lo, hi) = INTERVAL;
    let points = uniform(lo, hi, 400);
    let mut worst_eps = 0.0f64;
    let mut worst_value = 0.0f64;
    let mut per_degree = Vec::new();
    for d in 1..=8 {
        let p = design(points.clone(), d);
        let exact_eps = chebyshev_interval_optimum(lo, hi, d);
        let exact = chebyshev_interval_filter(lo, hi, d).unwrap();
        let rel_eps = (p.achieved_eps() - exact_eps).abs() / exact_eps;
        let rel_value = points
            .iter()
            .map(|&x| (p.evaluate(x) - exact.evaluate(x)).abs())
            .fold(0.0, f64::max)
            / exact_eps;
        worst_eps = worst_eps.max(rel_eps);
        worst_value = worst_value.max(rel_value);
        per_degree.push(format!("d{d}:{rel_eps:.1e}/{rel_value:.1e}"));
    }
    let seconds = clock.elapsed().as_secs_f64();
    verdict(
        worst_eps <= 1e-6 && worst_value <= 1e-6 && seconds < 1.0,
        format!(
            "max rel eps gap {worst_eps:.2e}, max rel value gap {worst_value:.2e} (tol 1e-6), {seconds:.3} s (eps/value {})",
            per_degree.join(" ")
        ),
    )
}

/// Longest alternating-sign run of residuals at least `eps - tol` in magnitude.
fn alternations(p: &FilterPolynomial, points: &[f64], tol: f64) -> usize {
    let eps = p.achieved_eps();
    let mut count = 0;
    let mut last = 0.0;
    for &x in points {
        let r = p.evaluate(x);
        if r.abs() >= eps - tol && r.signum() != last {
            count += 1;
            last = r.signum();
        }
    }
    count
}

fn equioscillation() -> Verdict {
    let mut failures = Vec::new();
    let mut slowest = 0.0f64;
    let mut designs = 0;
    for (lo, hi) in [INTERVAL, (-0.9, 0.3), (-0.2, 0.9), (-0.95, 0.94)] {
        let points = uniform(lo, hi, 400);
        for d in 1..=10 {
            let clock = Instant::now();
            let p = design(points.clone(), d);
            slowest = slowest.max(clock.elapsed().as_secs_f64());
            designs += 1;
            let n = alternations(&p, &points, 1e-7);
            if n < d + 1 {
                failures.push(format!("[{lo},{hi}] d{d}: {n} alternations"));
            }
        }
    }
    verdict(
        failures.is_empty() && slowest < 1.0,
        format!(
            "{designs} designs, {} short of d+1 alternations {:?}, slowest design {slowest:.3} s",
            failures.len(),
            failures
        ),
    )
}

/// `p(W) - J_ℓ` eigensolved in the symmetric frame `D_ℓ^{1/2} (·) D_ℓ^{-1/2}`,
/// which is a similarity for both schemes.
fn dense_radius(p: &FilterPolynomial, wm: &WeightMatrix) -> f64 {
    let n = wm.dim();
    let w = wm.to_dense();
    let coeffs = p.p_monomial().unwrap();
    let id = DMatrix::<f64>::identity(n, n);
    let mut pw = &id * coeffs[coeffs.len() - 1];
    for &a in coeffs.iter().rev().skip(1) {
        pw = &w * pw + &id * a;
    }
    let dev = pw - consensus_projector(wm.ell()).unwrap().to_dense();
    let root: Vec<f64> = wm.ell().iter().map(|v| v.sqrt()).collect();
    let sym = DMatrix::from_fn(n, n, |i, j| dev[(i, j)] * root[i] / root[j]);
    let asym = (&sym - sym.transpose()).amax();
    assert!(asym <= 1e-10 * sym.amax().max(1.0), "similarity frame not symmetric: {asym:e}");
    ((&sym + sym.transpose()) * 0.5).symmetric_eigenvalues().amax()
}

fn spectral_radius_identity() -> Verdict {
    let clock = Instant::now();
    let model: GraphModel = serde_json::from_str(r#"{"kind":"erdos-renyi","n":50,"theta":0.2}"#).unwrap();
    let mut worst = 0.0f64;
    let mut checks = 0;
    for i in 0..20 {
        let g = connected_sample(&model, 31, Stream::Trial, i).unwrap();
        let (scheme, alpha) = if i % 2 == 0 {
            let s = matrix_spectrum(&g, MatrixKind::Laplacian).unwrap();
            (Scheme::Laplacian, 2.0 / (s.values()[1] + s.max()))
        } else {
            (Scheme::RowNormalizedLaplacian, 1.0)
        };
        let wm = scheme.build(&g, alpha).unwrap();
        let s = wm.spectrum().unwrap();
        let mut filters = vec![FilterPolynomial::plain(), newton_baseline_filter(&s, 3).unwrap()];
        for d in [2, 4, 6] {
            filters.push(oracle_minimax_filter(&s, 0.05, d).unwrap());
        }
        for p in &filters {
            let predicted = predicted_spectral_radius(p, &s).unwrap();
            worst = worst.max((predicted - dense_radius(p, &wm)).abs());
            checks += 1;
        }
    }
    let seconds = clock.elapsed().as_secs_f64();
    verdict(
        worst <= 1e-8 && seconds < 30.0,
        format!("{checks} filter/graph pairs, max |predicted - dense| {worst:.2e} (tol 1e-8), {seconds:.1} s"),
    )
}

const ER_CONFIG: &str = r#"
seed = 20240
output_dir = "unused"
schemes = ["laplacian", "row-normalized-laplacian"]
methods = ["minimax-lp", "newton-baseline", "oracle-minimax"]
degrees = [1, 2, 3, 4, 5, 6]
mc_realizations = 20
trials = 10
horizon_factor = 40
[model]
kind = "erdos-renyi"
n = 500
theta = 0.05
"#;

const SBM_CONFIG: &str = r#"
seed = 20241
output_dir = "unused"
schemes = ["laplacian", "row-normalized-laplacian"]
methods = ["minimax-lp"]
degrees = [1, 2, 3, 4, 5, 6]
mc_realizations = 20
trials = 10
horizon_factor = 40
[model]
kind = "lattice-sbm"
dims = [2, 3]
m = 50
theta0 = 0.15
thetas = [0.09, 0.06]
"#;

struct Run {
    outcome: ExperimentOutcome,
    seconds: f64,
}

fn pipeline(text: &str) -> Run {
    let cfg = ExperimentConfig::from_toml(text).unwrap();
    let clock = Instant::now();
    let outcome = run_pipeline(&cfg).unwrap();
    Run {
        outcome,
        seconds: clock.elapsed().as_secs_f64(),
    }
}

fn record(run: &Run, scheme: Scheme, method: Method, degree: usize, trial: usize) -> &TrialRecord {
    run.outcome
        .result
        .trials
        .iter()
        .find(|r| r.scheme == scheme && r.method == method && r.degree == degree && r.trial == trial)
        .expect("cell present")
}

const RNL: Scheme = Scheme::RowNormalizedLaplacian;

fn oracle_parity(er: &Run) -> Verdict {
    let trials = er.outcome.config.trials;
    let mut ok = er.seconds < 600.0;
    let mut detail = Vec::new();
    for d in 1..=6 {
        let mut hits = 0;
        let mut worst = 0.0f64;
        for t in 0..trials {
            let mm = record(er, RNL, Method::MinimaxLp, d, t).predicted_rate;
            let or = record(er, RNL, Method::OracleMinimax, d, t).predicted_rate;
            let gap = (mm - or).abs() / or.abs();
            worst = worst.max(gap);
            if gap <= 0.1 {
                hits += 1;
            }
        }
        ok &= hits >= 9;
        detail.push(format!("d{d} {hits}/{trials} (max gap {:.1}%)", 100.0 * worst));
    }
    verdict(ok, format!("{}, pipeline {:.1} s", detail.join(", "), er.seconds))
}

fn baseline_dominance(er: &Run) -> Verdict {
    let trials = er.outcome.config.trials;
    let mut wins = 0;
    let mut cells = 0;
    for d in 2..=6 {
        for t in 0..trials {
            let mm = record(er, RNL, Method::MinimaxLp, d, t).predicted_rate;
            let nb = record(er, RNL, Method::NewtonBaseline, d, t).predicted_rate;
            cells += 1;
            if mm <= nb {
                wins += 1;
            }
        }
    }
    let frac = wins as f64 / cells as f64;
    verdict(frac >= 0.9, format!("minimax-lp <= newton-baseline in {wins}/{cells} cells ({:.0}%)", 100.0 * frac))
}

fn scheme_ordering(runs: &[(&str, &Run)]) -> Verdict {
    let mut ok = true;
    let mut detail = Vec::new();
    let mut seconds = 0.0;
    for (name, run) in runs {
        let trials = run.outcome.config.trials;
        let mut seeds = 0;
        for t in 0..trials {
            let faster = (1..=6).all(|d| {
                record(run, RNL, Method::MinimaxLp, d, t).predicted_rate
                    < record(run, Scheme::Laplacian, Method::MinimaxLp, d, t).predicted_rate
            });
            if faster {
                seeds += 1;
            }
        }
        ok &= seeds >= 9;
        seconds += run.seconds;
        detail.push(format!("{name} {seeds}/{trials} seeds"));
    }
    ok &= seconds < 600.0;
    verdict(ok, format!("row-normalized faster at every degree: {}, {seconds:.1} s", detail.join(", ")))
}

fn simulation_consistency(runs: &[(&str, &Run)]) -> Verdict {
    let mut total = 0;
    let mut bad = Vec::new();
    let mut worst = 0.0f64;
    for (name, run) in runs {
        for r in run.outcome.result.trials.iter().filter(|r| r.method != Method::Plain) {
            total += 1;
            let gap = (r.measured_rate - r.predicted_rate).abs() / r.predicted_rate.abs();
            if !(gap <= 0.1) {
                bad.push(format!(
                    "{name}/{}/{}/d{}/t{} {:.1}%",
                    r.scheme.name(),
                    r.method.name(),
                    r.degree,
                    r.trial,
                    100.0 * gap
                ));
            }
            if gap.is_finite() {
                worst = worst.max(gap);
            }
        }
    }
    let shown: Vec<_> = bad.iter().take(6).cloned().collect();
    let by_degree: Vec<String> = (1..=6)
        .map(|d| format!("d{d}:{}", bad.iter().filter(|b| b.contains(&format!("/d{d}/"))).count()))
        .collect();
    verdict(
        bad.is_empty(),
        format!(
            "{}/{total} cells outside 10% ({}), worst {:.1}%{}",
            bad.len(),
            by_degree.join(" "),
            100.0 * worst,
            if shown.is_empty() { String::new() } else { format!(", e.g. {}", shown.join("; ")) }
        ),
    )
}

fn degree_monotonicity(er: &Run) -> Verdict {
    let design = er.outcome.designs.iter().find(|d| d.scheme == RNL).unwrap();
    let eps: Vec<f64> = (1..=6).map(|d| design.minimax[&d].achieved_eps()).collect();
    let monotone = eps.windows(2).all(|w| w[1] <= w[0] + 1e-9);
    let trials = er.outcome.config.trials;
    let faster = (0..trials)
        .filter(|&t| {
            record(er, RNL, Method::MinimaxLp, 6, t).predicted_rate < record(er, RNL, Method::MinimaxLp, 1, t).predicted_rate
        })
        .count();
    let eps_text: Vec<String> = eps.iter().map(|e| format!("{e:.4}")).collect();
    verdict(
        monotone && faster == trials,
        format!("eps by degree [{}], d6 faster than d1 on {faster}/{trials} seeds", eps_text.join(", ")),
    )
}

fn semicircle() -> Verdict {
    let clock = Instant::now();
    let (n, theta) = (1000.0, 0.05);
    let model: GraphModel = serde_json::from_str(r#"{"kind":"erdos-renyi","n":1000,"theta":0.05}"#).unwrap();
    let g = connected_sample(&model, 7, Stream::Density, 0).unwrap();
    let scale = 1.0 / (n * theta * (1.0 - theta) as f64).sqrt();
    let s = matrix_spectrum(&g, MatrixKind::Adjacency).unwrap().mapped(scale, 0.0, MatrixKind::General);
    let f = density_from_spectra(&[s], &GridSpec::default(), None).unwrap();
    let (m1, m2) = (f.moment(1), f.moment(2));
    let seconds = clock.elapsed().as_secs_f64();
    verdict(
        m1.abs() < 0.05 && (m2 - 1.0).abs() <= 0.05 && seconds < 60.0,
        format!(
            "first moment {m1:.4} (|.| < 0.05), second moment {m2:.4} (1 +- 5%), bandwidth {:.3}, {seconds:.1} s",
            f.bandwidth().unwrap_or(f64::NAN)
        ),
    )
}

const DETERMINISM_CONFIG: &str = r#"
seed = 5
schemes = ["laplacian", "row-normalized-laplacian"]
methods = ["minimax-lp", "newton-baseline", "oracle-minimax", "plain"]
degrees = [1, 3, 5]
mc_realizations = 5
trials = 4
[model]
kind = "erdos-renyi"
n = 150
theta = 0.08
"#;

fn determinism() -> Verdict {
    let run = |dir: &Path, threads: usize| -> (String, serde_json::Value) {
        let path = dir.join("config.toml");
        let out = dir.join("out");
        let text = format!("output_dir = {:?}\n{DETERMINISM_CONFIG}", out.to_str().unwrap());
        std::fs::write(&path, text).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| run_experiment(&path)).unwrap();
        let rates = std::fs::read_to_string(out.join("rates.csv")).unwrap();
        let result: ExperimentResult = serde_json::from_str(&std::fs::read_to_string(out.join("results.json")).unwrap()).unwrap();
        let mut value = serde_json::to_value(&result).unwrap();
        let obj = value.as_object_mut().unwrap();
        obj.remove("timing");
        obj["config"].as_object_mut().unwrap().remove("output_dir");
        (rates, value)
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    let first = run(a.path(), 1);
    let second = run(b.path(), 1);
    let parallel = run(c.path(), 4);
    let same_rates = first.0 == second.0 && first.0 == parallel.0;
    let same_results = first.1 == second.1 && first.1 == parallel.1;
    verdict(
        same_rates && same_results,
        format!(
            "rates.csv byte-identical: {same_rates} ({} bytes), results.json equal modulo timing: {same_results}",
            first.0.len()
        ),
    )
}

fn guarded(f: impl FnOnce() -> Verdict) -> Verdict {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    })
}

fn main() {
    let mut results: Vec<(u32, &str, Verdict)> = Vec::new();
    results.push((1, "chebyshev-closed-form", guarded(chebyshev_closed_form)));
    results.push((2, "equioscillation", guarded(equioscillation)));
    results.push((3, "spectral-radius-identity", guarded(spectral_radius_identity)));

    let er = catch_unwind(|| pipeline(ER_CONFIG)).ok();
    let sbm = catch_unwind(|| pipeline(SBM_CONFIG)).ok();
    let missing = || Err("pipeline run failed".to_string());
    match &er {
        Some(er) => {
            results.push((4, "oracle-parity", guarded(|| oracle_parity(er))));
            results.push((5, "baseline-dominance", guarded(|| baseline_dominance(er))));
        }
        None => {
            results.push((4, "oracle-parity", missing()));
            results.push((5, "baseline-dominance", missing()));
        }
    }
    match (&er, &sbm) {
        (Some(er), Some(sbm)) => {
            let runs = [("erdos-renyi", er), ("lattice-sbm", sbm)];
            results.push((6, "weight-scheme-ordering", guarded(|| scheme_ordering(&runs))));
            results.push((7, "simulation-consistency", guarded(|| simulation_consistency(&runs))));
        }
        _ => {
            results.push((6, "weight-scheme-ordering", missing()));
            results.push((7, "simulation-consistency", missing()));
        }
    }
    match &er {
        Some(er) => results.push((8, "degree-monotonicity", guarded(|| degree_monotonicity(er)))),
        None => results.push((8, "degree-monotonicity", missing())),
    }
    results.push((9, "semicircle-moments", guarded(semicircle)));
    results.push((10, "determinism", guarded(determinism)));

    let mut failed = 0;
    println!();
    for (n, name, v) in &results {
        match v {
            Ok(detail) => println!("criterion {n} [{name}]: PASS {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n} [{name}]: FAIL {detail}");
            }
        }
    }
    println!("\nacceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
