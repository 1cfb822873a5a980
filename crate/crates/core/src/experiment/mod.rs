//! Config-driven experiments: sample densities, design filters, simulate
//! consensus on fresh graphs and tabulate predicted against measured rates.

mod config;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{ExperimentConfig, Method};

use crate::consensus::{measure_rate, simulate, SimulationConfig, Trajectory};
use crate::error::{Error, Result};
use crate::filter::{
    design_minimax_filter, newton_baseline_filter, oracle_minimax_filter, per_iteration_rate,
    predicted_spectral_radius, rate_serde, DesignProblem, FilterPolynomial,
};
use crate::graph::{is_connected, Graph, GraphModel};
use crate::seed::{derive_seed, Stream};
use crate::spectral::{
    density_from_spectra, kernel_density, monte_carlo_spectra, support_region, MatrixKind, Provenance,
    SpectralDensity, Spectrum, SupportRegion,
};
use crate::weights::{choose_alpha, Scheme};

/// Worker-count override read by the command-line front end.
pub const WORKERS_ENV: &str = "CONSENSUS_ACCEL_WORKERS";

const MAX_GRAPH_RETRIES: u64 = 10;

/// Draw a connected graph from `model` for stream slot `index`.
pub fn connected_sample(model: &GraphModel, master: u64, stream: Stream, index: u64) -> Result<Graph> {
    for attempt in 0..=MAX_GRAPH_RETRIES {
        let g = model.sample(derive_seed(master, stream, index, attempt));
        if is_connected(&g) {
            return Ok(g);
        }
    }
    Err(Error::ResampleExhausted {
        slot: index as usize,
        retries: MAX_GRAPH_RETRIES as usize,
        reason: "graph disconnected".into(),
    })
}

/// Everything designed for one weight scheme before any trial graph is seen.
#[derive(Debug, Clone)]
pub struct SchemeDesign {
    pub scheme: Scheme,
    pub alpha: f64,
    /// Monte Carlo density of the scheme's base matrix.
    pub density: SpectralDensity,
    /// The same density mapped to eigenvalue coordinates of `W`.
    pub w_density: SpectralDensity,
    pub region: SupportRegion,
    pub minimax: BTreeMap<usize, FilterPolynomial>,
    pub newton: BTreeMap<usize, FilterPolynomial>,
    /// Spectrum of `W` on the independent graph used by the Newton baseline.
    pub baseline_spectrum: Option<Spectrum>,
}

/// Density, step size, region and minimax filters for one scheme.
pub fn design_scheme(cfg: &ExperimentConfig, scheme: Scheme) -> Result<SchemeDesign> {
    let spectra = monte_carlo_spectra(&cfg.model, scheme.base_matrix(), cfg.mc_realizations, cfg.seed)?;
    let density = density_from_spectra(&spectra, &cfg.grid(), cfg.bandwidth)?;
    let alpha = choose_alpha(&density, cfg.tau_rel * density.peak())?;
    let w_density = density.affine_image(-alpha, 1.0)?;
    let region = support_region(&w_density, cfg.kappa, cfg.tau_rel * w_density.peak(), cfg.sample_count)?;
    log::info!(
        "{}: α = {alpha:.6}, region [{:.4}, {:.4}] with {} points",
        scheme.name(),
        region.lambda_min(),
        region.lambda_max(),
        region.len()
    );

    let mut minimax = BTreeMap::new();
    if cfg.has_method(Method::MinimaxLp) {
        for &degree in &cfg.degrees {
            let problem = DesignProblem {
                region: region.clone(),
                degree,
            };
            minimax.insert(degree, design_minimax_filter(&problem)?);
        }
    }

    let mut newton = BTreeMap::new();
    let mut baseline_spectrum = None;
    if cfg.has_method(Method::NewtonBaseline) {
        let g = connected_sample(&cfg.model, cfg.seed, Stream::Baseline, 0)?;
        let spectrum = scheme.build(&g, alpha)?.spectrum()?;
        for &degree in &cfg.degrees {
            match newton_baseline_filter(&spectrum, degree) {
                Ok(p) => {
                    newton.insert(degree, p);
                }
                Err(e @ Error::InsufficientEigenvalues { .. }) => {
                    log::warn!("{}: skipping Newton baseline d={degree}: {e}", scheme.name())
                }
                Err(e) => return Err(e),
            }
        }
        baseline_spectrum = Some(spectrum);
    }

    Ok(SchemeDesign {
        scheme,
        alpha,
        density,
        w_density,
        region,
        minimax,
        newton,
        baseline_spectrum,
    })
}

/// One simulated (scheme, method, degree, trial) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub scheme: Scheme,
    pub method: Method,
    /// Filter degree; 0 for plain consensus.
    pub degree: usize,
    pub trial: usize,
    pub predicted_rho: f64,
    #[serde(with = "rate_serde")]
    pub predicted_rate: f64,
    #[serde(with = "rate_serde")]
    pub measured_rate: f64,
    pub truncated: bool,
    pub achieved_eps: Option<f64>,
    /// Paths relative to the output directory.
    pub filter_file: String,
    pub spectrum_file: String,
    pub trajectory_file: String,
}

/// In-memory products of one trial graph.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub trial: usize,
    /// `W` spectrum per scheme on this trial's graph.
    pub spectra: BTreeMap<Scheme, Spectrum>,
    /// Oracle filters designed on this trial's spectra.
    pub oracle: BTreeMap<(Scheme, usize), FilterPolynomial>,
    pub records: Vec<TrialRecord>,
    pub trajectories: Vec<Trajectory>,
    pub seconds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scheme: Scheme,
    pub method: Method,
    pub degree: usize,
    pub trials: usize,
    pub predicted_rho_mean: f64,
    #[serde(with = "rate_serde")]
    pub predicted_rate_mean: f64,
    #[serde(with = "rate_serde")]
    pub measured_rate_mean: f64,
    #[serde(with = "rate_serde")]
    pub measured_rate_std: f64,
    pub achieved_eps_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSummary {
    pub scheme: Scheme,
    pub alpha: f64,
    pub bandwidth: Option<f64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub region_points: usize,
}

/// Wall-clock information, kept apart so the rest of the result is
/// reproducible byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub started_unix_seconds: u64,
    pub design_seconds: f64,
    pub total_seconds: f64,
    /// Summed simulation time per `scheme/method/degree` row.
    pub row_seconds: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub designs: Vec<DesignSummary>,
    pub rows: Vec<SummaryRow>,
    pub trials: Vec<TrialRecord>,
    pub timing: Timing,
}

/// The full in-memory state of a run, before anything is written.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub config: ExperimentConfig,
    pub designs: Vec<SchemeDesign>,
    pub trials: Vec<TrialOutcome>,
    pub result: ExperimentResult,
}

fn filter_file(scheme: Scheme, method: Method, degree: usize, trial: usize) -> String {
    match method {
        Method::Plain => "filters/plain.json".into(),
        Method::OracleMinimax => format!("filters/{}-{}-d{degree}-t{trial}.json", scheme.name(), method.name()),
        _ => format!("filters/{}-{}-d{degree}.json", scheme.name(), method.name()),
    }
}

fn spectrum_file(scheme: Scheme, trial: usize) -> String {
    format!("spectra/{}-t{trial}.txt", scheme.name())
}

fn trajectory_file(scheme: Scheme, method: Method, degree: usize, trial: usize) -> String {
    format!("trajectories/{}-{}-d{degree}-t{trial}.csv", scheme.name(), method.name())
}

fn run_trial(cfg: &ExperimentConfig, designs: &[SchemeDesign], trial: usize) -> Result<TrialOutcome> {
    let g = connected_sample(&cfg.model, cfg.seed, Stream::Trial, trial as u64)?;
    let x0_seed = derive_seed(cfg.seed, Stream::InitialState, trial as u64, 0);
    let mut out = TrialOutcome {
        trial,
        spectra: BTreeMap::new(),
        oracle: BTreeMap::new(),
        records: Vec::new(),
        trajectories: Vec::new(),
        seconds: Vec::new(),
    };
    for design in designs {
        let scheme = design.scheme;
        let wm = scheme.build(&g, design.alpha)?;
        let spectrum = wm.spectrum()?;
        let mut jobs: Vec<(Method, usize, FilterPolynomial)> = Vec::new();
        for &method in &cfg.methods {
            match method {
                Method::Plain => jobs.push((method, 0, FilterPolynomial::plain())),
                Method::MinimaxLp => jobs.extend(design.minimax.iter().map(|(&d, p)| (method, d, p.clone()))),
                Method::NewtonBaseline => jobs.extend(design.newton.iter().map(|(&d, p)| (method, d, p.clone()))),
                Method::OracleMinimax => {
                    for &d in &cfg.degrees {
                        let p = oracle_minimax_filter(&spectrum, cfg.kappa, d)?;
                        out.oracle.insert((scheme, d), p.clone());
                        jobs.push((method, d, p));
                    }
                }
            }
        }
        for (method, degree, filter) in jobs {
            let start = Instant::now();
            let rho = predicted_spectral_radius(&filter, &spectrum)?;
            let steps = filter.degree();
            if rho >= 1.0 {
                log::warn!(
                    "{} {} d={degree} trial {trial}: ρ = {rho:.4} ≥ 1, the iteration diverges",
                    scheme.name(),
                    method.name()
                );
            }
            let achieved_eps = method.design().map(|_| filter.achieved_eps());
            let sim = SimulationConfig::new(cfg.horizon_factor * steps).x0_seed(x0_seed);
            let sim = if method == Method::Plain { sim } else { sim.with_filter(filter) };
            let trajectory = simulate(&wm, &sim)?;
            let measured = measure_rate(&trajectory, cfg.burn_in)?;
            out.records.push(TrialRecord {
                scheme,
                method,
                degree,
                trial,
                predicted_rho: rho,
                predicted_rate: per_iteration_rate(rho, steps),
                measured_rate: measured.rate,
                truncated: measured.truncated,
                achieved_eps,
                filter_file: filter_file(scheme, method, degree, trial),
                spectrum_file: spectrum_file(scheme, trial),
                trajectory_file: trajectory_file(scheme, method, degree, trial),
            });
            out.trajectories.push(trajectory);
            out.seconds.push(start.elapsed().as_secs_f64());
        }
        out.spectra.insert(scheme, spectrum);
    }
    Ok(out)
}

fn mean(values: impl Iterator<Item = f64>) -> (f64, f64, usize) {
    let v: Vec<f64> = values.collect();
    let n = v.len();
    let m = v.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    (m, var.sqrt(), n)
}

fn summarize(trials: &[TrialOutcome]) -> (Vec<SummaryRow>, BTreeMap<String, f64>) {
    let mut groups: BTreeMap<(Scheme, Method, usize), Vec<(&TrialRecord, f64)>> = BTreeMap::new();
    for t in trials {
        for (r, s) in t.records.iter().zip(&t.seconds) {
            groups.entry((r.scheme, r.method, r.degree)).or_default().push((r, *s));
        }
    }
    let mut seconds = BTreeMap::new();
    let rows = groups
        .into_iter()
        .map(|((scheme, method, degree), cell)| {
            seconds.insert(
                format!("{}/{}/{degree}", scheme.name(), method.name()),
                cell.iter().map(|(_, s)| s).sum(),
            );
            let (rho, _, n) = mean(cell.iter().map(|(r, _)| r.predicted_rho));
            let (pred, _, _) = mean(cell.iter().map(|(r, _)| r.predicted_rate));
            let (meas, std, _) = mean(cell.iter().map(|(r, _)| r.measured_rate));
            let eps = method.design().map(|_| mean(cell.iter().filter_map(|(r, _)| r.achieved_eps)).0);
            SummaryRow {
                scheme,
                method,
                degree,
                trials: n,
                predicted_rho_mean: rho,
                predicted_rate_mean: pred,
                measured_rate_mean: meas,
                measured_rate_std: std,
                achieved_eps_mean: eps,
            }
        })
        .collect();
    (rows, seconds)
}

/// Run the whole pipeline in memory.
pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let started = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let clock = Instant::now();
    let designs = cfg
        .schemes
        .iter()
        .map(|&s| design_scheme(cfg, s))
        .collect::<Result<Vec<_>>>()?;
    let design_seconds = clock.elapsed().as_secs_f64();
    let mut trials = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, &designs, t))
        .collect::<Result<Vec<_>>>()?;
    trials.sort_by_key(|t| t.trial);
    let (rows, row_seconds) = summarize(&trials);
    let result = ExperimentResult {
        config: cfg.clone(),
        designs: designs
            .iter()
            .map(|d| DesignSummary {
                scheme: d.scheme,
                alpha: d.alpha,
                bandwidth: d.density.bandwidth(),
                lambda_min: d.region.lambda_min(),
                lambda_max: d.region.lambda_max(),
                region_points: d.region.len(),
            })
            .collect(),
        rows,
        trials: trials.iter().flat_map(|t| t.records.iter().cloned()).collect(),
        timing: Timing {
            started_unix_seconds: started,
            design_seconds,
            total_seconds: clock.elapsed().as_secs_f64(),
            row_seconds,
        },
    };
    Ok(ExperimentOutcome {
        config: cfg.clone(),
        designs,
        trials,
        result,
    })
}

fn fmt_rate(v: f64) -> String {
    rate_serde::format(v)
}

/// `scheme,method,degree,predicted_rate,measured_rate_mean,measured_rate_std`.
pub fn rates_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from("scheme,method,degree,predicted_rate,measured_rate_mean,measured_rate_std\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.scheme.name(),
            r.method.name(),
            r.degree,
            fmt_rate(r.predicted_rate_mean),
            fmt_rate(r.measured_rate_mean),
            fmt_rate(r.measured_rate_std)
        );
    }
    out
}

/// One row per simulated cell.
pub fn trials_csv(records: &[TrialRecord]) -> String {
    let mut out = String::from(
        "scheme,method,degree,trial,predicted_rho,predicted_rate,measured_rate,truncated,achieved_eps,trajectory\n",
    );
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.scheme.name(),
            r.method.name(),
            r.degree,
            r.trial,
            r.predicted_rho,
            fmt_rate(r.predicted_rate),
            fmt_rate(r.measured_rate),
            r.truncated,
            r.achieved_eps.map(|e| e.to_string()).unwrap_or_default(),
            r.trajectory_file
        );
    }
    out
}

fn create_dirs(dir: &Path) -> Result<()> {
    for sub in ["densities", "filters", "spectra", "trajectories"] {
        std::fs::create_dir_all(dir.join(sub))?;
    }
    Ok(())
}

/// Write every artifact of `outcome` under `dir`.
pub fn write_outputs(outcome: &ExperimentOutcome, dir: &Path) -> Result<()> {
    create_dirs(dir)?;
    for d in &outcome.designs {
        let name = d.scheme.name();
        d.density.save(&dir.join(format!("densities/{name}.density")))?;
        d.w_density.save(&dir.join(format!("densities/{name}-weight.density")))?;
        for (degree, p) in &d.minimax {
            p.save(&dir.join(filter_file(d.scheme, Method::MinimaxLp, *degree, 0)))?;
        }
        for (degree, p) in &d.newton {
            p.save(&dir.join(filter_file(d.scheme, Method::NewtonBaseline, *degree, 0)))?;
        }
        if let Some(s) = &d.baseline_spectrum {
            std::fs::write(dir.join(format!("spectra/{name}-baseline.txt")), s.to_text())?;
        }
    }
    if outcome.config.has_method(Method::Plain) {
        FilterPolynomial::plain().save(&dir.join("filters/plain.json"))?;
    }
    for t in &outcome.trials {
        for (scheme, s) in &t.spectra {
            std::fs::write(dir.join(spectrum_file(*scheme, t.trial)), s.to_text())?;
        }
        for ((scheme, degree), p) in &t.oracle {
            p.save(&dir.join(filter_file(*scheme, Method::OracleMinimax, *degree, t.trial)))?;
        }
        for (r, traj) in t.records.iter().zip(&t.trajectories) {
            traj.save_csv(&dir.join(&r.trajectory_file))?;
        }
    }
    std::fs::write(dir.join("rates.csv"), rates_csv(&outcome.result.rows))?;
    std::fs::write(dir.join("trials.csv"), trials_csv(&outcome.result.trials))?;
    std::fs::write(
        dir.join("results.json"),
        serde_json::to_string_pretty(&outcome.result)? + "\n",
    )?;
    Ok(())
}

/// Load a config, run it and persist everything under its `output_dir`.
pub fn run_experiment(config_path: &Path) -> Result<ExperimentResult> {
    let cfg = ExperimentConfig::load(config_path)?;
    let outcome = run_pipeline(&cfg)?;
    write_outputs(&outcome, &cfg.output_dir)?;
    Ok(outcome.result)
}

/// Files written by [`emit_density`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityFiles {
    pub monte_carlo: PathBuf,
    pub single: PathBuf,
}

/// The single-realization companion of a density path: `x.density` → `x.single.density`.
pub fn single_realization_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = path.extension().map(|e| e.to_string_lossy().into_owned());
    let name = match ext {
        Some(ext) => format!("{stem}.single.{ext}"),
        None => format!("{stem}.single"),
    };
    path.with_file_name(name)
}

/// Monte Carlo density of `kind` under the config's model, plus the kernel
/// estimate of the first realization alone on the same grid and bandwidth.
pub fn emit_density(cfg: &ExperimentConfig, kind: MatrixKind, out: &Path) -> Result<DensityFiles> {
    if !matches!(
        kind,
        MatrixKind::Adjacency | MatrixKind::Laplacian | MatrixKind::RowNormalizedLaplacian
    ) {
        return Err(Error::config(
            "matrix",
            format!("density of `{}` not supported; use adjacency, laplacian or row-normalized-laplacian", kind.name()),
        ));
    }
    let spectra = monte_carlo_spectra(&cfg.model, kind, cfg.mc_realizations, cfg.seed)?;
    let mc = density_from_spectra(&spectra, &cfg.grid(), cfg.bandwidth)?;
    let mut single = kernel_density(&spectra[0], mc.grid(), mc.bandwidth())?;
    single = SpectralDensity::new(
        single.grid().to_vec(),
        single.values().to_vec(),
        Provenance::SingleRealization,
        single.bandwidth(),
    )?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let single_path = single_realization_path(out);
    mc.save(out)?;
    single.save(&single_path)?;
    Ok(DensityFiles {
        monte_carlo: out.to_owned(),
        single: single_path,
    })
}

/// The minimax filter of `degree` for `scheme` (default: the first configured).
pub fn design_filter(cfg: &ExperimentConfig, degree: usize, scheme: Option<Scheme>) -> Result<FilterPolynomial> {
    if !(1..=10).contains(&degree) {
        return Err(Error::config("degree", format!("degree {degree} outside 1..=10")));
    }
    let scheme = scheme.unwrap_or(cfg.schemes[0]);
    let mut one = cfg.clone();
    one.methods = vec![Method::Plain];
    let design = design_scheme(&one, scheme)?;
    design_minimax_filter(&DesignProblem {
        region: design.region,
        degree,
    })
}
