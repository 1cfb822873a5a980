//! Iterating `x ← Wx`, optionally replacing every `d`-th state by the
//! filtered combination `Σ a_k x_{n-d+k}` of the last `d + 1` states.

use std::path::Path;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::FilterPolynomial;
use crate::seed::rng_from_seed;
use crate::weights::{check_consensus_conditions, consensus_projector, WeightMatrix};

/// Errors at or below this level are treated as rounding noise.
pub const ERROR_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    /// Number of `W` applications.
    pub horizon: usize,
    /// `None` runs the plain iteration.
    pub filter: Option<FilterPolynomial>,
    /// Record the error every this many steps (step 0 is always recorded).
    pub record_every: usize,
    /// Seed for an i.i.d. standard normal initial state.
    pub x0_seed: u64,
    /// Overrides the random initial state.
    pub initial_state: Option<Vec<f64>>,
    /// Run the (dense, `O(N³)`) contraction check before iterating and warn
    /// if it fails.
    pub verify: bool,
}

impl SimulationConfig {
    pub fn new(horizon: usize) -> Self {
        SimulationConfig {
            horizon,
            filter: None,
            record_every: 1,
            x0_seed: 0,
            initial_state: None,
            verify: false,
        }
    }

    pub fn with_filter(mut self, filter: FilterPolynomial) -> Self {
        self.record_every = filter.degree();
        self.filter = Some(filter);
        self
    }

    pub fn record_every(mut self, stride: usize) -> Self {
        self.record_every = stride;
        self
    }

    pub fn x0_seed(mut self, seed: u64) -> Self {
        self.x0_seed = seed;
        self
    }

    pub fn initial_state(mut self, x0: Vec<f64>) -> Self {
        self.initial_state = Some(x0);
        self
    }

    pub fn verify(mut self, verify: bool) -> Self {
        self.verify = verify;
        self
    }
}

/// Relative consensus error `‖x_n - J x_0‖ / ‖x_0 - J x_0‖` at recorded steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<usize>,
    pub errors: Vec<f64>,
    pub final_state: Vec<f64>,
    /// `ℓᵀx_0 / ℓᵀ1`, the value every node converges to.
    pub consensus_value: f64,
}

impl Trajectory {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,error\n");
        for (s, e) in self.steps.iter().zip(&self.errors) {
            out.push_str(&format!("{s},{e:e}\n"));
        }
        out
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Standard normal initial state from a seed.
pub fn random_initial_state(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

fn distance(x: &[f64], c: f64) -> f64 {
    x.iter().map(|v| (v - c) * (v - c)).sum::<f64>().sqrt()
}

pub fn simulate(wm: &WeightMatrix, cfg: &SimulationConfig) -> Result<Trajectory> {
    let n = wm.dim();
    if cfg.record_every == 0 {
        return Err(Error::invalid("record_every must be positive"));
    }
    let x0 = match &cfg.initial_state {
        Some(x) if x.len() != n => {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: x.len(),
            })
        }
        Some(x) => x.clone(),
        None => random_initial_state(n, cfg.x0_seed),
    };
    let coeffs: Vec<f64> = match &cfg.filter {
        Some(p) => p.p_monomial().ok_or(Error::NoMonomialForm(p.degree()))?.to_vec(),
        None => vec![0.0, 1.0],
    };
    let d = coeffs.len() - 1;
    if cfg.filter.is_some() && cfg.horizon % d != 0 {
        log::warn!("horizon {} is not a multiple of the filter degree {d}", cfg.horizon);
    }
    if cfg.verify {
        let report = check_consensus_conditions(wm)?;
        if !report.all_hold() {
            log::warn!("W does not satisfy the consensus conditions: {report:?}");
        }
        if let Some(p) = &cfg.filter {
            let rho = crate::filter::predicted_spectral_radius(p, &wm.spectrum()?)?;
            if rho >= 1.0 {
                log::warn!("filter does not contract: ρ(p(W) - J) = {rho}");
            }
        }
    }

    let projector = consensus_projector(wm.ell())?;
    let target = projector.average(&x0);
    let initial = distance(&x0, target);
    if initial == 0.0 {
        return Err(Error::invalid("initial state is already at consensus"));
    }

    let mut steps = vec![0];
    let mut errors = vec![1.0];
    // window[k] holds x_{base + k}; the newest state is window[filled].
    let mut window: Vec<Vec<f64>> = vec![vec![0.0; n]; d + 1];
    window[0].copy_from_slice(&x0);
    let mut filled = 0;
    for step in 1..=cfg.horizon {
        let (head, tail) = window.split_at_mut(filled + 1);
        wm.apply(&head[filled], &mut tail[0]);
        filled += 1;
        if cfg.filter.is_some() && filled == d {
            let mut combined = vec![0.0; n];
            for (a, x) in coeffs.iter().zip(&window) {
                if *a != 0.0 {
                    for (c, v) in combined.iter_mut().zip(x) {
                        *c += a * v;
                    }
                }
            }
            window[0] = combined;
            filled = 0;
        } else if cfg.filter.is_none() {
            window.swap(0, 1);
            filled = 0;
        }
        if step % cfg.record_every == 0 {
            steps.push(step);
            errors.push(distance(&window[filled], target) / initial);
        }
    }
    Ok(Trajectory {
        steps,
        errors,
        final_state: window.swap_remove(filled),
        consensus_value: target,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    /// Least-squares slope of `ln(error)` against the step count.
    pub rate: f64,
    /// Whether the fit window was cut short by [`ERROR_FLOOR`].
    pub truncated: bool,
    /// Number of recorded points used in the fit.
    pub points: usize,
}

/// Fit `ln(error) ≈ a + rate · step`, discarding the leading `burn_in`
/// fraction of the usable record. The record is first cut at the first
/// error at or below [`ERROR_FLOOR`].
pub fn measure_rate(t: &Trajectory, burn_in: f64) -> Result<RateEstimate> {
    if !(0.0..1.0).contains(&burn_in) {
        return Err(Error::invalid(format!("burn-in fraction {burn_in} not in [0, 1)")));
    }
    let usable = t.errors.iter().position(|&e| e <= ERROR_FLOOR).unwrap_or(t.errors.len());
    let truncated = usable < t.errors.len();
    let skip = (burn_in * usable as f64).floor() as usize;
    let xs: Vec<f64> = t.steps[skip..usable].iter().map(|&s| s as f64).collect();
    let ys: Vec<f64> = t.errors[skip..usable].iter().map(|e| e.ln()).collect();
    if xs.len() < 2 {
        return Err(Error::invalid(format!(
            "only {} usable error records after burn-in; lengthen the horizon",
            xs.len()
        )));
    }
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(RateEstimate {
        rate: sxy / sxx,
        truncated,
        points: xs.len(),
    })
}
