//! Grid-sampled spectral densities: Gaussian kernel estimates of single
//! spectra, Monte Carlo averages over realizations of a random graph model,
//! and densities loaded from file.

use std::fmt::{self, Write as _};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{density_spectrum, MatrixKind, Spectrum};
use crate::error::{Error, Result};
use crate::graph::GraphModel;
use crate::seed::{derive_seed, Stream};

/// Smallest bandwidth used when the spectrum carries no spread.
pub const BANDWIDTH_FLOOR: f64 = 1e-3;

/// Retries per Monte Carlo slot before giving up.
const MAX_RETRIES: u64 = 10;

const FILE_HEADER: &str = "# spectral-density v1";

/// Where a density came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    SingleRealization,
    MonteCarlo { realizations: usize },
    AnalyticFile,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::SingleRealization => f.write_str("single-realization"),
            Provenance::MonteCarlo { realizations } => write!(f, "monte-carlo({realizations})"),
            Provenance::AnalyticFile => f.write_str("analytic-file"),
        }
    }
}

/// Nonnegative density samples on an ascending grid, unit trapezoidal mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralDensity {
    grid: Vec<f64>,
    values: Vec<f64>,
    provenance: Provenance,
    bandwidth: Option<f64>,
}

fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    grid.windows(2)
        .zip(values.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::invalid("density grid needs at least two points"));
    }
    if grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("density grid must be finite and strictly ascending"));
    }
    Ok(())
}

impl SpectralDensity {
    /// Validate and wrap samples. Mass must lie in `[0.99, 1.01]`.
    pub fn new(grid: Vec<f64>, values: Vec<f64>, provenance: Provenance, bandwidth: Option<f64>) -> Result<Self> {
        check_grid(&grid)?;
        if grid.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::invalid(format!("density value {v} is negative or non-finite")));
        }
        let mass = trapezoid(&grid, &values);
        if !(0.99..=1.01).contains(&mass) {
            return Err(Error::MassDeviation { mass });
        }
        Ok(SpectralDensity {
            grid,
            values,
            provenance,
            bandwidth,
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn bandwidth(&self) -> Option<f64> {
        self.bandwidth
    }

    pub fn mass(&self) -> f64 {
        trapezoid(&self.grid, &self.values)
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// `∫ λ^k f(λ) dλ` by the trapezoidal rule.
    pub fn moment(&self, k: i32) -> f64 {
        let weighted: Vec<f64> = self
            .grid
            .iter()
            .zip(&self.values)
            .map(|(x, v)| x.powi(k) * v)
            .collect();
        trapezoid(&self.grid, &weighted)
    }

    /// Linear interpolation of the samples; zero outside the grid.
    pub fn value_at(&self, lambda: f64) -> f64 {
        let (first, last) = (self.grid[0], self.grid[self.grid.len() - 1]);
        if !(first..=last).contains(&lambda) {
            return 0.0;
        }
        let i = self.grid.partition_point(|&x| x <= lambda).clamp(1, self.grid.len() - 1);
        let (x0, x1) = (self.grid[i - 1], self.grid[i]);
        let t = (lambda - x0) / (x1 - x0);
        self.values[i - 1] * (1.0 - t) + self.values[i] * t
    }

    /// Density of `scale · X + shift` when `X` has this density.
    pub fn affine_image(&self, scale: f64, shift: f64) -> Result<SpectralDensity> {
        if scale == 0.0 || !scale.is_finite() {
            return Err(Error::invalid("affine image needs a finite nonzero scale"));
        }
        let mut pairs: Vec<(f64, f64)> = self
            .grid
            .iter()
            .zip(&self.values)
            .map(|(x, v)| (scale * x + shift, v / scale.abs()))
            .collect();
        if scale < 0.0 {
            pairs.reverse();
        }
        let (grid, values) = pairs.into_iter().unzip();
        SpectralDensity::new(
            grid,
            values,
            self.provenance,
            self.bandwidth.map(|h| h * scale.abs()),
        )
    }

    /// Text file form with 17 significant digits, which round-trips exactly.
    pub fn to_text(&self) -> String {
        let mut out = format!("{FILE_HEADER}\n# provenance: {}\n", self.provenance);
        if let Some(h) = self.bandwidth {
            let _ = writeln!(out, "# bandwidth: {h:.16e}");
        }
        for (x, v) in self.grid.iter().zip(&self.values) {
            let _ = writeln!(out, "{x:.16e} {v:.16e}");
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    /// Parse the text form. Mass within 5% of one is renormalized.
    pub fn from_text(text: &str, path: &Path) -> Result<SpectralDensity> {
        let bad = |line: usize, message: String| Error::Format {
            path: path.to_owned(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        match lines.next() {
            Some((_, h)) if h == FILE_HEADER => {}
            _ => return Err(bad(1, format!("missing `{FILE_HEADER}` header"))),
        }
        let mut grid = Vec::new();
        let mut values = Vec::new();
        let mut bandwidth = None;
        for (lineno, line) in lines {
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(h) = comment.trim().strip_prefix("bandwidth:") {
                    bandwidth = Some(
                        h.trim()
                            .parse::<f64>()
                            .map_err(|e| bad(lineno, format!("bad bandwidth: {e}")))?,
                    );
                }
                continue;
            }
            let mut parts = line.split_whitespace();
            let parse = |s: Option<&str>| s.and_then(|s| s.parse::<f64>().ok());
            let (x, v) = match (parse(parts.next()), parse(parts.next()), parts.next()) {
                (Some(x), Some(v), None) => (x, v),
                _ => return Err(bad(lineno, format!("expected `lambda value`, got `{line}`"))),
            };
            if v < 0.0 || !v.is_finite() {
                return Err(bad(lineno, format!("density value {v} is negative or non-finite")));
            }
            if grid.last().is_some_and(|&prev| x <= prev) {
                return Err(bad(lineno, "lambda values must be strictly ascending".into()));
            }
            grid.push(x);
            values.push(v);
        }
        check_grid(&grid).map_err(|e| bad(0, e.to_string()))?;
        let mass = trapezoid(&grid, &values);
        if !(0.95..=1.05).contains(&mass) {
            return Err(Error::MassDeviation { mass });
        }
        for v in &mut values {
            *v /= mass;
        }
        SpectralDensity::new(grid, values, Provenance::AnalyticFile, bandwidth)
    }
}

/// Read a density file, e.g. one computed externally from a deterministic
/// equivalent. Provenance becomes [`Provenance::AnalyticFile`].
pub fn load_analytic_density(path: &Path) -> Result<SpectralDensity> {
    let text = std::fs::read_to_string(path)?;
    SpectralDensity::from_text(&text, path)
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Silverman's rule `0.9 · min(σ̂, IQR/1.34) · N^{-1/5}`, floored at
/// [`BANDWIDTH_FLOOR`] (with a warning) when the sample has no spread.
pub fn silverman_bandwidth(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        log::warn!("spectrum has fewer than two values; bandwidth floor {BANDWIDTH_FLOOR} applied");
        return BANDWIDTH_FLOOR;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = (quantile(&sorted, 0.75) - quantile(&sorted, 0.25)) / 1.34;
    let spread = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr),
        (true, false) => sd,
        (false, true) => iqr,
        (false, false) => 0.0,
    };
    let h = 0.9 * spread * (n as f64).powf(-0.2);
    if h < BANDWIDTH_FLOOR {
        log::warn!("degenerate spectrum (bandwidth {h:e}); bandwidth floor {BANDWIDTH_FLOOR} applied");
        BANDWIDTH_FLOOR
    } else {
        h
    }
}

fn gaussian_kde(values: &[f64], grid: &[f64], h: f64) -> Vec<f64> {
    let norm = 1.0 / (values.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    // Beyond 40 bandwidths exp(-z²/2) underflows to zero anyway.
    let reach = 40.0 * h;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    grid.iter()
        .map(|&x| {
            let lo = sorted.partition_point(|&v| v < x - reach);
            let hi = sorted.partition_point(|&v| v <= x + reach);
            let s: f64 = sorted[lo..hi]
                .iter()
                .map(|&v| {
                    let z = (x - v) / h;
                    (-0.5 * z * z).exp()
                })
                .sum();
            s * norm
        })
        .collect()
}

fn normalized(grid: Vec<f64>, mut values: Vec<f64>, provenance: Provenance, h: f64) -> Result<SpectralDensity> {
    let mass = trapezoid(&grid, &values);
    if !(0.99..=1.01).contains(&mass) {
        return Err(Error::MassDeviation { mass });
    }
    for v in &mut values {
        *v /= mass;
    }
    SpectralDensity::new(grid, values, provenance, Some(h))
}

/// Gaussian kernel density estimate of a spectrum on `grid`.
///
/// The grid must cover `[min - 3h, max + 3h]`. The result is rescaled to unit
/// trapezoidal mass on the grid; without the rescale it is already within
/// 1% of one under that coverage condition.
pub fn kernel_density(s: &Spectrum, grid: &[f64], bandwidth: Option<f64>) -> Result<SpectralDensity> {
    if s.is_empty() {
        return Err(Error::invalid("cannot estimate the density of an empty spectrum"));
    }
    check_grid(grid)?;
    let h = match bandwidth {
        Some(h) if h > 0.0 && h.is_finite() => h,
        Some(h) => return Err(Error::invalid(format!("bandwidth {h} must be positive"))),
        None => silverman_bandwidth(s.values()),
    };
    let (lo, hi) = (s.min() - 3.0 * h, s.max() + 3.0 * h);
    if grid[0] > lo || grid[grid.len() - 1] < hi {
        return Err(Error::invalid(format!(
            "grid [{}, {}] does not cover [{lo}, {hi}]",
            grid[0],
            grid[grid.len() - 1]
        )));
    }
    let values = gaussian_kde(s.values(), grid, h);
    normalized(grid.to_vec(), values, Provenance::SingleRealization, h)
}

/// How the abscissae of an estimated density are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    /// `points` evenly spaced abscissae over `[min - 6h, max + 6h]` of the pooled spectra.
    Auto { points: usize },
    Explicit(Vec<f64>),
}

impl GridSpec {
    pub const DEFAULT_POINTS: usize = 2001;

    fn resolve(&self, lo: f64, hi: f64, h: f64) -> Result<Vec<f64>> {
        match self {
            GridSpec::Auto { points } => {
                if *points < 2 {
                    return Err(Error::invalid("grid needs at least two points"));
                }
                let (a, b) = (lo - 6.0 * h, hi + 6.0 * h);
                let step = (b - a) / (*points - 1) as f64;
                Ok((0..*points).map(|i| a + step * i as f64).collect())
            }
            GridSpec::Explicit(grid) => Ok(grid.clone()),
        }
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Auto {
            points: GridSpec::DEFAULT_POINTS,
        }
    }
}

/// Spectra of `realizations` independent graphs drawn from `model`.
///
/// Slot `r` uses sub-seed `(seed, r, attempt)`; realizations failing the
/// matrix kind's preconditions are redrawn up to ten times. The result does
/// not depend on the number of worker threads.
pub fn monte_carlo_spectra(
    model: &GraphModel,
    kind: MatrixKind,
    realizations: usize,
    seed: u64,
) -> Result<Vec<Spectrum>> {
    if realizations == 0 {
        return Err(Error::invalid("Monte Carlo density needs at least one realization"));
    }
    (0..realizations)
        .into_par_iter()
        .map(|slot| {
            let mut last_error = None;
            for attempt in 0..=MAX_RETRIES {
                let g = model.sample(derive_seed(seed, Stream::Density, slot as u64, attempt));
                match density_spectrum(&g, kind) {
                    Ok(s) => return Ok(s),
                    Err(e) => last_error = Some(e),
                }
            }
            Err(Error::ResampleExhausted {
                slot,
                retries: MAX_RETRIES as usize,
                reason: last_error.map(|e| e.to_string()).unwrap_or_default(),
            })
        })
        .collect()
}

/// Pointwise average of kernel estimates of `spectra`, all with one
/// bandwidth: `bandwidth` if given, else Silverman's rule on the pooled
/// eigenvalues. With a common bandwidth the average equals the kernel
/// estimate of the pooled sample.
pub fn density_from_spectra(spectra: &[Spectrum], grid: &GridSpec, bandwidth: Option<f64>) -> Result<SpectralDensity> {
    if spectra.is_empty() {
        return Err(Error::invalid("no spectra to average"));
    }
    let pooled: Vec<f64> = spectra.iter().flat_map(|s| s.values().iter().copied()).collect();
    let h = bandwidth.unwrap_or_else(|| silverman_bandwidth(&pooled));
    let lo = pooled.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = pooled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let grid = grid.resolve(lo, hi, h)?;
    let estimates = spectra
        .par_iter()
        .map(|s| kernel_density(s, &grid, Some(h)))
        .collect::<Result<Vec<_>>>()?;
    let provenance = Provenance::MonteCarlo {
        realizations: spectra.len(),
    };
    if let [single] = estimates.as_slice() {
        // An average of one is that realization's estimate, bit for bit.
        let mut single = single.clone();
        single.provenance = provenance;
        return Ok(single);
    }
    let mut values = vec![0.0; grid.len()];
    for est in &estimates {
        for (acc, v) in values.iter_mut().zip(est.values()) {
            *acc += v;
        }
    }
    let r = spectra.len() as f64;
    for v in &mut values {
        *v /= r;
    }
    normalized(grid, values, provenance, h)
}

/// Monte Carlo estimate of the expected spectral density of `kind` under `model`.
pub fn monte_carlo_density(
    model: &GraphModel,
    kind: MatrixKind,
    realizations: usize,
    grid: &GridSpec,
    seed: u64,
    bandwidth: Option<f64>,
) -> Result<SpectralDensity> {
    let spectra = monte_carlo_spectra(model, kind, realizations, seed)?;
    density_from_spectra(&spectra, grid, bandwidth)
}
