use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::DesignMethod;
use crate::graph::GraphModel;
use crate::spectral::GridSpec;
use crate::weights::Scheme;

/// What to simulate for each trial graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    MinimaxLp,
    NewtonBaseline,
    OracleMinimax,
    /// Unfiltered `x ← Wx`.
    Plain,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Plain => "plain",
            Method::MinimaxLp => DesignMethod::MinimaxLp.name(),
            Method::NewtonBaseline => DesignMethod::NewtonBaseline.name(),
            Method::OracleMinimax => DesignMethod::OracleMinimax.name(),
        }
    }

    pub fn design(&self) -> Option<DesignMethod> {
        match self {
            Method::Plain => None,
            Method::MinimaxLp => Some(DesignMethod::MinimaxLp),
            Method::NewtonBaseline => Some(DesignMethod::NewtonBaseline),
            Method::OracleMinimax => Some(DesignMethod::OracleMinimax),
        }
    }
}

fn default_schemes() -> Vec<Scheme> {
    vec![Scheme::RowNormalizedLaplacian]
}

fn default_realizations() -> usize {
    20
}

fn default_kappa() -> f64 {
    0.05
}

fn default_tau_rel() -> f64 {
    1e-3
}

fn default_sample_count() -> usize {
    400
}

fn default_trials() -> usize {
    10
}

fn default_horizon_factor() -> usize {
    40
}

fn default_burn_in() -> f64 {
    0.2
}

fn default_grid_points() -> usize {
    GridSpec::DEFAULT_POINTS
}

/// A complete experiment, read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; every random stream is derived from it.
    pub seed: u64,
    pub output_dir: PathBuf,
    pub model: GraphModel,
    #[serde(default = "default_schemes")]
    pub schemes: Vec<Scheme>,
    #[serde(default)]
    pub degrees: Vec<usize>,
    pub methods: Vec<Method>,
    #[serde(default = "default_realizations")]
    pub mc_realizations: usize,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    /// Density threshold as a fraction of the density's peak.
    #[serde(default = "default_tau_rel")]
    pub tau_rel: f64,
    #[serde(default = "default_sample_count")]
    pub sample_count: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Simulated iterations per unit of filter degree.
    #[serde(default = "default_horizon_factor")]
    pub horizon_factor: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: f64,
    /// Fixed kernel bandwidth; Silverman's rule when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<f64>,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
}

impl ExperimentConfig {
    /// Parse and validate TOML text.
    pub fn from_toml(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| Error::config("", e.to_string()))?;
        let mut cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            Error::config(if field == "." { String::new() } else { field }, e.into_inner().message())
        })?;
        cfg.validate()?;
        cfg.normalize();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        ExperimentConfig::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        for (i, &d) in self.degrees.iter().enumerate() {
            if !(1..=10).contains(&d) {
                return Err(Error::config(format!("degrees[{i}]"), format!("degree {d} outside 1..=10")));
            }
        }
        if self.methods.is_empty() {
            return Err(Error::config("methods", "at least one method is required"));
        }
        if self.schemes.is_empty() {
            return Err(Error::config("schemes", "at least one scheme is required"));
        }
        if self.methods.iter().any(|m| *m != Method::Plain) && self.degrees.is_empty() {
            return Err(Error::config("degrees", "filter methods need at least one degree"));
        }
        if self.mc_realizations == 0 {
            return Err(Error::config("mc_realizations", "must be at least 1"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return Err(Error::config("kappa", format!("{} not in (0, 1)", self.kappa)));
        }
        if !(self.tau_rel > 0.0 && self.tau_rel < 1.0) {
            return Err(Error::config("tau_rel", format!("{} not in (0, 1)", self.tau_rel)));
        }
        if self.sample_count == 0 {
            return Err(Error::config("sample_count", "must be at least 1"));
        }
        if self.horizon_factor < 3 {
            return Err(Error::config("horizon_factor", "must be at least 3 to fit a rate"));
        }
        if !(0.0..0.9).contains(&self.burn_in) {
            return Err(Error::config("burn_in", format!("{} not in [0, 0.9)", self.burn_in)));
        }
        if let Some(h) = self.bandwidth {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::config("bandwidth", format!("{h} is not a positive bandwidth")));
            }
        }
        if self.grid_points < 3 {
            return Err(Error::config("grid_points", "must be at least 3"));
        }
        Ok(())
    }

    fn normalize(&mut self) {
        self.degrees.sort_unstable();
        self.degrees.dedup();
        self.methods.sort_unstable();
        self.methods.dedup();
        self.schemes.sort_unstable();
        self.schemes.dedup();
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec::Auto {
            points: self.grid_points,
        }
    }

    pub fn has_method(&self, m: Method) -> bool {
        self.methods.contains(&m)
    }
}
