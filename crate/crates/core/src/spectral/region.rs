use serde::{Deserialize, Serialize};

use super::SpectralDensity;
use crate::error::{Error, Result};

/// The finite sample set `Λ_S` of the design region
/// `{λ < 1 - κ : f(λ) > τ}`, in the eigenvalue coordinates of `W`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportRegion {
    points: Vec<f64>,
    kappa: f64,
    tau: f64,
    lambda_min: f64,
    lambda_max: f64,
}

impl SupportRegion {
    /// A region given directly by its sample points (e.g. realized
    /// eigenvalues). Points are sorted; all must lie below `1 - kappa`.
    pub fn from_points(mut points: Vec<f64>, kappa: f64, tau: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyRegion);
        }
        if let Some(bad) = points.iter().find(|p| !p.is_finite()) {
            return Err(Error::invalid(format!("non-finite region point {bad}")));
        }
        points.sort_by(f64::total_cmp);
        let lambda_min = points[0];
        let lambda_max = points[points.len() - 1];
        if lambda_max >= 1.0 - kappa {
            return Err(Error::invalid(format!(
                "region point {lambda_max} is not below 1 - κ = {}",
                1.0 - kappa
            )));
        }
        Ok(SupportRegion {
            points,
            kappa,
            tau,
            lambda_min,
            lambda_max,
        })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Whether `lambda` lies within `[lambda_min, lambda_max]`.
    pub fn spans(&self, lambda: f64) -> bool {
        (self.lambda_min..=self.lambda_max).contains(&lambda)
    }
}

/// Sample the design region of density `f` (already in `W` coordinates).
///
/// `λ_min`/`λ_max` are the extreme grid locations with `λ < 1 - κ` and
/// `f(λ) > τ`; `count` evenly spaced points cover that span, and interior
/// points where the interpolated density falls to `τ` or below (gaps between
/// lobes) are dropped. The two endpoints are always kept.
pub fn support_region(f: &SpectralDensity, kappa: f64, tau: f64, count: usize) -> Result<SupportRegion> {
    if !(kappa > 0.0) || !(tau > 0.0) {
        return Err(Error::invalid(format!("κ = {kappa} and τ = {tau} must be positive")));
    }
    if count == 0 {
        return Err(Error::invalid("region needs at least one sample point"));
    }
    let limit = 1.0 - kappa;
    let mut passing = f
        .grid()
        .iter()
        .zip(f.values())
        .filter(|(x, v)| **x < limit && **v > tau)
        .map(|(x, _)| *x);
    let lambda_min = passing.next().ok_or(Error::EmptyRegion)?;
    let lambda_max = passing.last().unwrap_or(lambda_min);

    let points: Vec<f64> = if count == 1 || lambda_max == lambda_min {
        vec![lambda_min]
    } else {
        let step = (lambda_max - lambda_min) / (count - 1) as f64;
        (0..count)
            .map(|i| if i == count - 1 { lambda_max } else { lambda_min + step * i as f64 })
            .enumerate()
            .filter(|&(i, x)| i == 0 || i == count - 1 || f.value_at(x) > tau)
            .map(|(_, x)| x)
            .collect()
    };
    Ok(SupportRegion {
        points,
        kappa,
        tau,
        lambda_min,
        lambda_max,
    })
}
