//! Spectra of consensus-relevant matrices and the empirical spectral
//! distribution built from them.
//!
//! A [`Spectrum`] is the sorted list of real eigenvalues of an `N × N`
//! matrix. All matrices handled here are symmetric or similar to a
//! symmetric matrix, so a symmetric eigensolver is enough; the
//! row-normalized Laplacian `I - D⁻¹A` is diagonalized through its
//! symmetric twin `I - D^{-1/2} A D^{-1/2}`.

mod density;
mod region;

pub use density::{
    density_from_spectra, kernel_density, load_analytic_density, monte_carlo_density,
    monte_carlo_spectra, silverman_bandwidth, GridSpec, Provenance, SpectralDensity,
    BANDWIDTH_FLOOR,
};
pub use region::{support_region, SupportRegion};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{is_connected, Graph};

/// Which matrix a spectrum was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixKind {
    Adjacency,
    Laplacian,
    RowNormalizedLaplacian,
    Weight,
    /// Any other symmetric matrix handed to [`symmetric_eigenvalues`].
    General,
}

impl MatrixKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "adjacency" => Some(MatrixKind::Adjacency),
            "laplacian" => Some(MatrixKind::Laplacian),
            "row-normalized-laplacian" => Some(MatrixKind::RowNormalizedLaplacian),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MatrixKind::Adjacency => "adjacency",
            MatrixKind::Laplacian => "laplacian",
            MatrixKind::RowNormalizedLaplacian => "row-normalized-laplacian",
            MatrixKind::Weight => "weight",
            MatrixKind::General => "general",
        }
    }
}

/// Sorted real eigenvalues `λ_1 ≤ … ≤ λ_N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    values: Vec<f64>,
    source: MatrixKind,
}

impl Spectrum {
    /// Wrap eigenvalues, sorting them. Non-finite values are rejected.
    pub fn new(mut values: Vec<f64>, source: MatrixKind) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite eigenvalue {bad}")));
        }
        values.sort_by(f64::total_cmp);
        Ok(Spectrum { values, source })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn source(&self) -> MatrixKind {
        self.source
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Largest eigenvalue modulus.
    pub fn spectral_radius(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `scale · λ + shift` for every eigenvalue, re-sorted and relabelled.
    pub fn mapped(&self, scale: f64, shift: f64, source: MatrixKind) -> Spectrum {
        let mut values: Vec<f64> = self.values.iter().map(|v| scale * v + shift).collect();
        values.sort_by(f64::total_cmp);
        Spectrum { values, source }
    }

    /// The spectrum with the smallest eigenvalue removed.
    pub fn without_smallest(&self) -> Spectrum {
        Spectrum {
            values: self.values[1..].to_vec(),
            source: self.source,
        }
    }

    /// Plain-text form: one eigenvalue per line at 17 significant digits.
    pub fn to_text(&self) -> String {
        self.values.iter().map(|v| format!("{v:.16e}\n")).collect()
    }

    pub fn from_text(text: &str, source: MatrixKind) -> Result<Self> {
        let values = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.parse::<f64>().map_err(|e| Error::invalid(format!("bad eigenvalue `{l}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        Spectrum::new(values, source)
    }
}

/// Relative symmetry tolerance accepted by [`symmetric_eigenvalues`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// All eigenvalues of a dense real symmetric matrix, ascending.
pub fn symmetric_eigenvalues(matrix: &DMatrix<f64>) -> Result<Spectrum> {
    symmetric_eigenvalues_of_kind(matrix, MatrixKind::General)
}

pub(crate) fn symmetric_eigenvalues_of_kind(matrix: &DMatrix<f64>, kind: MatrixKind) -> Result<Spectrum> {
    if !matrix.is_square() {
        return Err(Error::DimensionMismatch {
            expected: matrix.nrows(),
            found: matrix.ncols(),
        });
    }
    let n = matrix.nrows();
    if n == 0 {
        return Spectrum::new(Vec::new(), kind);
    }
    let scale = matrix.amax().max(f64::MIN_POSITIVE);
    let mut max_asymmetry: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            max_asymmetry = max_asymmetry.max((matrix[(i, j)] - matrix[(j, i)]).abs());
        }
    }
    if max_asymmetry > SYMMETRY_TOLERANCE * scale {
        return Err(Error::NotSymmetric { max_asymmetry, scale });
    }
    let eigen = matrix.clone().symmetric_eigenvalues();
    Spectrum::new(eigen.iter().copied().collect(), kind)
}

pub fn adjacency_spectrum(g: &Graph) -> Result<Spectrum> {
    symmetric_eigenvalues_of_kind(&g.adjacency_matrix(), MatrixKind::Adjacency)
}

pub fn laplacian_spectrum(g: &Graph) -> Result<Spectrum> {
    symmetric_eigenvalues_of_kind(&g.laplacian_matrix(), MatrixKind::Laplacian)
}

/// `I - D^{-1/2} A D^{-1/2}`, the symmetric matrix similar to `L̂_R = I - D⁻¹A`.
pub fn symmetric_normalized_laplacian(g: &Graph) -> Result<DMatrix<f64>> {
    if let Some(node) = g.degrees().iter().position(|&d| d == 0) {
        return Err(Error::ZeroDegree { node });
    }
    let inv_sqrt: Vec<f64> = g.degrees().iter().map(|&d| 1.0 / (d as f64).sqrt()).collect();
    let mut s = DMatrix::identity(g.node_count(), g.node_count());
    for (u, v) in g.edges() {
        let w = inv_sqrt[u] * inv_sqrt[v];
        s[(u, v)] = -w;
        s[(v, u)] = -w;
    }
    Ok(s)
}

/// Eigenvalues of the row-normalized Laplacian `I - D⁻¹A`.
pub fn row_normalized_laplacian_spectrum(g: &Graph) -> Result<Spectrum> {
    let s = symmetric_normalized_laplacian(g)?;
    symmetric_eigenvalues_of_kind(&s, MatrixKind::RowNormalizedLaplacian)
}

pub fn matrix_spectrum(g: &Graph, kind: MatrixKind) -> Result<Spectrum> {
    match kind {
        MatrixKind::Adjacency => adjacency_spectrum(g),
        MatrixKind::Laplacian => laplacian_spectrum(g),
        MatrixKind::RowNormalizedLaplacian => row_normalized_laplacian_spectrum(g),
        MatrixKind::Weight | MatrixKind::General => {
            Err(Error::invalid("weight spectra depend on α; use WeightMatrix::spectrum"))
        }
    }
}

/// The part of a graph's spectrum that a density should describe.
///
/// Laplacian kinds of a connected graph carry exactly one structural zero
/// (the consensus mode); it is removed so the density describes only the
/// modes a filter must suppress. Disconnected graphs are rejected for
/// these kinds.
pub fn density_spectrum(g: &Graph, kind: MatrixKind) -> Result<Spectrum> {
    match kind {
        MatrixKind::Laplacian | MatrixKind::RowNormalizedLaplacian => {
            if g.min_degree() == 0 {
                let node = g.degrees().iter().position(|&d| d == 0).unwrap_or(0);
                return Err(Error::ZeroDegree { node });
            }
            if !is_connected(g) {
                return Err(Error::Disconnected);
            }
            Ok(matrix_spectrum(g, kind)?.without_smallest())
        }
        _ => matrix_spectrum(g, kind),
    }
}

/// The empirical spectral distribution `F(λ) = #{λ_i ≤ λ} / N`.
pub fn empirical_distribution_at(s: &Spectrum, lambda: f64) -> f64 {
    if s.is_empty() {
        return 0.0;
    }
    let count = s.values.partition_point(|&v| v <= lambda);
    count as f64 / s.len() as f64
}
