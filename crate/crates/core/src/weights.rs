//! Consensus weight matrices `W = I - αL` and `W = I - αL̂_R`, the
//! consensus projector `J_ℓ`, and the degree corrective transform.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{is_connected, Graph};
use crate::spectral::{symmetric_eigenvalues_of_kind, MatrixKind, SpectralDensity, Spectrum};

/// How `W` is built from the graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// `W = I - α(D - A)`; doubly stochastic, `ℓ = 1`.
    Laplacian,
    /// `W = I - α(I - D⁻¹A)`; row stochastic, `ℓ = d`.
    RowNormalizedLaplacian,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Laplacian => "laplacian",
            Scheme::RowNormalizedLaplacian => "row-normalized-laplacian",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "laplacian" => Some(Scheme::Laplacian),
            "row-normalized-laplacian" => Some(Scheme::RowNormalizedLaplacian),
            _ => None,
        }
    }

    /// The matrix whose spectrum `σ` maps to `1 - ασ` in `W`.
    pub fn base_matrix(&self) -> MatrixKind {
        match self {
            Scheme::Laplacian => MatrixKind::Laplacian,
            Scheme::RowNormalizedLaplacian => MatrixKind::RowNormalizedLaplacian,
        }
    }

    pub fn build(&self, g: &Graph, alpha: f64) -> Result<WeightMatrix> {
        match self {
            Scheme::Laplacian => laplacian_weight(g, alpha),
            Scheme::RowNormalizedLaplacian => row_normalized_laplacian_weight(g, alpha),
        }
    }
}

/// A consensus weight matrix in compressed sparse row form.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    ell: Vec<f64>,
    scheme: Scheme,
    alpha: f64,
}

impl WeightMatrix {
    fn from_graph(g: &Graph, scheme: Scheme, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid(format!("weight scale α = {alpha} must be positive")));
        }
        if !is_connected(g) || g.node_count() < 2 {
            return Err(Error::Disconnected);
        }
        let n = g.node_count();
        let mut row_start = Vec::with_capacity(n + 1);
        let mut cols = Vec::with_capacity(n + 2 * g.edge_count());
        let mut vals = Vec::with_capacity(cols.capacity());
        row_start.push(0);
        for i in 0..n {
            let d = g.degrees()[i] as f64;
            let (diag, off) = match scheme {
                Scheme::Laplacian => (1.0 - alpha * d, alpha),
                Scheme::RowNormalizedLaplacian => (1.0 - alpha, alpha / d),
            };
            let mut placed_diag = false;
            for &j in g.neighbors(i) {
                if !placed_diag && j > i {
                    cols.push(i);
                    vals.push(diag);
                    placed_diag = true;
                }
                cols.push(j);
                vals.push(off);
            }
            if !placed_diag {
                cols.push(i);
                vals.push(diag);
            }
            row_start.push(cols.len());
        }
        let ell = match scheme {
            Scheme::Laplacian => vec![1.0; n],
            Scheme::RowNormalizedLaplacian => g.degrees().iter().map(|&d| d as f64).collect(),
        };
        Ok(WeightMatrix {
            row_start,
            cols,
            vals,
            ell,
            scheme,
            alpha,
        })
    }

    pub fn dim(&self) -> usize {
        self.row_start.len() - 1
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Left eigenvector for eigenvalue 1.
    pub fn ell(&self) -> &[f64] {
        &self.ell
    }

    /// `y = W x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, out) in y.iter_mut().enumerate() {
            let range = self.row_start[i]..self.row_start[i + 1];
            *out = self.cols[range.clone()]
                .iter()
                .zip(&self.vals[range])
                .map(|(&j, &w)| w * x[j])
                .sum();
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut w = DMatrix::zeros(n, n);
        for i in 0..n {
            for k in self.row_start[i]..self.row_start[i + 1] {
                w[(i, self.cols[k])] = self.vals[k];
            }
        }
        w
    }

    /// `D_ℓ^{1/2} W D_ℓ^{-1/2}`, symmetric for both schemes.
    pub fn symmetrized(&self) -> DMatrix<f64> {
        let root: Vec<f64> = self.ell.iter().map(|v| v.sqrt()).collect();
        let mut m = self.to_dense();
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                m[(i, j)] *= root[i] / root[j];
            }
        }
        // Exact symmetry: the two triangles differ only by rounding.
        for i in 0..self.dim() {
            for j in (i + 1)..self.dim() {
                let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = avg;
                m[(j, i)] = avg;
            }
        }
        m
    }

    /// Eigenvalues of `W`, all real for both schemes.
    pub fn spectrum(&self) -> Result<Spectrum> {
        symmetric_eigenvalues_of_kind(&self.symmetrized(), MatrixKind::Weight)
    }
}

/// `W = I - αL` with `L = D - A`.
pub fn laplacian_weight(g: &Graph, alpha: f64) -> Result<WeightMatrix> {
    WeightMatrix::from_graph(g, Scheme::Laplacian, alpha)
}

/// `W = I - α L̂_R` with `L̂_R = I - D⁻¹A`.
pub fn row_normalized_laplacian_weight(g: &Graph, alpha: f64) -> Result<WeightMatrix> {
    WeightMatrix::from_graph(g, Scheme::RowNormalizedLaplacian, alpha)
}

/// `α = 1/c` where `c` is the midpoint of `{σ : f(σ) > τ}` for a density of
/// the base matrix (`L` or `L̂_R`).
pub fn choose_alpha(f: &SpectralDensity, tau: f64) -> Result<f64> {
    let mut above = f
        .grid()
        .iter()
        .zip(f.values())
        .filter(|(_, v)| **v > tau)
        .map(|(x, _)| *x);
    let lo = above.next().ok_or(Error::NoMassAboveThreshold { tau })?;
    let hi = above.last().unwrap_or(lo);
    let center = 0.5 * (lo + hi);
    if center <= 0.0 {
        return Err(Error::invalid(format!(
            "support center {center} is not positive; α = 1/center undefined"
        )));
    }
    Ok(1.0 / center)
}

/// The rank-one projector `J_ℓ = 1ℓᵀ / (ℓᵀ1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusProjector {
    ell: Vec<f64>,
    normalization: f64,
}

pub fn consensus_projector(ell: &[f64]) -> Result<ConsensusProjector> {
    if ell.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::invalid("consensus weights must be finite and nonnegative"));
    }
    let normalization: f64 = ell.iter().sum();
    if normalization <= 0.0 {
        return Err(Error::invalid("consensus weights have zero normalization ℓᵀ1"));
    }
    Ok(ConsensusProjector {
        ell: ell.to_vec(),
        normalization,
    })
}

impl ConsensusProjector {
    pub fn ell(&self) -> &[f64] {
        &self.ell
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    /// The weighted average `ℓᵀx / ℓᵀ1`.
    pub fn average(&self, x: &[f64]) -> f64 {
        self.ell.iter().zip(x).map(|(l, x)| l * x).sum::<f64>() / self.normalization
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        vec![self.average(x); x.len()]
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.ell.len();
        DMatrix::from_fn(n, n, |_, j| self.ell[j] / self.normalization)
    }
}

/// Outcome of the three consensus conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsensusReport {
    pub row_sums_one: bool,
    pub left_eigenvector: bool,
    pub contracts: bool,
    /// `ρ(W - J_ℓ)`.
    pub rho: f64,
}

impl ConsensusReport {
    pub fn all_hold(&self) -> bool {
        self.row_sums_one && self.left_eigenvector && self.contracts
    }
}

/// Spectral radius of a real square matrix via its complex eigenvalues.
fn general_spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues().iter().fold(0.0, |r, z| r.max(z.norm()))
}

/// Check `W1 = 1`, `ℓᵀW = ℓᵀ` and `ρ(W - J_ℓ) < 1`.
pub fn check_consensus_conditions(wm: &WeightMatrix) -> Result<ConsensusReport> {
    let n = wm.dim();
    let ones = vec![1.0; n];
    let mut w1 = vec![0.0; n];
    wm.apply(&ones, &mut w1);
    let row_sums_one = w1.iter().all(|v| (v - 1.0).abs() <= 1e-12);

    let dense = wm.to_dense();
    let ell_scale = wm.ell.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let left_eigenvector = (0..n).all(|j| {
        let s: f64 = (0..n).map(|i| wm.ell[i] * dense[(i, j)]).sum();
        (s - wm.ell[j]).abs() <= 1e-10 * ell_scale
    });

    let projector = consensus_projector(&wm.ell)?;
    let deviation = dense - projector.to_dense();
    let root: Vec<f64> = wm.ell.iter().map(|v| v.sqrt()).collect();
    let rho = if root.iter().all(|&r| r > 0.0) {
        let sym = DMatrix::from_fn(n, n, |i, j| deviation[(i, j)] * root[i] / root[j]);
        let scale = sym.amax().max(1.0);
        let asym = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .fold(0.0f64, |m, (i, j)| m.max((sym[(i, j)] - sym[(j, i)]).abs()));
        if asym <= 1e-11 * scale {
            let sym = (&sym + sym.transpose()) * 0.5;
            symmetric_eigenvalues_of_kind(&sym, MatrixKind::General)?.spectral_radius()
        } else {
            general_spectral_radius(&deviation)
        }
    } else {
        general_spectral_radius(&deviation)
    };
    Ok(ConsensusReport {
        row_sums_one,
        left_eigenvector,
        contracts: rho < 1.0 - 1e-10,
        rho,
    })
}

/// `(dᵀ1 / 1ᵀ1) D⁻¹ x`, applied to the initial data.
///
/// Degree-weighted consensus (`ℓ = d`) of the transformed data is the plain
/// average of the original: `J_d T x₀ = (1ᵀx₀ / N) 1`.
pub fn corrective_transform(x: &[f64], g: &Graph) -> Result<Vec<f64>> {
    if x.len() != g.node_count() {
        return Err(Error::DimensionMismatch {
            expected: g.node_count(),
            found: x.len(),
        });
    }
    if let Some(node) = g.degrees().iter().position(|&d| d == 0) {
        return Err(Error::ZeroDegree { node });
    }
    let mean_degree = g.degrees().iter().sum::<usize>() as f64 / g.node_count() as f64;
    Ok(x.iter()
        .zip(g.degrees())
        .map(|(v, &d)| mean_degree * v / d as f64)
        .collect())
}
