//! Accelerated distributed average consensus on random graphs.
//!
//! The iteration `x ← Wx` converges to a weighted average at a rate set by
//! the second-largest eigenvalue modulus of `W`. Replacing every `d`-th state
//! by a polynomial combination `p(W)` of the last `d + 1` states, with `p`
//! chosen to be small on the spectrum and `p(1) = 1`, makes it converge much
//! faster. Here `p` is designed without knowing the graph: an approximate
//! spectral density of the random graph model stands in for the spectrum,
//! and a minimax linear program shapes `p` on the region where that density
//! has mass.
//!
//! ```
//! use consensus_accel::filter::{design_minimax_filter, DesignProblem};
//! use consensus_accel::spectral::SupportRegion;
//!
//! let points: Vec<f64> = (0..200).map(|i| -0.5 + 0.9 * i as f64 / 199.0).collect();
//! let region = SupportRegion::from_points(points, 0.05, 0.0)?;
//! let p = design_minimax_filter(&DesignProblem { region, degree: 4 })?;
//! assert_eq!(p.evaluate(1.0), 1.0);
//! assert!(p.achieved_eps() < 0.05);
//! # Ok::<(), consensus_accel::Error>(())
//! ```
//!
//! Modules, bottom-up: [`graph`] (random graph models), [`spectral`]
//! (eigenvalues, densities, design regions), [`weights`] (`W` and its
//! consensus projector), [`lp`] and [`filter`] (design), [`consensus`]
//! (simulation) and [`experiment`] (config-driven runs).

pub mod consensus;
pub mod error;
pub mod experiment;
pub mod filter;
pub mod graph;
pub mod lp;
pub mod seed;
pub mod spectral;
pub mod weights;

pub use consensus::{measure_rate, simulate, RateEstimate, SimulationConfig, Trajectory};
pub use error::{Error, Result};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentResult, Method};
pub use filter::{
    design_minimax_filter, newton_baseline_filter, oracle_minimax_filter, per_iteration_rate,
    predicted_spectral_radius, DesignMethod, DesignProblem, FilterPolynomial,
};
pub use graph::{ErdosRenyiParams, Graph, GraphModel, LatticeSbmParams};
pub use spectral::{MatrixKind, SpectralDensity, Spectrum, SupportRegion};
pub use weights::{Scheme, WeightMatrix};

/// The guide's code samples, compiled and run as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    struct Intro;
    #[doc = include_str!("../../../book/src/graphs.md")]
    struct Graphs;
    #[doc = include_str!("../../../book/src/spectra.md")]
    struct Spectra;
    #[doc = include_str!("../../../book/src/weights.md")]
    struct Weights;
    #[doc = include_str!("../../../book/src/filters.md")]
    struct Filters;
    #[doc = include_str!("../../../book/src/consensus.md")]
    struct Consensus;
    #[doc = include_str!("../../../book/src/experiments.md")]
    struct Experiments;
}
