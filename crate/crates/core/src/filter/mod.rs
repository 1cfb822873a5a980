//! Polynomial filters `p(λ) = 1 + (1 - λ) q(λ)` that pin the consensus
//! eigenvalue and shrink everything else.
//!
//! `q` is stored in a Chebyshev basis rescaled to the design interval, which
//! keeps the design LP well conditioned; the monomial form used by the
//! simulator is derived from it.

mod chebyshev;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{solve_lp, InequalityLp};
use crate::spectral::{Spectrum, SupportRegion};

pub use chebyshev::{chebyshev_t, horner, ChebyshevBasis};

/// Largest degree for which a monomial form is produced.
pub const MAX_MONOMIAL_DEGREE: usize = 10;

/// Eigenvalues within this distance of 1 count as the consensus eigenvalue.
pub const UNIT_TOLERANCE: f64 = 1e-8;

/// Newton baseline zeros closer than this are treated as one.
pub const DISTINCT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DesignMethod {
    /// LP minimax design over a density-derived support region.
    MinimaxLp,
    /// Zeros placed on the largest realized eigenvalues.
    NewtonBaseline,
    /// LP minimax design over the actual eigenvalues of the matrix in use.
    OracleMinimax,
}

impl DesignMethod {
    pub fn name(&self) -> &'static str {
        match self {
            DesignMethod::MinimaxLp => "minimax-lp",
            DesignMethod::NewtonBaseline => "newton-baseline",
            DesignMethod::OracleMinimax => "oracle-minimax",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFilter")]
pub struct FilterPolynomial {
    degree: usize,
    basis: ChebyshevBasis,
    q_coeffs: Vec<f64>,
    p_monomial: Option<Vec<f64>>,
    achieved_eps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    method: Option<DesignMethod>,
}

#[derive(Deserialize)]
struct RawFilter {
    degree: usize,
    basis: ChebyshevBasis,
    q_coeffs: Vec<f64>,
    p_monomial: Option<Vec<f64>>,
    /// `null` for filters that were not designed (NaN in memory).
    #[serde(default)]
    achieved_eps: Option<f64>,
    #[serde(default)]
    method: Option<DesignMethod>,
}

impl TryFrom<RawFilter> for FilterPolynomial {
    type Error = Error;

    fn try_from(raw: RawFilter) -> Result<Self> {
        if raw.degree == 0 || raw.q_coeffs.len() != raw.degree {
            return Err(Error::invalid(format!(
                "degree {} needs {} q coefficients, found {}",
                raw.degree,
                raw.degree,
                raw.q_coeffs.len()
            )));
        }
        if let Some(p) = &raw.p_monomial {
            if p.len() != raw.degree + 1 {
                return Err(Error::DimensionMismatch {
                    expected: raw.degree + 1,
                    found: p.len(),
                });
            }
        }
        if raw.q_coeffs.iter().chain(raw.p_monomial.iter().flatten()).any(|c| !c.is_finite()) {
            return Err(Error::invalid("filter coefficients must be finite"));
        }
        Ok(FilterPolynomial {
            degree: raw.degree,
            basis: raw.basis,
            q_coeffs: raw.q_coeffs,
            p_monomial: raw.p_monomial,
            achieved_eps: raw.achieved_eps.unwrap_or(f64::NAN),
            method: raw.method,
        })
    }
}

impl FilterPolynomial {
    /// Filter with the given `q` coefficients; the monomial form is derived
    /// when the degree allows. `achieved_eps` is left at `NaN` until measured.
    pub fn from_q(basis: ChebyshevBasis, q_coeffs: Vec<f64>) -> Result<Self> {
        let degree = q_coeffs.len();
        if degree == 0 {
            return Err(Error::invalid("filter degree must be at least 1"));
        }
        if q_coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("filter coefficients must be finite"));
        }
        let p_monomial = (degree <= MAX_MONOMIAL_DEGREE).then(|| {
            let q = basis.to_monomial(&q_coeffs);
            // p = 1 + q - λq
            let mut p = vec![0.0; degree + 1];
            p[0] = 1.0;
            for (k, c) in q.iter().enumerate() {
                p[k] += c;
                p[k + 1] -= c;
            }
            p
        });
        Ok(FilterPolynomial {
            degree,
            basis,
            q_coeffs,
            p_monomial,
            achieved_eps: f64::NAN,
            method: None,
        })
    }

    /// Filter built from a monomial `p` with `p(1) = 1`.
    pub fn from_monomial(basis: ChebyshevBasis, p: &[f64]) -> Result<Self> {
        if p.len() < 2 {
            return Err(Error::invalid("monomial filter needs degree at least 1"));
        }
        let at_one: f64 = p.iter().sum();
        let scale = p.iter().fold(1.0f64, |m, c| m.max(c.abs()));
        if (at_one - 1.0).abs() > 1e-9 * scale {
            return Err(Error::invalid(format!("p(1) = {at_one}, expected 1")));
        }
        // p(λ) - 1 = (λ - 1) r(λ); q = -r by synthetic division.
        let mut shifted = p.to_vec();
        shifted[0] -= 1.0;
        let d = p.len() - 1;
        let mut r = vec![0.0; d];
        let mut carry = 0.0;
        for k in (1..=d).rev() {
            carry = shifted[k] + carry;
            r[k - 1] = carry;
        }
        let q: Vec<f64> = r.iter().map(|c| -c).collect();
        let mut filter = FilterPolynomial::from_q(basis, basis.from_monomial(&q))?;
        if d <= MAX_MONOMIAL_DEGREE {
            filter.p_monomial = Some(p.to_vec());
        }
        Ok(filter)
    }

    /// Filter interpolating the map `p` (which must satisfy `p(1) = 1`)
    /// through `q(λ) = (p(λ) - 1) / (1 - λ)` at the basis' Chebyshev nodes,
    /// all of which must lie below 1.
    pub fn from_evaluator(basis: ChebyshevBasis, degree: usize, p: impl Fn(f64) -> f64) -> Result<Self> {
        if degree == 0 {
            return Err(Error::invalid("filter degree must be at least 1"));
        }
        let top = basis.center() + basis.half_width() * (std::f64::consts::PI / (2 * degree) as f64).cos();
        if top >= 1.0 - UNIT_TOLERANCE {
            return Err(Error::invalid("interpolation nodes must lie below 1"));
        }
        FilterPolynomial::from_q(basis, basis.interpolate(degree, |x| (p(x) - 1.0) / (1.0 - x)))
    }

    /// The unfiltered iteration, `p(λ) = λ`.
    pub fn plain() -> Self {
        let basis = ChebyshevBasis::new(0.0, 1.0).expect("unit basis");
        FilterPolynomial::from_q(basis, vec![-1.0]).expect("plain filter")
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn basis(&self) -> &ChebyshevBasis {
        &self.basis
    }

    pub fn q_coeffs(&self) -> &[f64] {
        &self.q_coeffs
    }

    /// `a_0, …, a_d` with `p(λ) = Σ a_k λ^k`, if `d ≤ 10`.
    pub fn p_monomial(&self) -> Option<&[f64]> {
        self.p_monomial.as_deref()
    }

    pub fn achieved_eps(&self) -> f64 {
        self.achieved_eps
    }

    pub fn method(&self) -> Option<DesignMethod> {
        self.method
    }

    fn with_design(mut self, method: DesignMethod, points: &[f64]) -> Self {
        self.achieved_eps = points.iter().fold(0.0f64, |m, &x| m.max(self.evaluate(x).abs()));
        self.method = Some(method);
        self
    }

    /// `p(λ)` through the Chebyshev form; `p(1) = 1` holds exactly.
    pub fn evaluate(&self, lambda: f64) -> f64 {
        1.0 + (1.0 - lambda) * self.basis.clenshaw(&self.q_coeffs, lambda)
    }

    pub fn evaluate_monomial(&self, lambda: f64) -> Result<f64> {
        self.p_monomial()
            .map(|p| horner(p, lambda))
            .ok_or(Error::NoMonomialForm(self.degree))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        FilterPolynomial::from_json(&std::fs::read_to_string(path)?)
    }
}

/// A support region together with the filter degree to design for it.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignProblem {
    pub region: SupportRegion,
    pub degree: usize,
}

/// Basis used for `q` in the design LP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QBasis {
    Chebyshev(ChebyshevBasis),
    Monomial,
}

/// Minimax LP over `points`: variables `(q_0, …, q_{d-1}, ε)`, two rows per
/// point bounding `±(1 + (1 - λ) q(λ))` by `ε`.
pub fn minimax_lp(points: &[f64], degree: usize, basis: QBasis) -> InequalityLp {
    let mut rows = Vec::with_capacity(2 * points.len());
    let mut rhs = Vec::with_capacity(2 * points.len());
    for &x in points {
        let phi: Vec<f64> = match basis {
            QBasis::Chebyshev(b) => b.eval_all(degree, x),
            QBasis::Monomial => (0..degree).map(|n| x.powi(n as i32)).collect(),
        };
        let g: Vec<f64> = phi.iter().map(|v| (1.0 - x) * v).collect();
        let mut upper = g.clone();
        upper.push(-1.0);
        let mut lower: Vec<f64> = g.iter().map(|v| -v).collect();
        lower.push(-1.0);
        rows.push(upper);
        rhs.push(-1.0);
        rows.push(lower);
        rhs.push(1.0);
    }
    let mut objective = vec![0.0; degree + 1];
    objective[degree] = 1.0;
    let mut nonnegative = vec![false; degree + 1];
    nonnegative[degree] = true;
    InequalityLp {
        objective,
        rows,
        rhs,
        nonnegative,
    }
}

fn check_design_points(points: &[f64], degree: usize) -> Result<()> {
    if degree == 0 {
        return Err(Error::invalid("filter degree must be at least 1"));
    }
    if let Some(&bad) = points.iter().find(|&&x| x >= 1.0) {
        return Err(Error::RegionTouchesUnity { lambda: bad });
    }
    if points.is_empty() {
        return Err(Error::EmptyRegion);
    }
    Ok(())
}

/// Optimal `ε` of the minimax LP with `q` in the plain monomial basis.
/// Only useful as a conditioning comparison.
pub fn minimax_eps_monomial_basis(points: &[f64], degree: usize) -> Result<f64> {
    check_design_points(points, degree)?;
    let sol = solve_lp(&minimax_lp(points, degree, QBasis::Monomial))?;
    Ok(sol.x[degree])
}

/// Minimax filter of the given degree over a support region.
pub fn design_minimax_filter(problem: &DesignProblem) -> Result<FilterPolynomial> {
    minimax_over_points(problem.region.points(), problem.degree, DesignMethod::MinimaxLp)
}

fn minimax_over_points(points: &[f64], degree: usize, method: DesignMethod) -> Result<FilterPolynomial> {
    check_design_points(points, degree)?;
    let lo = points.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = points.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let basis = ChebyshevBasis::for_interval(lo, hi)?;
    let sol = solve_lp(&minimax_lp(points, degree, QBasis::Chebyshev(basis)))?;
    log::debug!(
        "{} d={degree}: ε={:.6e} after {} pivots (gap {:.1e})",
        method.name(),
        sol.x[degree],
        sol.pivots,
        sol.duality_gap
    );
    let filter = FilterPolynomial::from_q(basis, sol.x[..degree].to_vec())?;
    Ok(filter.with_design(method, points))
}

fn nontrivial(spectrum: &Spectrum) -> Vec<f64> {
    spectrum
        .values()
        .iter()
        .copied()
        .filter(|x| (x - 1.0).abs() > UNIT_TOLERANCE)
        .collect()
}

/// Minimax design over the realized eigenvalues below `1 - κ`.
pub fn oracle_minimax_filter(spectrum: &Spectrum, kappa: f64, degree: usize) -> Result<FilterPolynomial> {
    let mut points: Vec<f64> = spectrum.values().iter().copied().filter(|&x| x < 1.0 - kappa).collect();
    points.dedup();
    if points.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let region = SupportRegion::from_points(points, kappa, 0.0)?;
    let filter = minimax_over_points(region.points(), degree, DesignMethod::OracleMinimax)?;
    Ok(filter.with_design(DesignMethod::OracleMinimax, &nontrivial(spectrum)))
}

/// Zeros for the Newton baseline: the `degree` distinct non-unit
/// eigenvalues of largest magnitude.
pub fn newton_zeros(spectrum: &Spectrum, degree: usize) -> Result<Vec<f64>> {
    let mut candidates = nontrivial(spectrum);
    candidates.sort_by(|a, b| b.abs().total_cmp(&a.abs()).then(b.total_cmp(a)));
    let mut zeros: Vec<f64> = Vec::with_capacity(degree);
    for x in candidates {
        if zeros.len() == degree {
            break;
        }
        if zeros.iter().all(|z| (z - x).abs() > DISTINCT_TOLERANCE) {
            zeros.push(x);
        }
    }
    if zeros.len() < degree {
        return Err(Error::InsufficientEigenvalues {
            needed: degree,
            found: zeros.len(),
        });
    }
    Ok(zeros)
}

/// Interpolating filter with `p(z) = 0` on [`newton_zeros`] and `p(1) = 1`.
pub fn newton_baseline_filter(spectrum: &Spectrum, degree: usize) -> Result<FilterPolynomial> {
    if degree == 0 {
        return Err(Error::invalid("filter degree must be at least 1"));
    }
    let zeros = newton_zeros(spectrum, degree)?;
    let lo = zeros.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = zeros.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let basis = ChebyshevBasis::for_interval(lo, hi)?;
    let product = |x: f64| zeros.iter().map(|z| (x - z) / (1.0 - z)).product::<f64>();
    let filter = FilterPolynomial::from_evaluator(basis, degree, product)?;
    Ok(filter.with_design(DesignMethod::NewtonBaseline, &nontrivial(spectrum)))
}

/// The closed-form optimum over a whole interval `[lo, hi]` below 1:
/// `p(λ) = T_d(y(λ)) / T_d(y(1))` with `y` the affine map onto `[-1, 1]`.
pub fn chebyshev_interval_filter(lo: f64, hi: f64, degree: usize) -> Result<FilterPolynomial> {
    check_design_points(&[lo, hi], degree)?;
    let basis = ChebyshevBasis::for_interval(lo, hi)?;
    let y = |x: f64| (x - basis.center()) / basis.half_width();
    let norm = chebyshev_t(degree, y(1.0));
    let mut filter = FilterPolynomial::from_evaluator(basis, degree, |x| chebyshev_t(degree, y(x)) / norm)?;
    filter.achieved_eps = 1.0 / norm.abs();
    Ok(filter)
}

/// `1 / |T_d((1 - c) / h)|`, the smallest attainable `max |p|` over `[lo, hi]`.
pub fn chebyshev_interval_optimum(lo: f64, hi: f64, degree: usize) -> f64 {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    1.0 / chebyshev_t(degree, (1.0 - c) / h).abs()
}

/// `max |p(λ)|` over all eigenvalues except the single one at 1.
pub fn predicted_spectral_radius(p: &FilterPolynomial, spectrum: &Spectrum) -> Result<f64> {
    let unit = spectrum.values().iter().filter(|x| (*x - 1.0).abs() <= UNIT_TOLERANCE).count();
    if unit != 1 {
        return Err(Error::UnitEigenvalueNotSimple { count: unit });
    }
    Ok(nontrivial(spectrum).iter().fold(0.0f64, |m, &x| m.max(p.evaluate(x).abs())))
}

/// Average contraction per iteration, `ln(ρ) / d`; `-∞` when `ρ = 0`.
pub fn per_iteration_rate(rho: f64, degree: usize) -> f64 {
    if rho == 0.0 {
        f64::NEG_INFINITY
    } else {
        rho.ln() / degree as f64
    }
}

/// Serde helpers writing non-finite rates as `"-inf"`, `"inf"`, `"nan"`.
pub mod rate_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn format(v: f64) -> String {
        if v == f64::NEG_INFINITY {
            "-inf".into()
        } else if v == f64::INFINITY {
            "inf".into()
        } else if v.is_nan() {
            "nan".into()
        } else {
            format!("{v}")
        }
    }

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            Repr::Number(*v).serialize(s)
        } else {
            Repr::Text(format(*v)).serialize(s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "-inf" => Ok(f64::NEG_INFINITY),
                "inf" => Ok(f64::INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("bad rate `{other}`"))),
            },
        }
    }
}
