use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Chebyshev polynomials rescaled to an interval,
/// `φ_n(λ) = T_n((λ - center) / half_width)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBasis")]
pub struct ChebyshevBasis {
    center: f64,
    half_width: f64,
}

#[derive(Deserialize)]
struct RawBasis {
    center: f64,
    half_width: f64,
}

impl TryFrom<RawBasis> for ChebyshevBasis {
    type Error = Error;

    fn try_from(raw: RawBasis) -> Result<Self> {
        ChebyshevBasis::new(raw.center, raw.half_width)
    }
}

impl ChebyshevBasis {
    pub fn new(center: f64, half_width: f64) -> Result<Self> {
        if !center.is_finite() || !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::invalid(format!(
                "Chebyshev basis needs finite center and positive half-width, got ({center}, {half_width})"
            )));
        }
        Ok(ChebyshevBasis { center, half_width })
    }

    /// Basis adapted to `[lo, hi]`. A degenerate interval gets half-width 1.
    pub fn for_interval(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::invalid(format!("empty interval [{lo}, {hi}]")));
        }
        let half = 0.5 * (hi - lo);
        ChebyshevBasis::new(0.5 * (lo + hi), if half > 0.0 { half } else { 1.0 })
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    fn scaled(&self, lambda: f64) -> f64 {
        (lambda - self.center) / self.half_width
    }

    /// `φ_n(λ)` by the three-term recurrence.
    pub fn eval(&self, n: usize, lambda: f64) -> f64 {
        let y = self.scaled(lambda);
        let (mut prev, mut cur) = (1.0, y);
        match n {
            0 => 1.0,
            _ => {
                for _ in 1..n {
                    let next = 2.0 * y * cur - prev;
                    prev = cur;
                    cur = next;
                }
                cur
            }
        }
    }

    /// `[φ_0(λ), …, φ_{count-1}(λ)]`.
    pub fn eval_all(&self, count: usize, lambda: f64) -> Vec<f64> {
        let y = self.scaled(lambda);
        let mut out = Vec::with_capacity(count);
        for n in 0..count {
            let v = match n {
                0 => 1.0,
                1 => y,
                _ => 2.0 * y * out[n - 1] - out[n - 2],
            };
            out.push(v);
        }
        out
    }

    /// `Σ c_n φ_n(λ)` by Clenshaw's recurrence.
    pub fn clenshaw(&self, coeffs: &[f64], lambda: f64) -> f64 {
        let y = self.scaled(lambda);
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in coeffs.iter().skip(1).rev() {
            let b0 = c + 2.0 * y * b1 - b2;
            b2 = b1;
            b1 = b0;
        }
        match coeffs.first() {
            Some(&c0) => c0 + y * b1 - b2,
            None => 0.0,
        }
    }

    /// Monomial coefficients (ascending powers of `λ`) of `Σ c_n φ_n`.
    pub fn to_monomial(&self, coeffs: &[f64]) -> Vec<f64> {
        let len = coeffs.len().max(1);
        // y(λ) = (λ - center) / half_width as a degree-one polynomial.
        let y = [-self.center / self.half_width, 1.0 / self.half_width];
        let mut out = vec![0.0; len];
        let mut prev = vec![1.0];
        let mut cur = y.to_vec();
        for (n, &c) in coeffs.iter().enumerate() {
            let term: &[f64] = match n {
                0 => &prev,
                1 => &cur,
                _ => {
                    let mut next = poly_mul(&cur, &y);
                    for v in &mut next {
                        *v *= 2.0;
                    }
                    for (v, p) in next.iter_mut().zip(&prev) {
                        *v -= p;
                    }
                    prev = std::mem::replace(&mut cur, next);
                    &cur
                }
            };
            for (o, t) in out.iter_mut().zip(term) {
                *o += c * t;
            }
        }
        out
    }

    /// `count` Chebyshev coefficients interpolating `f` at the Chebyshev
    /// nodes of the interval. Exact for polynomials of degree below `count`.
    pub fn interpolate(&self, count: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
        let k = count as f64;
        let nodes: Vec<f64> = (0..count)
            .map(|i| (std::f64::consts::PI * (i as f64 + 0.5) / k).cos())
            .collect();
        let values: Vec<f64> = nodes.iter().map(|&y| f(self.center + self.half_width * y)).collect();
        (0..count)
            .map(|j| {
                let s: f64 = nodes
                    .iter()
                    .zip(&values)
                    .enumerate()
                    .map(|(i, (_, v))| v * (std::f64::consts::PI * j as f64 * (i as f64 + 0.5) / k).cos())
                    .sum();
                if j == 0 { s / k } else { 2.0 * s / k }
            })
            .collect()
    }

    /// Chebyshev coefficients of a monomial-form polynomial.
    pub fn from_monomial(&self, monomial: &[f64]) -> Vec<f64> {
        self.interpolate(monomial.len().max(1), |x| horner(monomial, x))
    }
}

/// Evaluate ascending-power coefficients at `x`.
pub fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

pub(crate) fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `T_n(y)` for any real `y`, including `|y| > 1`.
pub fn chebyshev_t(n: usize, y: f64) -> f64 {
    ChebyshevBasis { center: 0.0, half_width: 1.0 }.eval(n, y)
}
