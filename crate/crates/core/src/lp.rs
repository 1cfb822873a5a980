//! A small dense simplex solver.
//!
//! Problems arrive in inequality form
//!
//! ```text
//! minimize cᵀx  subject to  Gx ≤ h,  x_j ≥ 0 for flagged j, other x_j free
//! ```
//!
//! and are solved through their dual, which has one equality row per primal
//! variable. For minimax filter design that is `d + 1` rows against
//! `2|Λ_S|` columns, so the tableau stays tiny no matter how many sample
//! points are used. The primal solution is recovered as the simplex
//! multipliers of the optimal dual basis, recomputed from the original data
//! by an LU solve rather than read off the accumulated tableau.
//!
//! Pricing is Dantzig's rule with lowest-index tie-breaking; after a run of
//! degenerate pivots it falls back to Bland's rule until progress resumes,
//! which rules out cycling. Every choice is deterministic.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Hard cap on simplex pivots across both phases.
pub const MAX_PIVOTS: usize = 10_000;

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-12;
const DEGENERATE_RUN: usize = 50;

/// `minimize cᵀx` subject to `Gx ≤ h`.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityLp {
    pub objective: Vec<f64>,
    /// Row-major constraint matrix `G`, one `Vec` per row.
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    /// `nonnegative[j]` marks `x_j ≥ 0`; unmarked variables are free.
    pub nonnegative: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Multipliers of the inequality rows (nonnegative).
    pub duals: Vec<f64>,
    pub pivots: usize,
    /// `max_i (Gx - h)_i`, clipped at zero.
    pub primal_violation: f64,
    /// `|cᵀx + hᵀy|`.
    pub duality_gap: f64,
    /// `Σ_i y_i (h - Gx)_i`.
    pub complementarity: f64,
}

impl InequalityLp {
    fn validate(&self) -> Result<()> {
        let k = self.objective.len();
        if k == 0 {
            return Err(Error::invalid("LP has no variables"));
        }
        if self.nonnegative.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: self.nonnegative.len(),
            });
        }
        if self.rows.len() != self.rhs.len() {
            return Err(Error::DimensionMismatch {
                expected: self.rows.len(),
                found: self.rhs.len(),
            });
        }
        if let Some(row) = self.rows.iter().find(|r| r.len() != k) {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: row.len(),
            });
        }
        let finite = self.objective.iter().chain(&self.rhs).chain(self.rows.iter().flatten());
        if finite.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("LP data must be finite"));
        }
        Ok(())
    }
}

/// Dense tableau for `min costᵀz, Az = b, z ≥ 0` with artificial columns.
struct Tableau {
    rows: usize,
    width: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
    redundant: Vec<bool>,
    pivots: usize,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.data[i * self.width + self.width - 1]
    }

    fn objective_row(&self) -> usize {
        self.rows
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let inv = 1.0 / self.at(pr, pc);
        for v in &mut self.data[pr * w..(pr + 1) * w] {
            *v *= inv;
        }
        let pivot_row: Vec<f64> = self.data[pr * w..(pr + 1) * w].to_vec();
        for i in 0..=self.rows {
            if i == pr {
                continue;
            }
            let factor = self.data[i * w + pc];
            if factor != 0.0 {
                for (v, p) in self.data[i * w..(i + 1) * w].iter_mut().zip(&pivot_row) {
                    *v -= factor * p;
                }
                self.data[i * w + pc] = 0.0;
            }
        }
        self.basis[pr] = pc;
        self.pivots += 1;
    }

    /// Run simplex iterations over columns `0..allowed` until optimal.
    fn optimize(&mut self, allowed: usize) -> Result<()> {
        let obj = self.objective_row();
        let mut degenerate_run = 0;
        loop {
            if self.pivots >= MAX_PIVOTS {
                return Err(Error::LpStall { pivots: self.pivots });
            }
            let bland = degenerate_run > DEGENERATE_RUN;
            let mut entering = None;
            let mut best = -COST_TOL;
            for j in 0..allowed {
                let d = self.at(obj, j);
                if d < best {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(pc) = entering else { return Ok(()) };

            let mut leaving: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                if self.redundant[i] {
                    continue;
                }
                let a = self.at(i, pc);
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs(i).max(0.0) / a;
                leaving = match leaving {
                    None => Some((i, ratio)),
                    Some((r, best)) => {
                        let tie = (ratio - best).abs() <= 1e-12 * best.abs().max(1.0);
                        if ratio < best && !tie || tie && self.basis[i] < self.basis[r] {
                            Some((i, ratio))
                        } else {
                            Some((r, best))
                        }
                    }
                };
            }
            let Some((pr, ratio)) = leaving else {
                return Err(Error::LpInternal(format!("unbounded direction at column {pc}")));
            };
            if ratio <= 1e-14 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(pr, pc);
        }
    }
}

struct StandardSolution {
    /// Optimal basis column per row; `None` for rows found redundant.
    basis: Vec<Option<usize>>,
    pivots: usize,
}

/// Two-phase simplex for `min costᵀz, Az = b, z ≥ 0`; `a` is row-major `rows × cols`.
fn solve_standard(a: &[Vec<f64>], b: &[f64], cost: &[f64]) -> Result<StandardSolution> {
    let rows = a.len();
    let real = cost.len();
    let width = real + rows + 1;
    let mut data = vec![0.0; (rows + 1) * width];
    for i in 0..rows {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..real {
            data[i * width + j] = sign * a[i][j];
        }
        data[i * width + real + i] = 1.0;
        data[i * width + width - 1] = sign * b[i];
    }
    // Phase one objective: sum of artificials, priced out against the basis.
    for i in 0..rows {
        for j in 0..real {
            data[rows * width + j] -= data[i * width + j];
        }
        data[rows * width + width - 1] -= data[i * width + width - 1];
    }
    let mut t = Tableau {
        rows,
        width,
        data,
        basis: (real..real + rows).collect(),
        redundant: vec![false; rows],
        pivots: 0,
    };
    t.optimize(real)?;
    let scale = b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let infeasibility = -t.rhs(rows);
    if infeasibility > 1e-9 * scale {
        return Err(Error::LpInternal(format!(
            "infeasible: phase one ends at {infeasibility:e}"
        )));
    }

    // Drive remaining artificials out of the basis; rows where that is
    // impossible are linear combinations of the others.
    for i in 0..rows {
        if t.basis[i] < real {
            continue;
        }
        let candidate = (0..real)
            .filter(|&j| t.at(i, j).abs() > 1e-9)
            .max_by(|&x, &y| t.at(i, x).abs().total_cmp(&t.at(i, y).abs()));
        match candidate {
            Some(j) => t.pivot(i, j),
            None => t.redundant[i] = true,
        }
    }

    // Phase two objective row.
    let obj = rows * width;
    for j in 0..width {
        t.data[obj + j] = if j < real { cost[j] } else { 0.0 };
    }
    for i in 0..rows {
        let cb = if t.basis[i] < real { cost[t.basis[i]] } else { 0.0 };
        if cb != 0.0 {
            for j in 0..width {
                t.data[obj + j] -= cb * t.data[i * width + j];
            }
        }
    }
    t.optimize(real)?;

    Ok(StandardSolution {
        basis: (0..rows)
            .map(|i| (!t.redundant[i] && t.basis[i] < real).then_some(t.basis[i]))
            .collect(),
        pivots: t.pivots,
    })
}

/// Solve an inequality-form LP to optimality.
pub fn solve_lp(lp: &InequalityLp) -> Result<LpSolution> {
    lp.validate()?;
    let k = lp.objective.len();
    let m = lp.rows.len();
    let slack_vars: Vec<usize> = (0..k).filter(|&j| lp.nonnegative[j]).collect();

    // Dual standard form: rows = primal variables, columns = [y | s].
    let cols = m + slack_vars.len();
    let mut a = vec![vec![0.0; cols]; k];
    for (i, row) in lp.rows.iter().enumerate() {
        for j in 0..k {
            a[j][i] = row[j];
        }
    }
    for (idx, &j) in slack_vars.iter().enumerate() {
        a[j][m + idx] = -1.0;
    }
    let b: Vec<f64> = lp.objective.iter().map(|c| -c).collect();
    let mut cost = lp.rhs.clone();
    cost.extend(std::iter::repeat_n(0.0, slack_vars.len()));

    let sol = solve_standard(&a, &b, &cost)?;

    // Recover basic values z_B = B⁻¹b and multipliers π = B⁻ᵀc_B using the
    // kept rows only. Dropped rows get π = 0 (their variable is expressible
    // through the others).
    let kept: Vec<usize> = (0..k).filter(|&i| sol.basis[i].is_some()).collect();
    let basic: Vec<usize> = kept.iter().map(|&i| sol.basis[i].unwrap()).collect();
    let r = kept.len();
    let bmat = DMatrix::from_fn(r, r, |i, j| a[kept[i]][basic[j]]);
    let lu = bmat.clone().lu();
    let zb = lu
        .solve(&DVector::from_iterator(r, kept.iter().map(|&i| b[i])))
        .ok_or_else(|| Error::LpInternal("singular optimal basis".into()))?;
    let pi = bmat
        .transpose()
        .lu()
        .solve(&DVector::from_iterator(r, basic.iter().map(|&j| cost[j])))
        .ok_or_else(|| Error::LpInternal("singular optimal basis".into()))?;

    let mut x = vec![0.0; k];
    for (idx, &row) in kept.iter().enumerate() {
        x[row] = pi[idx];
    }
    let mut duals = vec![0.0; m];
    for (idx, &col) in basic.iter().enumerate() {
        if col < m {
            duals[col] = zb[idx].max(0.0);
        }
    }

    let objective: f64 = lp.objective.iter().zip(&x).map(|(c, x)| c * x).sum();
    let slack: Vec<f64> = lp
        .rows
        .iter()
        .zip(&lp.rhs)
        .map(|(row, h)| h - row.iter().zip(&x).map(|(g, x)| g * x).sum::<f64>())
        .collect();
    let primal_violation = slack.iter().fold(0.0f64, |m, s| m.max(-s));
    let dual_objective: f64 = -lp.rhs.iter().zip(&duals).map(|(h, y)| h * y).sum::<f64>();
    let complementarity = duals.iter().zip(&slack).map(|(y, s)| y * s).sum();
    Ok(LpSolution {
        x,
        objective,
        duals,
        pivots: sol.pivots,
        primal_violation,
        duality_gap: (objective - dual_objective).abs(),
        complementarity,
    })
}
