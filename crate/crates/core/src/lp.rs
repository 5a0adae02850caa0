//! Dense two-phase simplex for small bounded linear programs.
//!
//! Solves `max cᵀx` subject to `Ax = b` and `0 ≤ x ≤ u`. Problem sizes here
//! are a few dozen variables, so the tableau is dense and Bland's rule is
//! used throughout to rule out cycling on the (very common) degenerate
//! vertices.

use thiserror::Error;

const PIVOT_EPS: f64 = 1e-11;
const FEAS_EPS: f64 = 1e-9;
const MAX_PIVOTS: usize = 50_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("constraint matrix has {rows} rows but the right-hand side has {rhs}")]
    Shape { rows: usize, rhs: usize },
    #[error("problem is infeasible (phase-one residual {0:e})")]
    Infeasible(f64),
    #[error("pivot limit reached")]
    PivotLimit,
    #[error("non-finite coefficient in the problem data")]
    NonFinite,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

struct Tableau {
    // rows × (cols + 1); the last column is the right-hand side
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn rhs(&self, r: usize) -> f64 {
        self.t[r][self.cols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let inv = 1.0 / self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v *= inv;
        }
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    /// Maximizes `obj · x` over the columns marked usable.
    fn optimize(&mut self, obj: &[f64], usable: &[bool]) -> Result<(), LpError> {
        for _ in 0..MAX_PIVOTS {
            let entering = (0..self.cols).find(|&j| {
                if !usable[j] || self.basis.contains(&j) {
                    return false;
                }
                let reduced = obj[j]
                    - self
                        .basis
                        .iter()
                        .enumerate()
                        .map(|(r, &b)| obj[b] * self.t[r][j])
                        .sum::<f64>();
                reduced > PIVOT_EPS
            });
            let Some(c) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.t.len() {
                let a = self.t[r][c];
                if a > PIVOT_EPS {
                    let ratio = self.rhs(r) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - PIVOT_EPS
                                || (ratio <= lratio + PIVOT_EPS && self.basis[r] < self.basis[lr])
                            {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            // Every variable is boxed, so an unbounded ray cannot occur.
            let (r, _) = leave.ok_or(LpError::PivotLimit)?;
            self.pivot(r, c);
        }
        Err(LpError::PivotLimit)
    }
}

/// Maximizes `c·x` subject to `a_eq x = b_eq` and `0 ≤ x ≤ upper`.
pub fn maximize(
    c: &[f64],
    a_eq: &[Vec<f64>],
    b_eq: &[f64],
    upper: &[f64],
) -> Result<LpSolution, LpError> {
    let n = c.len();
    let m = a_eq.len();
    if b_eq.len() != m {
        return Err(LpError::Shape { rows: m, rhs: b_eq.len() });
    }
    let finite = c.iter().chain(b_eq).chain(upper).all(|v| v.is_finite())
        && a_eq.iter().all(|row| row.len() == n && row.iter().all(|v| v.is_finite()));
    if !finite {
        return Err(LpError::NonFinite);
    }

    // Columns: x (n) | bound slacks (n) | artificials (m).
    let cols = 2 * n + m;
    let mut t = Vec::with_capacity(m + n);
    let mut basis = Vec::with_capacity(m + n);
    for (i, row) in a_eq.iter().enumerate() {
        let sign = if b_eq[i] < 0.0 { -1.0 } else { 1.0 };
        let mut r = vec![0.0; cols + 1];
        for j in 0..n {
            r[j] = sign * row[j];
        }
        r[2 * n + i] = 1.0;
        r[cols] = sign * b_eq[i];
        t.push(r);
        basis.push(2 * n + i);
    }
    for j in 0..n {
        let mut r = vec![0.0; cols + 1];
        r[j] = 1.0;
        r[n + j] = 1.0;
        r[cols] = upper[j].max(0.0);
        t.push(r);
        basis.push(n + j);
    }
    let mut tab = Tableau { t, basis, cols };

    let mut phase1 = vec![0.0; cols];
    for v in phase1.iter_mut().skip(2 * n) {
        *v = -1.0;
    }
    let all = vec![true; cols];
    tab.optimize(&phase1, &all)?;
    let residual: f64 = (0..tab.t.len())
        .filter(|&r| tab.basis[r] >= 2 * n)
        .map(|r| tab.rhs(r).abs())
        .sum();
    if residual > FEAS_EPS {
        return Err(LpError::Infeasible(residual));
    }

    // Drive artificials out of the basis; rows where that is impossible are
    // redundant and dropped.
    let mut r = 0;
    while r < tab.t.len() {
        if tab.basis[r] >= 2 * n {
            match (0..2 * n).find(|&j| tab.t[r][j].abs() > PIVOT_EPS && !tab.basis.contains(&j)) {
                Some(j) => {
                    tab.pivot(r, j);
                    r += 1;
                }
                None => {
                    tab.t.remove(r);
                    tab.basis.remove(r);
                }
            }
        } else {
            r += 1;
        }
    }

    let mut obj = vec![0.0; cols];
    obj[..n].copy_from_slice(c);
    let usable: Vec<bool> = (0..cols).map(|j| j < 2 * n).collect();
    tab.optimize(&obj, &usable)?;

    let mut x = vec![0.0; n];
    for (r, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] = tab.rhs(r).clamp(0.0, upper[b]);
        }
    }
    let objective = x.iter().zip(c).map(|(a, b)| a * b).sum();
    Ok(LpSolution { x, objective })
}
