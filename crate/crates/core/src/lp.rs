//! Dense two-phase simplex method with Bland's rule, for small problems.
//!
//! Solves `max c·x` subject to `A x = b`, `x >= 0` and also returns the
//! dual multipliers `y` with `Aᵀ y >= c` and `b·y = c·x` at the optimum.

use crate::error::{Error, Result};

const TOL: f64 = 1e-11;

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub value: f64,
}

struct Tableau {
    m: usize,
    width: usize,
    /// `m` constraint rows followed by the objective row; last column is the rhs.
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let factor = row[c];
            if factor != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= factor * pv;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Runs simplex iterations on the objective row; columns `>= allowed` may
    /// not enter.
    fn optimize(&mut self, allowed: usize) -> Result<()> {
        let obj = self.m;
        let rhs = self.width - 1;
        for _ in 0..10_000 {
            let Some(enter) = (0..allowed).find(|&j| self.rows[obj][j] < -TOL) else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let a = self.rows[i][enter];
                if a > TOL {
                    let ratio = self.rows[i][rhs] / a;
                    leave = match leave {
                        Some((l, best))
                            if ratio > best + TOL
                                || (ratio > best - TOL && self.basis[i] > self.basis[l]) =>
                        {
                            Some((l, best))
                        }
                        _ => Some((i, ratio)),
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Err(Error::LpNumericalFailure("objective is unbounded".into()));
            };
            self.pivot(r, enter);
        }
        Err(Error::LpNumericalFailure("iteration limit reached".into()))
    }
}

/// `max c·x` s.t. `A x = b`, `x >= 0`; `a` is given as `m` rows of length `n`.
pub fn maximize(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Result<LpSolution> {
    let m = a.len();
    let n = c.len();
    if b.len() != m || a.iter().any(|r| r.len() != n) {
        return Err(Error::LpNumericalFailure("inconsistent problem dimensions".into()));
    }
    if a.iter().flatten().chain(b).chain(c).any(|v| !v.is_finite()) {
        return Err(Error::LpNumericalFailure("non-finite problem data".into()));
    }
    let width = n + m + 1;
    let sign: Vec<f64> = b.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect();
    let mut rows = Vec::with_capacity(m + 1);
    for i in 0..m {
        let mut row = vec![0.0; width];
        for j in 0..n {
            row[j] = sign[i] * a[i][j];
        }
        row[n + i] = 1.0;
        row[width - 1] = sign[i] * b[i];
        rows.push(row);
    }
    // phase 1: maximize -Σ artificials
    let mut obj = vec![0.0; width];
    for row in &rows {
        for j in 0..n {
            obj[j] -= row[j];
        }
        obj[width - 1] -= row[width - 1];
    }
    rows.push(obj);
    let mut t = Tableau { m, width, rows, basis: (n..n + m).collect() };
    t.optimize(n)?;
    let infeasibility = -t.rows[m][width - 1];
    if infeasibility > 1e-9 * (1.0 + b.iter().map(|v| v.abs()).sum::<f64>()) {
        return Err(Error::LpNumericalFailure(format!("infeasible (residual {infeasibility:e})")));
    }
    // drive zero-level artificials out of the basis where possible
    for r in 0..m {
        if t.basis[r] >= n {
            if let Some(c) = (0..n).find(|&j| t.rows[r][j].abs() > 1e-9) {
                t.pivot(r, c);
            }
        }
    }
    // phase 2
    let cost = |j: usize| if j < n { c[j] } else { 0.0 };
    let mut obj = vec![0.0; width];
    for (j, o) in obj.iter_mut().enumerate() {
        let cb: f64 = (0..m).map(|i| cost(t.basis[i]) * t.rows[i][j]).sum();
        *o = if j == width - 1 { cb } else { cb - cost(j) };
    }
    t.rows[m] = obj;
    t.optimize(n)?;

    let mut x = vec![0.0; n];
    for i in 0..m {
        if t.basis[i] < n {
            x[t.basis[i]] = t.rows[i][width - 1];
        }
    }
    // y = c_B B^{-1}; the artificial columns of the objective row hold it.
    let y: Vec<f64> = (0..m).map(|i| sign[i] * t.rows[m][n + i]).collect();
    let value = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    Ok(LpSolution { x, y, value })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_problem_with_duals() {
        // max x1 + 2 x2 s.t. x1 + x2 + s1 = 4, x1 + 3 x2 + s2 = 6
        let a = vec![vec![1.0, 1.0, 1.0, 0.0], vec![1.0, 3.0, 0.0, 1.0]];
        let sol = maximize(&a, &[4.0, 6.0], &[1.0, 2.0, 0.0, 0.0]).unwrap();
        assert!((sol.value - 5.0).abs() < 1e-12);
        assert!((sol.x[0] - 3.0).abs() < 1e-12 && (sol.x[1] - 1.0).abs() < 1e-12);
        assert!((sol.y[0] - 0.5).abs() < 1e-12 && (sol.y[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn negative_rhs_and_redundant_rows() {
        // x1 - x2 = -1 written twice
        let a = vec![vec![1.0, -1.0], vec![2.0, -2.0]];
        let sol = maximize(&a, &[-1.0, -2.0], &[-1.0, -1.0]).unwrap();
        assert!((sol.value + 1.0).abs() < 1e-12);
        let dual: f64 = sol.y[0] * -1.0 + sol.y[1] * -2.0;
        assert!((dual - sol.value).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let a = vec![vec![1.0, 1.0]];
        assert!(maximize(&a, &[-1.0], &[0.0, 0.0]).is_err());
        let a = vec![vec![1.0, -1.0]];
        assert!(maximize(&a, &[1.0], &[1.0, 0.0]).is_err());
    }
}
