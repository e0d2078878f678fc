//! Dense two-phase simplex with Bland's anti-cycling rule.
//!
//! Solves `min c.x  s.t.  A x <= b, x >= 0` on a dense tableau. Rows with a
//! negative right-hand side are negated and given an artificial variable;
//! phase one minimizes the artificial sum, phase two the original objective.
//! Bland's rule (lowest eligible index enters, ties in the ratio test broken
//! by the lowest basic index) guarantees termination.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Feasibility / reduced-cost tolerance.
    pub tol: f64,
    /// Combined pivot budget across both phases.
    pub max_pivots: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            tol: 1e-9,
            max_pivots: 200_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    /// Values of the structural variables.
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
    /// Smallest reduced cost at termination; >= -tol certifies optimality.
    pub min_reduced_cost: f64,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    obj: Vec<f64>,
    obj_val: f64,
    basis: Vec<usize>,
    n_total: usize,
    pivots: usize,
    tol: f64,
    max_pivots: usize,
}

impl Tableau {
    fn pivot(&mut self, pivot_row: usize, pivot_col: usize) -> Result<()> {
        if self.pivots >= self.max_pivots {
            return Err(Error::ResourceExhausted(format!(
                "simplex pivot budget of {} exhausted",
                self.max_pivots
            )));
        }
        self.pivots += 1;
        let pivot = self.rows[pivot_row][pivot_col];
        let inv = 1.0 / pivot;
        for v in self.rows[pivot_row].iter_mut() {
            *v *= inv;
        }
        self.rhs[pivot_row] *= inv;
        for i in 0..self.rows.len() {
            if i == pivot_row {
                continue;
            }
            let factor = self.rows[i][pivot_col];
            if factor != 0.0 {
                let (head, tail) = if i < pivot_row {
                    let (a, b) = self.rows.split_at_mut(pivot_row);
                    (&mut a[i], &b[0])
                } else {
                    let (a, b) = self.rows.split_at_mut(i);
                    (&mut b[0], &a[pivot_row])
                };
                for (v, p) in head.iter_mut().zip(tail.iter()) {
                    *v -= factor * p;
                }
                self.rhs[i] -= factor * self.rhs[pivot_row];
            }
        }
        let factor = self.obj[pivot_col];
        if factor != 0.0 {
            for (v, p) in self.obj.iter_mut().zip(self.rows[pivot_row].iter()) {
                *v -= factor * p;
            }
            self.obj_val += factor * self.rhs[pivot_row];
        }
        self.basis[pivot_row] = pivot_col;
        Ok(())
    }

    /// Runs simplex iterations until optimality, with entering columns
    /// restricted to indices below `col_limit`.
    fn optimize(&mut self, col_limit: usize) -> Result<()> {
        loop {
            // Bland: smallest index with a negative reduced cost enters.
            let entering = (0..col_limit).find(|&j| self.obj[j] < -self.tol);
            let Some(col) = entering else {
                return Ok(());
            };
            // Ratio test; ties broken by the smallest basic variable index.
            let mut best: Option<(f64, usize, usize)> = None; // (ratio, basis var, row)
            for i in 0..self.rows.len() {
                let a = self.rows[i][col];
                if a > self.tol {
                    let ratio = self.rhs[i] / a;
                    let candidate = (ratio, self.basis[i], i);
                    best = match best {
                        None => Some(candidate),
                        Some(current) => {
                            if ratio < current.0 - self.tol
                                || (ratio < current.0 + self.tol && candidate.1 < current.1)
                            {
                                Some(candidate)
                            } else {
                                Some(current)
                            }
                        }
                    };
                }
            }
            match best {
                Some((_, _, row)) => self.pivot(row, col)?,
                None => {
                    return Err(Error::invalid(
                        "linear program is unbounded below".to_string(),
                    ))
                }
            }
        }
    }

    fn install_objective(&mut self, c: &[f64]) {
        self.obj = c.to_vec();
        self.obj.resize(self.n_total, 0.0);
        self.obj_val = 0.0;
        for i in 0..self.rows.len() {
            let j = self.basis[i];
            let factor = self.obj[j];
            if factor != 0.0 {
                let row = self.rows[i].clone();
                for (v, p) in self.obj.iter_mut().zip(row.iter()) {
                    *v -= factor * p;
                }
                self.obj_val += factor * self.rhs[i];
            }
        }
    }
}

/// Minimizes `c.x` over `{x >= 0 : a x <= b}`.
pub fn solve_min_le(
    c: &[f64],
    a: &[Vec<f64>],
    b: &[f64],
    options: &SimplexOptions,
) -> Result<LpSolution> {
    let n_vars = c.len();
    let m_rows = a.len();
    if b.len() != m_rows || a.iter().any(|row| row.len() != n_vars) {
        return Err(Error::invalid("simplex: inconsistent LP dimensions"));
    }

    let negated: Vec<bool> = b.iter().map(|&v| v < 0.0).collect();
    let n_artificial = negated.iter().filter(|&&v| v).count();
    let n_total = n_vars + m_rows + n_artificial;

    let mut rows = Vec::with_capacity(m_rows);
    let mut rhs = Vec::with_capacity(m_rows);
    let mut basis = Vec::with_capacity(m_rows);
    let mut artificial_cursor = n_vars + m_rows;
    for i in 0..m_rows {
        let sign = if negated[i] { -1.0 } else { 1.0 };
        let mut row = vec![0.0; n_total];
        for j in 0..n_vars {
            row[j] = sign * a[i][j];
        }
        row[n_vars + i] = sign; // slack
        if negated[i] {
            row[artificial_cursor] = 1.0;
            basis.push(artificial_cursor);
            artificial_cursor += 1;
        } else {
            basis.push(n_vars + i);
        }
        rows.push(row);
        rhs.push(sign * b[i]);
    }

    let mut tableau = Tableau {
        rows,
        rhs,
        obj: vec![0.0; n_total],
        obj_val: 0.0,
        basis,
        n_total,
        pivots: 0,
        tol: options.tol,
        max_pivots: options.max_pivots,
    };

    // Phase one: minimize the artificial sum.
    if n_artificial > 0 {
        let mut phase1 = vec![0.0; n_total];
        for j in n_vars + m_rows..n_total {
            phase1[j] = 1.0;
        }
        tableau.install_objective(&phase1);
        tableau.optimize(n_total)?;
        if tableau.obj_val > options.tol {
            return Err(Error::Infeasible(format!(
                "phase one residual {:.3e}",
                tableau.obj_val
            )));
        }
        // Drive leftover artificials out of the basis where possible;
        // rows without a nonzero structural/slack entry are redundant and
        // keep a zero-valued artificial harmlessly.
        for i in 0..tableau.rows.len() {
            if tableau.basis[i] >= n_vars + m_rows {
                if let Some(col) =
                    (0..n_vars + m_rows).find(|&j| tableau.rows[i][j].abs() > options.tol)
                {
                    tableau.pivot(i, col)?;
                }
            }
        }
    }

    // Phase two: the real objective, artificial columns barred from entering.
    tableau.install_objective(c);
    tableau.optimize(n_vars + m_rows)?;

    let mut x = vec![0.0; n_vars];
    for (i, &j) in tableau.basis.iter().enumerate() {
        if j < n_vars {
            x[j] = tableau.rhs[i];
        }
    }
    let min_reduced_cost = tableau.obj[..n_vars + m_rows]
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    Ok(LpSolution {
        x,
        objective: tableau.obj_val,
        pivots: tableau.pivots,
        min_reduced_cost,
    })
}
