//! Dantzig selector: minimal l1 norm subject to the scaled residual
//! correlation constraint
//!
//! ```text
//!   min |beta|_1  s.t.  |(1/n) D^{-1/2} X^T (y - X beta)|_inf <= r
//! ```
//!
//! solved as a linear program by variable splitting `beta = u - v` with
//! `u, v >= 0` and 2M inequality rows, via the in-house two-phase simplex.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CoefficientVector, RegressionInstance};
use crate::simplex::{solve_min_le, SimplexOptions};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DantzigConfig {
    /// Tuning radius r of the constraint.
    pub r: f64,
    pub lp_tol: f64,
    pub max_pivots: usize,
}

impl DantzigConfig {
    pub fn new(r: f64) -> Self {
        DantzigConfig {
            r,
            lp_tol: 1e-9,
            max_pivots: 200_000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DantzigResult {
    pub beta_hat: CoefficientVector,
    pub l1_norm: f64,
    pub feasible: bool,
    /// `|(1/n) D^{-1/2} X^T (y - X beta_hat)|_inf`.
    pub max_constraint: f64,
    pub pivots_used: usize,
    /// Smallest reduced cost at the final vertex (optimality certificate).
    pub min_reduced_cost: f64,
}

/// Scaled correlation vector `(1/n) D^{-1/2} X^T (y - X beta)`.
fn scaled_correlations(instance: &RegressionInstance, beta: &DVector<f64>) -> DVector<f64> {
    let residual = &instance.y - instance.design.apply(beta);
    let mut corr = instance.design.correlations(&residual);
    let norms = instance.design.column_norms();
    for j in 0..corr.len() {
        corr[j] /= norms[j];
    }
    corr
}

/// Checks the Dantzig constraint for an arbitrary candidate.
pub fn dantzig_feasibility(
    instance: &RegressionInstance,
    beta: &CoefficientVector,
    r: f64,
) -> Result<(bool, f64)> {
    if beta.len() != instance.m() {
        return Err(Error::invalid("dantzig_feasibility: dimension mismatch"));
    }
    let max_constraint = scaled_correlations(instance, beta.vector()).amax();
    Ok((max_constraint <= r, max_constraint))
}

/// Solves the Dantzig selector LP. Returns an explicit infeasibility error
/// when the constraint set is empty (possible only for r = 0 with `y`
/// outside the column span of `X`), and a resource error when the pivot
/// budget runs out.
pub fn fit_dantzig(
    instance: &RegressionInstance,
    config: &DantzigConfig,
) -> Result<DantzigResult> {
    if config.r < 0.0 || !config.r.is_finite() {
        return Err(Error::invalid("dantzig r must be nonnegative"));
    }
    if !(config.lp_tol > 0.0) {
        return Err(Error::invalid("lp_tol must be positive"));
    }
    let design = &instance.design;
    let m = design.m();
    let n = design.n() as f64;
    let norms = design.column_norms();

    // G = (1/n) D^{-1/2} X^T X, g = (1/n) D^{-1/2} X^T y.
    let gram = design.matrix().transpose() * design.matrix() / n;
    let xty = design.matrix().transpose() * &instance.y / n;

    // Variables (u, v); rows:  G(u-v) <= g + r,  -G(u-v) <= r - g.
    let n_vars = 2 * m;
    let mut a = Vec::with_capacity(2 * m);
    let mut b = Vec::with_capacity(2 * m);
    for sign in [1.0, -1.0] {
        for j in 0..m {
            let mut row = vec![0.0; n_vars];
            for k in 0..m {
                let gjk = sign * gram[(j, k)] / norms[j];
                row[k] = gjk;
                row[m + k] = -gjk;
            }
            a.push(row);
            b.push(config.r + sign * xty[j] / norms[j]);
        }
    }
    let c = vec![1.0; n_vars];

    let options = SimplexOptions {
        tol: config.lp_tol,
        max_pivots: config.max_pivots,
    };
    let solution = solve_min_le(&c, &a, &b, &options).map_err(|e| match e {
        Error::Infeasible(msg) => Error::Infeasible(format!(
            "dantzig constraint set is empty (r = {}): {msg}",
            config.r
        )),
        other => other,
    })?;

    let beta = DVector::from_fn(m, |j, _| solution.x[j] - solution.x[m + j]);
    let max_constraint = scaled_correlations(instance, &beta).amax();
    let beta_hat = CoefficientVector::from(beta);
    let l1_norm = beta_hat.l1_norm();
    Ok(DantzigResult {
        beta_hat,
        l1_norm,
        feasible: max_constraint <= config.r + config.lp_tol,
        max_constraint,
        pivots_used: solution.pivots,
        min_reduced_cost: solution.min_reduced_cost,
    })
}
