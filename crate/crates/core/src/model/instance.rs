//! Regression instances and the loss triplet.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::model::coeffs::CoefficientVector;
use crate::model::design::DesignMatrix;

/// One regression problem: observations `y`, the design, and, on synthetic
/// data, the ground truth pieces (`f_true`, `beta_star`, `noise`).
#[derive(Debug, Clone)]
pub struct RegressionInstance {
    pub design: DesignMatrix,
    pub y: DVector<f64>,
    /// Values of the true regression function at the design points.
    pub f_true: Option<DVector<f64>>,
    pub beta_star: Option<CoefficientVector>,
    pub noise: Option<DVector<f64>>,
    pub sigma: f64,
}

impl RegressionInstance {
    /// Instance from observed data only (ingested files): no ground truth.
    pub fn from_data(design: DesignMatrix, y: DVector<f64>, sigma: f64) -> Result<Self> {
        if y.len() != design.n() {
            return Err(Error::invalid(format!(
                "response length {} does not match n = {}",
                y.len(),
                design.n()
            )));
        }
        Ok(RegressionInstance {
            design,
            y,
            f_true: None,
            beta_star: None,
            noise: None,
            sigma,
        })
    }

    /// Linear-model instance: y = X beta* + w, f = X beta*.
    pub fn linear(
        design: DesignMatrix,
        beta_star: CoefficientVector,
        noise: DVector<f64>,
        sigma: f64,
    ) -> Result<Self> {
        if beta_star.len() != design.m() || noise.len() != design.n() {
            return Err(Error::invalid("linear instance dimension mismatch"));
        }
        let f_true = design.apply(beta_star.vector());
        let y = &f_true + &noise;
        Ok(RegressionInstance {
            design,
            y,
            f_true: Some(f_true),
            beta_star: Some(beta_star),
            noise: Some(noise),
            sigma,
        })
    }

    /// Nonparametric instance: y = f + w with an arbitrary target `f_true`.
    /// `beta_star` may record the sparse vector `f_true` was built around.
    pub fn nonparametric(
        design: DesignMatrix,
        f_true: DVector<f64>,
        beta_star: Option<CoefficientVector>,
        noise: DVector<f64>,
        sigma: f64,
    ) -> Result<Self> {
        if f_true.len() != design.n() || noise.len() != design.n() {
            return Err(Error::invalid("nonparametric instance dimension mismatch"));
        }
        if let Some(b) = &beta_star {
            if b.len() != design.m() {
                return Err(Error::invalid("beta_star dimension mismatch"));
            }
        }
        let y = &f_true + &noise;
        Ok(RegressionInstance {
            design,
            y,
            f_true: Some(f_true),
            beta_star,
            noise: Some(noise),
            sigma,
        })
    }

    pub fn n(&self) -> usize {
        self.design.n()
    }

    pub fn m(&self) -> usize {
        self.design.m()
    }

    /// True when the recorded target is exactly the linear predictor of
    /// `beta_star` (within `tol` componentwise).
    pub fn is_linear(&self, tol: f64) -> bool {
        match (&self.f_true, &self.beta_star) {
            (Some(f), Some(b)) => {
                let fitted = self.design.apply(b.vector());
                (&fitted - f).abs().max() <= tol
            }
            _ => false,
        }
    }

    /// Checks y = f + w (and, on linear instances, f = X beta*) within `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        if let (Some(f), Some(w)) = (&self.f_true, &self.noise) {
            let residual = (&self.y - f - w).abs().max();
            if residual > tol {
                return Err(Error::invalid(format!(
                    "instance inconsistent: max |y - f - w| = {residual:.3e}"
                )));
            }
        }
        Ok(())
    }

    /// Normalized prediction loss of a candidate: `||f_beta - f||_n^2`.
    /// Requires `f_true`.
    pub fn prediction_loss(&self, beta: &CoefficientVector) -> Result<f64> {
        let f = self
            .f_true
            .as_ref()
            .ok_or_else(|| Error::invalid("prediction loss needs a stored f_true"))?;
        let diff = self.design.apply(beta.vector()) - f;
        Ok(diff.norm_squared() / self.n() as f64)
    }
}

/// Loss triplet between two coefficient vectors on a common design:
/// `|b1 - b2|_p^p`, `|X(b1-b2)|_2^2 / n`, and `|X(b1-b2)|_2^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTriplet {
    pub lp_loss: f64,
    pub pred_loss_normalized: f64,
    pub pred_loss_unnormalized: f64,
}

pub fn losses(
    b1: &CoefficientVector,
    b2: &CoefficientVector,
    design: &DesignMatrix,
    p: f64,
) -> Result<LossTriplet> {
    if b1.len() != design.m() || b2.len() != design.m() {
        return Err(Error::invalid("losses: dimension mismatch"));
    }
    if !(p > 0.0 && p <= 2.0) {
        return Err(Error::invalid(format!("losses: p must lie in (0, 2], got {p}")));
    }
    let diff = b1.vector() - b2.vector();
    let lp_loss = diff.iter().map(|v| v.abs().powf(p)).sum();
    let image = design.matrix() * &diff;
    let unnormalized = image.norm_squared();
    Ok(LossTriplet {
        lp_loss,
        pred_loss_normalized: unnormalized / design.n() as f64,
        pred_loss_unnormalized: unnormalized,
    })
}
