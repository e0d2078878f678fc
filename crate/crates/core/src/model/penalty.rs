//! Tuning radius and the theoretical event probabilities.
//!
//! `log` means the natural logarithm everywhere.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The tuple (A, sigma, n, M) together with the derived tuning radius
/// `r = A * sigma * sqrt(log(M)/n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyLevel {
    pub a: f64,
    pub sigma: f64,
    pub n: usize,
    pub m: usize,
    pub r: f64,
    /// A > 2*sqrt(2): admissible for the Lasso theorems.
    pub lasso_admissible: bool,
    /// A > sqrt(2): admissible for the Dantzig linear-model theorem.
    pub dantzig_admissible: bool,
}

/// Builds a [`PenaltyLevel`]; `r = 0` exactly when `sigma = 0`.
pub fn penalty_level(a: f64, sigma: f64, n: usize, m: usize) -> Result<PenaltyLevel> {
    if a <= 0.0 || !a.is_finite() {
        return Err(Error::invalid(format!("A must be positive, got {a}")));
    }
    if sigma < 0.0 || !sigma.is_finite() {
        return Err(Error::invalid(format!(
            "sigma must be nonnegative, got {sigma}"
        )));
    }
    if n < 1 {
        return Err(Error::invalid("n must be at least 1"));
    }
    if m < 2 {
        return Err(Error::invalid(format!("M must be at least 2, got {m}")));
    }
    let r = a * sigma * ((m as f64).ln() / n as f64).sqrt();
    Ok(PenaltyLevel {
        a,
        sigma,
        n,
        m,
        r,
        lasso_admissible: a > 2.0 * 2f64.sqrt(),
        dantzig_admissible: a > 2f64.sqrt(),
    })
}

impl PenaltyLevel {
    /// Builds a penalty level with an explicitly overridden radius, keeping
    /// the admissibility flags of `A`.
    pub fn with_radius(a: f64, sigma: f64, n: usize, m: usize, r: f64) -> Result<PenaltyLevel> {
        let mut level = penalty_level(a, sigma, n, m)?;
        if r < 0.0 || !r.is_finite() {
            return Err(Error::invalid(format!("r must be nonnegative, got {r}")));
        }
        level.r = r;
        Ok(level)
    }

    /// Per-column penalty weight `r * ||f_j||_n`.
    pub fn column_weight(&self, column_norm: f64) -> f64 {
        self.r * column_norm
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseEvent {
    /// All j: 2|V_j| <= r ||f_j||_n. Conditions the Lasso results.
    EventA,
    /// All j: |V_j| <= r ||f_j||_n. Conditions the Dantzig results.
    EventB,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbabilityForm {
    /// Exponential tail bound: 1 - M^{1 - A^2/8} (event A), 1 - M^{1 - A^2/2}
    /// (event B).
    Crude,
    /// Gaussian-tail refinement: 1 - 2 M Q(A sqrt(log M) / 2) (event A),
    /// 1 - 2 M Q(A sqrt(log M)) (event B), with Q the standard normal upper
    /// tail.
    Refined,
}

/// Standard normal upper-tail probability Q(t) = P(N(0,1) > t).
pub fn normal_upper_tail(t: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(t / 2f64.sqrt())
}

/// Theoretical lower bound on the probability of the given noise event.
///
/// May be negative (a vacuous bound); the value is returned as computed so
/// coverage comparisons stay honest.
pub fn event_probability(a: f64, m: usize, event: NoiseEvent, form: ProbabilityForm) -> f64 {
    let m_f = m as f64;
    match form {
        ProbabilityForm::Crude => {
            let exponent = match event {
                NoiseEvent::EventA => 1.0 - a * a / 8.0,
                NoiseEvent::EventB => 1.0 - a * a / 2.0,
            };
            1.0 - m_f.powf(exponent)
        }
        ProbabilityForm::Refined => {
            let t = match event {
                NoiseEvent::EventA => a * m_f.ln().sqrt() / 2.0,
                NoiseEvent::EventB => a * m_f.ln().sqrt(),
            };
            1.0 - 2.0 * m_f * normal_upper_tail(t)
        }
    }
}
