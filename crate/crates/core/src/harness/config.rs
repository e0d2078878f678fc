//! Experiment configuration: design families, amplitude schemes, penalty
//! and bound parameters, all JSON-serializable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DesignKind {
    /// sqrt(n) I; requires M = n. Unit column norms by construction.
    Identity,
    /// Independent standard normal entries.
    GaussianIid,
    /// Orthonormalized Gaussian columns scaled by sqrt(n); requires M <= n.
    /// The Gram matrix is the identity, so every kappa equals 1 exactly.
    GaussianOrthonormal,
    /// Columns driven by a factor model with constant correlation rho.
    Equicorrelated { rho: f64 },
    /// Columns with autoregressive correlation rho^|i-j|.
    Ar1 { rho: f64 },
    /// Design loaded from a CSV file (rows = observations).
    CsvFile { path: String },
}

impl DesignKind {
    pub fn label(&self) -> String {
        match self {
            DesignKind::Identity => "identity".to_string(),
            DesignKind::GaussianIid => "gaussian-iid".to_string(),
            DesignKind::GaussianOrthonormal => "gaussian-orthonormal".to_string(),
            DesignKind::Equicorrelated { rho } => format!("equicorrelated({rho})"),
            DesignKind::Ar1 { rho } => format!("ar1({rho})"),
            DesignKind::CsvFile { path } => format!("csv({path})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "kebab-case")]
pub enum AmplitudeScheme {
    /// Every active coefficient is exactly 1.
    Unit,
    /// Random sign times Uniform[lo, hi]; keeps beta* away from the noise
    /// floor so event-conditioned recovery stays informative.
    RandomSignUniform { lo: f64, hi: f64 },
}

impl Default for AmplitudeScheme {
    fn default() -> Self {
        AmplitudeScheme::RandomSignUniform { lo: 1.0, hi: 2.0 }
    }
}

fn default_trials() -> usize {
    100
}
fn default_true() -> bool {
    true
}
fn default_eps() -> f64 {
    2.0
}
fn default_c0_list() -> Vec<f64> {
    vec![1.0, 3.0, 5.0]
}
fn default_p_list() -> Vec<f64> {
    vec![1.5, 2.0]
}
fn default_cap() -> usize {
    1_000_000
}
fn default_budget() -> usize {
    64
}

/// Full Monte Carlo experiment description. JSON keys mirror the field
/// names; the design matrix dimension is `M`, the block size of the
/// m-variant assumptions is `m`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub design: DesignKind,
    pub n: usize,
    #[serde(rename = "M")]
    pub m_cols: usize,
    pub s: usize,
    #[serde(default)]
    pub amplitude: AmplitudeScheme,
    #[serde(rename = "A")]
    pub a: f64,
    pub sigma: f64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "default_true")]
    pub normalize_columns: bool,
    /// Empirical norm of an additive non-linear perturbation of the target;
    /// absent means a pure linear model.
    #[serde(default)]
    pub f_perturbation_norm: Option<f64>,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_c0_list")]
    pub c0_list: Vec<f64>,
    /// m of the m-variant restricted-eigenvalue assumption; defaults to s.
    #[serde(default, rename = "m")]
    pub re_m: Option<usize>,
    #[serde(default = "default_p_list")]
    pub p_list: Vec<f64>,
    #[serde(default = "default_cap")]
    pub enumeration_cap: usize,
    #[serde(default = "default_budget")]
    pub search_budget: usize,
}

impl ExperimentConfig {
    pub fn new(design: DesignKind, n: usize, m_cols: usize, s: usize, a: f64, sigma: f64, seed: u64) -> Self {
        ExperimentConfig {
            design,
            n,
            m_cols,
            s,
            amplitude: AmplitudeScheme::default(),
            a,
            sigma,
            trials: default_trials(),
            seed,
            normalize_columns: true,
            f_perturbation_norm: None,
            eps: default_eps(),
            c0_list: default_c0_list(),
            re_m: None,
            p_list: default_p_list(),
            enumeration_cap: default_cap(),
            search_budget: default_budget(),
        }
    }

    /// Effective m for the m-variant assumptions.
    pub fn m_block(&self) -> usize {
        self.re_m.unwrap_or(self.s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::invalid("n must be at least 1"));
        }
        if self.m_cols < 2 {
            return Err(Error::invalid("M must be at least 2"));
        }
        if self.s < 1 || self.s > self.m_cols {
            return Err(Error::invalid(format!(
                "s = {} out of range for M = {}",
                self.s, self.m_cols
            )));
        }
        if self.trials < 1 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if !(self.a > 0.0) {
            return Err(Error::invalid("A must be positive"));
        }
        if self.sigma < 0.0 {
            return Err(Error::invalid("sigma must be nonnegative"));
        }
        if !(self.eps > 0.0) {
            return Err(Error::invalid("eps must be positive"));
        }
        match &self.design {
            DesignKind::Identity if self.m_cols != self.n => {
                return Err(Error::invalid(format!(
                    "identity design needs M = n, got M = {}, n = {}",
                    self.m_cols, self.n
                )));
            }
            DesignKind::GaussianOrthonormal if self.m_cols > self.n => {
                return Err(Error::invalid(
                    "orthonormal design needs M <= n".to_string(),
                ));
            }
            DesignKind::Equicorrelated { rho } | DesignKind::Ar1 { rho } => {
                if !(*rho > -1.0 && *rho < 1.0) {
                    return Err(Error::invalid(format!("rho = {rho} outside (-1, 1)")));
                }
            }
            _ => {}
        }
        if let Some(m) = self.re_m {
            if m < self.s || self.s + m > self.m_cols {
                return Err(Error::invalid(format!(
                    "m = {m} must satisfy s <= m and s + m <= M"
                )));
            }
        }
        if let AmplitudeScheme::RandomSignUniform { lo, hi } = self.amplitude {
            if !(lo > 0.0 && hi >= lo) {
                return Err(Error::invalid("amplitude bounds need 0 < lo <= hi"));
            }
        }
        for &p in &self.p_list {
            if !(p > 1.0 && p <= 2.0) {
                return Err(Error::invalid(format!("p = {p} outside (1, 2]")));
            }
        }
        if let Some(norm) = self.f_perturbation_norm {
            if norm < 0.0 {
                return Err(Error::invalid("perturbation norm must be nonnegative"));
            }
        }
        Ok(())
    }
}
