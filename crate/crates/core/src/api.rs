//! Wire types and operation handlers shared by the HTTP service and its
//! clients. Handlers are plain functions so the service stays a thin
//! transport wrapper and the CLI can exercise identical code paths through
//! either a local or a remote server.

use serde::{Deserialize, Serialize};

use crate::bounds::{best_sparse_approx, KappaPlugin, OracleApproximation};
use crate::dantzig::{fit_dantzig, DantzigConfig};
use crate::error::{Error, Result};
use crate::harness::{
    certify_kappas, render_csv, run_montecarlo, CoverageSummary, ExecMode, ExperimentConfig,
    KappaCache,
};
use crate::lasso::{fit_lasso, lasso_kkt_check, LassoConfig};
use crate::model::{penalty_level, CoefficientVector, DesignMatrix, PenaltyLevel,
    RegressionInstance};
use crate::re::{analyze, ReAnalysisReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Lasso,
    Dantzig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveRequest {
    /// Design matrix, rows = observations.
    pub design: Vec<Vec<f64>>,
    pub response: Vec<f64>,
    pub method: SolveMethod,
    #[serde(rename = "A")]
    pub a: f64,
    pub sigma: f64,
    /// Explicit radius override; computed from (A, sigma, n, M) when absent.
    #[serde(default)]
    pub r: Option<f64>,
    /// Pivot budget for the Dantzig linear program.
    #[serde(default)]
    pub max_pivots: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveResponse {
    pub method: SolveMethod,
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub r_used: f64,
    /// Coefficients, serialized as a bare JSON array.
    pub beta: CoefficientVector,
    pub support: Vec<usize>,
    pub sparsity: usize,
    pub l1_norm: f64,
    /// Scaled residual-correlation sup norm at the solution.
    pub max_constraint: f64,
    pub dantzig_feasible: bool,
    // Lasso diagnostics.
    pub objective: Option<f64>,
    pub converged: Option<bool>,
    pub sweeps: Option<usize>,
    pub kkt_violation: Option<f64>,
    pub kkt_passes: Option<bool>,
    // Dantzig diagnostics.
    pub pivots: Option<usize>,
    pub min_reduced_cost: Option<f64>,
}

fn build_penalty(a: f64, sigma: f64, n: usize, m: usize, r: Option<f64>) -> Result<PenaltyLevel> {
    match r {
        Some(r) => PenaltyLevel::with_radius(a, sigma, n, m, r),
        None => penalty_level(a, sigma, n, m),
    }
}

pub fn handle_solve(request: &SolveRequest) -> Result<SolveResponse> {
    let design = DesignMatrix::from_rows(&request.design)?;
    let n = design.n();
    let m = design.m();
    let y = nalgebra::DVector::from_column_slice(&request.response);
    let penalty = build_penalty(request.a, request.sigma, n, m, request.r)?;
    let instance = RegressionInstance::from_data(design, y, request.sigma)?;

    match request.method {
        SolveMethod::Lasso => {
            let result = fit_lasso(&instance, &LassoConfig::new(penalty.r), None)?;
            let kkt = lasso_kkt_check(&instance, &result.beta_hat, penalty.r, 1e-8)?;
            let support = result.beta_hat.support(0.0);
            Ok(SolveResponse {
                method: SolveMethod::Lasso,
                n,
                m,
                r_used: penalty.r,
                sparsity: support.len(),
                support,
                l1_norm: result.beta_hat.l1_norm(),
                max_constraint: kkt.scaled_sup_norm,
                dantzig_feasible: kkt.scaled_sup_norm <= penalty.r + 1e-8,
                objective: Some(result.objective),
                converged: Some(result.converged),
                sweeps: Some(result.sweeps_used),
                kkt_violation: Some(result.kkt_violation),
                kkt_passes: Some(kkt.passes),
                pivots: None,
                min_reduced_cost: None,
                beta: result.beta_hat,
            })
        }
        SolveMethod::Dantzig => {
            let mut config = DantzigConfig::new(penalty.r);
            if let Some(budget) = request.max_pivots {
                config.max_pivots = budget;
            }
            let result = fit_dantzig(&instance, &config)?;
            let support = result.beta_hat.support(1e-9);
            Ok(SolveResponse {
                method: SolveMethod::Dantzig,
                n,
                m,
                r_used: penalty.r,
                sparsity: support.len(),
                support,
                l1_norm: result.l1_norm,
                max_constraint: result.max_constraint,
                dantzig_feasible: result.feasible,
                objective: None,
                converged: None,
                sweeps: None,
                kkt_violation: None,
                kkt_passes: None,
                pivots: Some(result.pivots_used),
                min_reduced_cost: Some(result.min_reduced_cost),
                beta: result.beta_hat,
            })
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalyzeRequest {
    pub design: Vec<Vec<f64>>,
    pub s: usize,
    #[serde(default)]
    pub m: Option<usize>,
    pub c0_list: Vec<f64>,
    #[serde(default)]
    pub enumeration_cap: Option<usize>,
    #[serde(default)]
    pub search_budget: Option<usize>,
}

pub fn handle_analyze(request: &AnalyzeRequest) -> Result<ReAnalysisReport> {
    let design = DesignMatrix::from_rows(&request.design)?;
    analyze(
        &design,
        request.s,
        request.m,
        &request.c0_list,
        request.enumeration_cap.unwrap_or(1_000_000),
        request.search_budget.unwrap_or(64),
    )
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleRequest {
    pub design: Vec<Vec<f64>>,
    /// Target function values at the design points.
    pub target: Vec<f64>,
    pub s: usize,
    pub eps: f64,
    /// When (A, sigma) are given the Theorem-style right-hand side is
    /// assembled with a certified kappa plug-in (when one exists).
    #[serde(default, rename = "A")]
    pub a: Option<f64>,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub enumeration_cap: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleResponse {
    pub oracle: OracleApproximation,
    pub c_eps: f64,
    /// Oracle-inequality right-hand side, present when (A, sigma) were
    /// supplied and a usable kappa existed.
    pub rhs: Option<f64>,
    pub kappa: Option<KappaPlugin>,
    pub note: Option<String>,
}

pub fn handle_oracle(request: &OracleRequest) -> Result<OracleResponse> {
    if !(request.eps > 0.0) {
        return Err(Error::invalid("eps must be positive"));
    }
    let design = DesignMatrix::from_rows(&request.design)?;
    if request.target.len() != design.n() {
        return Err(Error::invalid(format!(
            "target length {} does not match n = {}",
            request.target.len(),
            design.n()
        )));
    }
    let cap = request.enumeration_cap.unwrap_or(1_000_000);
    let target = nalgebra::DVector::from_column_slice(&request.target);
    let oracle = best_sparse_approx(&design, &target, request.s, cap)?;
    let c_eps = 4.0 * request.eps + 16.0 + 16.0 / request.eps;

    let mut rhs = None;
    let mut kappa = None;
    let mut note = None;
    if let (Some(a), Some(sigma)) = (request.a, request.sigma) {
        let penalty = penalty_level(a, sigma, design.n(), design.m())?;
        let kappas = certify_kappas(&design, request.s, request.s, request.eps, cap);
        if kappas.oracle.usable() {
            let check = crate::bounds::oracle_inequality_rhs(
                &oracle,
                f64::NAN,
                request.eps,
                kappas.oracle,
                design.f_max(),
                &penalty,
                &crate::bounds::OracleVariant::Theorem3,
            )?;
            rhs = Some(check.rhs);
            kappa = Some(kappas.oracle);
            if !kappas.oracle.certified {
                note = Some("kappa plug-in is uncertified".to_string());
            }
        } else {
            note = Some("no usable kappa lower bound for this design".to_string());
        }
    }
    Ok(OracleResponse {
        oracle,
        c_eps,
        rhs,
        kappa,
        note,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonteCarloRequest {
    pub config: ExperimentConfig,
    #[serde(default)]
    pub mode: Option<ExecMode>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonteCarloResponse {
    pub summary: CoverageSummary,
    /// Full per-trial CSV document (fixed schema).
    pub csv: String,
}

pub fn handle_montecarlo(
    request: &MonteCarloRequest,
    cache: Option<&KappaCache>,
) -> Result<MonteCarloResponse> {
    let mode = request.mode.unwrap_or(ExecMode::Parallel);
    let output = run_montecarlo(&request.config, mode, cache)?;
    let csv = render_csv(&output.records, &request.config);
    Ok(MonteCarloResponse {
        summary: output.summary,
        csv,
    })
}

/// Error payload shared over the wire.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorBody {
    pub kind: ErrorKind,
    pub error: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    InvalidInput,
    SolverFailure,
    Io,
    Internal,
}

impl ErrorBody {
    pub fn from_error(error: &Error) -> Self {
        let kind = match error {
            Error::InvalidInput(_) => ErrorKind::InvalidInput,
            Error::Infeasible(_) | Error::ResourceExhausted(_) => ErrorKind::SolverFailure,
            Error::Io { .. } => ErrorKind::Io,
            Error::Serialization(_) => ErrorKind::Internal,
        };
        ErrorBody {
            kind,
            error: error.to_string(),
        }
    }
}
