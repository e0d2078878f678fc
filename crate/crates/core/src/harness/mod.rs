//! Seeded Monte Carlo experiments: instance generation, event detection,
//! per-trial bound evaluation and machine-readable reporting.

mod config;
mod generate;
mod montecarlo;
mod report;
mod trial;

pub use config::{AmplitudeScheme, DesignKind, ExperimentConfig};
pub use generate::{build_design, design_rng, generate_instance, trial_rng, trial_seed};
pub use montecarlo::{
    run_montecarlo, BoundSummary, CoverageSummary, EventCoverage, ExecMode, MonteCarloOutput,
};
pub use report::{bound_names, csv_header, emit_report, render_csv};
pub use trial::{
    certify_kappas, detect_events, event_held, run_trial, CertifiedKappas, DantzigSummary,
    EventReport, KappaCache, LassoSummary, LpLoss, StarLosses, TrialContext, TrialRecord,
    CONE_TOL, LP_ZERO_TOL, ORACLE_TRIAL_CAP,
};
