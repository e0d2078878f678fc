//! Seeded Monte Carlo execution and the coverage aggregation.
//!
//! Every trial is a pure function of (master seed, trial id), so the
//! parallel pool and the serial loop produce identical record streams; the
//! aggregation is an order-insensitive fold over records sorted by trial
//! id.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::harness::config::ExperimentConfig;
use crate::harness::generate::build_design;
use crate::harness::trial::{
    certify_kappas, event_held, run_trial, CertifiedKappas, KappaCache, TrialContext,
    TrialRecord,
};
use crate::model::{event_probability, penalty_level, NoiseEvent, ProbabilityForm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecMode {
    Serial,
    Parallel,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EventCoverage {
    pub count: usize,
    pub frequency: f64,
    /// Binomial standard error sqrt(p (1-p) / trials).
    pub std_error: f64,
    pub crude_bound: f64,
    pub refined_bound: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundSummary {
    pub name: String,
    pub event_required: crate::bounds::RequiredEvent,
    /// Trials on which the required event held.
    pub on_event_trials: usize,
    /// On-event trials that were applicable with a certified kappa.
    pub counted: usize,
    pub held: usize,
    /// held / counted, absent when nothing was countable.
    pub holds_rate: Option<f64>,
    pub inapplicable: usize,
    pub uncertified: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageSummary {
    pub config: ExperimentConfig,
    pub mode: ExecMode,
    pub trials: usize,
    pub event_a: EventCoverage,
    pub event_b: EventCoverage,
    pub bounds: Vec<BoundSummary>,
    pub l1_dominance_rate: f64,
    pub lasso_kkt_pass_rate: f64,
    pub lasso_dantzig_feasible_rate: f64,
    pub dantzig_cone_vs_lasso_rate: f64,
    /// Among trials where event A held and the flag was defined.
    pub lasso_cone3_on_event_a_rate: Option<f64>,
    /// Among trials where event B held and the flag was defined.
    pub dantzig_cone_on_event_b_rate: Option<f64>,
    pub solver_failures: usize,
    pub kappas: CertifiedKappas,
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct MonteCarloOutput {
    pub summary: CoverageSummary,
    pub records: Vec<TrialRecord>,
}

fn event_coverage(
    count: usize,
    trials: usize,
    a: f64,
    m: usize,
    event: NoiseEvent,
) -> EventCoverage {
    let frequency = count as f64 / trials as f64;
    EventCoverage {
        count,
        frequency,
        std_error: (frequency * (1.0 - frequency) / trials as f64).sqrt(),
        crude_bound: event_probability(a, m, event, ProbabilityForm::Crude),
        refined_bound: event_probability(a, m, event, ProbabilityForm::Refined),
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    if den == 0 {
        None
    } else {
        Some(num as f64 / den as f64)
    }
}

/// Runs the full experiment. The kappa certification is computed once per
/// design (through `cache` when supplied) and shared by all trials.
pub fn run_montecarlo(
    config: &ExperimentConfig,
    mode: ExecMode,
    cache: Option<&KappaCache>,
) -> Result<MonteCarloOutput> {
    config.validate()?;
    let start = std::time::Instant::now();
    let design = build_design(config)?;
    let penalty = penalty_level(config.a, config.sigma, config.n, config.m_cols)?;
    let kappas = match cache {
        Some(cache) => (*cache.get_or_compute(
            &design,
            config.s,
            config.m_block(),
            config.eps,
            config.enumeration_cap,
        ))
        .clone(),
        None => certify_kappas(
            &design,
            config.s,
            config.m_block(),
            config.eps,
            config.enumeration_cap,
        ),
    };

    let ctx = TrialContext {
        config,
        design: &design,
        penalty: &penalty,
        kappas: &kappas,
    };
    let ids: Vec<u64> = (0..config.trials as u64).collect();
    let records: Vec<TrialRecord> = match mode {
        ExecMode::Serial => ids
            .iter()
            .map(|&id| run_trial(&ctx, id))
            .collect::<Result<_>>()?,
        ExecMode::Parallel => ids
            .par_iter()
            .map(|&id| run_trial(&ctx, id))
            .collect::<Result<_>>()?,
    };

    let trials = records.len();
    let count_a = records.iter().filter(|r| r.events.event_a).count();
    let count_b = records.iter().filter(|r| r.events.event_b).count();

    // Per-bound aggregation in the order of the first record.
    let mut bound_summaries: Vec<BoundSummary> = Vec::new();
    if let Some(first) = records.first() {
        for (idx, check) in first.bounds.iter().enumerate() {
            let mut on_event = 0usize;
            let mut counted = 0usize;
            let mut held = 0usize;
            let mut inapplicable = 0usize;
            let mut uncertified = 0usize;
            for record in &records {
                let c = &record.bounds[idx];
                debug_assert_eq!(c.name, check.name, "bound schema must be stable");
                if !event_held(&record.events, c.event_required) {
                    continue;
                }
                on_event += 1;
                if !c.applicable {
                    inapplicable += 1;
                    continue;
                }
                if !c.kappa_certified {
                    uncertified += 1;
                    continue;
                }
                counted += 1;
                if c.holds {
                    held += 1;
                }
            }
            bound_summaries.push(BoundSummary {
                name: check.name.clone(),
                event_required: check.event_required,
                on_event_trials: on_event,
                counted,
                held,
                holds_rate: ratio(held, counted),
                inapplicable,
                uncertified,
            });
        }
    }

    let dominance = records.iter().filter(|r| r.l1_dominance).count();
    let kkt_pass = records.iter().filter(|r| r.lasso.kkt_passes).count();
    let lasso_feasible = records.iter().filter(|r| r.lasso.dantzig_feasible).count();
    let cone_lasso = records
        .iter()
        .filter(|r| r.dantzig_cone_vs_lasso)
        .count();
    let lasso_cone3: (usize, usize) = records.iter().fold((0, 0), |(held, total), r| {
        match (r.events.event_a, r.lasso_cone3_vs_star) {
            (true, Some(flag)) => (held + flag as usize, total + 1),
            _ => (held, total),
        }
    });
    let dantzig_cone: (usize, usize) = records.iter().fold((0, 0), |(held, total), r| {
        match (r.events.event_b, r.dantzig_cone_vs_star) {
            (true, Some(flag)) => (held + flag as usize, total + 1),
            _ => (held, total),
        }
    });
    let solver_failures = records.iter().filter(|r| !r.dantzig.solved).count()
        + records.iter().filter(|r| !r.lasso.converged).count();

    let summary = CoverageSummary {
        config: config.clone(),
        mode,
        trials,
        event_a: event_coverage(count_a, trials, config.a, config.m_cols, NoiseEvent::EventA),
        event_b: event_coverage(count_b, trials, config.a, config.m_cols, NoiseEvent::EventB),
        bounds: bound_summaries,
        l1_dominance_rate: dominance as f64 / trials as f64,
        lasso_kkt_pass_rate: kkt_pass as f64 / trials as f64,
        lasso_dantzig_feasible_rate: lasso_feasible as f64 / trials as f64,
        dantzig_cone_vs_lasso_rate: cone_lasso as f64 / trials as f64,
        lasso_cone3_on_event_a_rate: ratio(lasso_cone3.0, lasso_cone3.1),
        dantzig_cone_on_event_b_rate: ratio(dantzig_cone.0, dantzig_cone.1),
        solver_failures,
        kappas,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };

    Ok(MonteCarloOutput { summary, records })
}
