//! One Monte Carlo trial: generate, fit both estimators, detect the noise
//! events, and evaluate every applicable bound with certified kappa
//! plug-ins.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::bounds::{
    best_sparse_approx, dantzig_bounds, equivalence_bounds, lasso_bounds,
    oracle_inequality_rhs, BoundCheck, CoefficientBoundInputs, EquivalenceInputs, KappaPlugin,
    OracleVariant, RequiredEvent, THEOREM4A_NAMES, THEOREM4_NAMES,
};
use crate::dantzig::{dantzig_feasibility, fit_dantzig, DantzigConfig};
use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::harness::generate::{generate_instance, trial_seed};
use crate::lasso::{fit_lasso, lasso_kkt_check, LassoConfig};
use crate::model::{
    losses, CoefficientVector, DesignMatrix, PenaltyLevel, RegressionInstance,
};
use crate::re::{binomial, kappa1_lower, kappa2_lower};

/// Zero threshold for reading sparsity off LP vertices.
pub const LP_ZERO_TOL: f64 = 1e-9;
/// Tolerance padding for the deterministic cone inclusions.
pub const CONE_TOL: f64 = 1e-8;

/// Certified kappa plug-ins for one design at one (s, m, eps) query.
///
/// On an identity Gram matrix every constant is exactly 1. Otherwise the
/// closed-form lower bounds are used, certified only when their extrema
/// were enumerated exhaustively.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertifiedKappas {
    pub s: usize,
    pub m_block: usize,
    /// kappa(s, 1)
    pub s1: KappaPlugin,
    /// kappa(s, m, 1)
    pub sm1: KappaPlugin,
    /// kappa(s, 3)
    pub s3: KappaPlugin,
    /// kappa(s, m, 3)
    pub sm3: KappaPlugin,
    /// kappa(s, 5)
    pub s5: KappaPlugin,
    /// kappa(s, (3 + 4/eps) f_max / f_min)
    pub oracle: KappaPlugin,
    pub c0_oracle: f64,
    pub identity_gram: bool,
    pub phi_max: f64,
    pub f_max: f64,
    pub f_min: f64,
    pub unit_norms: bool,
}

/// Best available lower bound on kappa(s, c0): max of kappa1(s, c0) and
/// kappa2(s, m, c0) (both are valid since kappa(s, m, c0) <= kappa(s, c0)).
fn plain_plugin(
    gram: &crate::model::GramMatrix,
    s: usize,
    m_block: usize,
    c0: f64,
    cap: usize,
) -> KappaPlugin {
    let cols = gram.dim();
    let mut best = KappaPlugin {
        value: 0.0,
        certified: false,
    };
    if 2 * s <= cols && 3 * s <= cols {
        if let Ok((Some(v), exact)) = kappa1_lower(gram, s, c0, cap) {
            if v > best.value {
                best = KappaPlugin {
                    value: v,
                    certified: exact,
                };
            }
        }
    }
    if m_block >= s && s + m_block <= cols {
        if let Ok((Some(v), exact)) = kappa2_lower(gram, s, m_block, c0, cap) {
            if v > best.value {
                best = KappaPlugin {
                    value: v,
                    certified: exact,
                };
            }
        }
    }
    best
}

/// Lower bound on kappa(s, m, c0): kappa2(s, m, c0), plus kappa1 when
/// m = s (the only m for which the first constant covers the m-variant).
fn m_variant_plugin(
    gram: &crate::model::GramMatrix,
    s: usize,
    m_block: usize,
    c0: f64,
    cap: usize,
) -> KappaPlugin {
    let cols = gram.dim();
    let mut best = KappaPlugin {
        value: 0.0,
        certified: false,
    };
    if m_block >= s && s + m_block <= cols {
        if let Ok((Some(v), exact)) = kappa2_lower(gram, s, m_block, c0, cap) {
            if v > best.value {
                best = KappaPlugin {
                    value: v,
                    certified: exact,
                };
            }
        }
    }
    if m_block == s && 2 * s <= cols && 3 * s <= cols {
        if let Ok((Some(v), exact)) = kappa1_lower(gram, s, c0, cap) {
            if v > best.value {
                best = KappaPlugin {
                    value: v,
                    certified: exact,
                };
            }
        }
    }
    best
}

/// Computes all plug-ins for one design.
pub fn certify_kappas(
    design: &DesignMatrix,
    s: usize,
    m_block: usize,
    eps: f64,
    cap: usize,
) -> CertifiedKappas {
    let gram = design.gram();
    let f_max = design.f_max();
    let f_min = design.f_min();
    let c0_oracle = (3.0 + 4.0 / eps) * f_max / f_min;
    let identity = gram.is_identity(1e-10);
    let unit_norms = design.has_unit_norms(1e-9);
    let phi_max = gram.phi_max();
    if identity {
        let one = KappaPlugin::certified(1.0);
        return CertifiedKappas {
            s,
            m_block,
            s1: one,
            sm1: one,
            s3: one,
            sm3: one,
            s5: one,
            oracle: one,
            c0_oracle,
            identity_gram: true,
            phi_max,
            f_max,
            f_min,
            unit_norms,
        };
    }
    CertifiedKappas {
        s,
        m_block,
        s1: plain_plugin(&gram, s, m_block, 1.0, cap),
        sm1: m_variant_plugin(&gram, s, m_block, 1.0, cap),
        s3: plain_plugin(&gram, s, m_block, 3.0, cap),
        sm3: m_variant_plugin(&gram, s, m_block, 3.0, cap),
        s5: plain_plugin(&gram, s, m_block, 5.0, cap),
        oracle: plain_plugin(&gram, s, m_block, c0_oracle, cap),
        c0_oracle,
        identity_gram: false,
        phi_max,
        f_max,
        f_min,
        unit_norms,
    }
}

/// Cache of per-design certification keyed by design content hash and the
/// query parameters. Shared across requests in long-running processes.
#[derive(Default)]
pub struct KappaCache {
    inner: Mutex<HashMap<(u64, usize, usize, u64, usize), Arc<CertifiedKappas>>>,
}

impl KappaCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_compute(
        &self,
        design: &DesignMatrix,
        s: usize,
        m_block: usize,
        eps: f64,
        cap: usize,
    ) -> Arc<CertifiedKappas> {
        let key = (design.content_hash(), s, m_block, eps.to_bits(), cap);
        if let Some(hit) = self.inner.lock().unwrap().get(&key) {
            return Arc::clone(hit);
        }
        let computed = Arc::new(certify_kappas(design, s, m_block, eps, cap));
        self.inner
            .lock()
            .unwrap()
            .entry(key)
            .or_insert(computed)
            .clone()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Noise-event indicators of one trial.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EventReport {
    /// all j: 2 |V_j| <= r ||f_j||_n
    pub event_a: bool,
    /// all j: |V_j| <= r ||f_j||_n
    pub event_b: bool,
    /// max_j |V_j| / ||f_j||_n, the quantity compared against r.
    pub max_scaled_vj: f64,
}

/// Decides events A and B from the stored noise vector (simulation-only
/// knowledge; undecidable on ingested data).
pub fn detect_events(
    instance: &RegressionInstance,
    penalty: &PenaltyLevel,
) -> Result<EventReport> {
    let noise = instance.noise.as_ref().ok_or_else(|| {
        Error::invalid("events are undecidable without a stored noise vector")
    })?;
    let correlations = instance.design.correlations(noise);
    let norms = instance.design.column_norms();
    let max_scaled = (0..instance.m())
        .map(|j| correlations[j].abs() / norms[j])
        .fold(0.0f64, f64::max);
    Ok(EventReport {
        event_a: 2.0 * max_scaled <= penalty.r,
        event_b: max_scaled <= penalty.r,
        max_scaled_vj: max_scaled,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LassoSummary {
    pub converged: bool,
    pub sweeps: usize,
    pub kkt_violation: f64,
    pub kkt_passes: bool,
    pub objective: f64,
    pub sparsity: usize,
    pub l1_norm: f64,
    /// Whether the solution satisfies the Dantzig constraint (it must,
    /// whenever the KKT conditions hold).
    pub dantzig_feasible: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DantzigSummary {
    pub solved: bool,
    pub feasible: bool,
    pub pivots: usize,
    pub max_constraint: f64,
    pub sparsity: usize,
    pub l1_norm: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LpLoss {
    pub p: f64,
    pub value: f64,
}

/// Losses of one estimator against beta*.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StarLosses {
    pub l1: f64,
    pub lp: Vec<LpLoss>,
    pub pred_normalized: f64,
    pub pred_unnormalized: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: u64,
    pub seed: u64,
    pub events: EventReport,
    pub linear_model: bool,
    pub lasso: LassoSummary,
    pub dantzig: DantzigSummary,
    /// ||f_hat - f||_n^2 for both estimators.
    pub lasso_pred_loss: f64,
    pub dantzig_pred_loss: f64,
    pub lasso_vs_star: Option<StarLosses>,
    pub dantzig_vs_star: Option<StarLosses>,
    /// |beta_D|_1 <= |beta_L|_1 + tol.
    pub l1_dominance: bool,
    pub lasso_cone3_vs_star: Option<bool>,
    pub dantzig_cone_vs_star: Option<bool>,
    pub dantzig_cone_vs_lasso: bool,
    pub bounds: Vec<BoundCheck>,
}

pub struct TrialContext<'a> {
    pub config: &'a ExperimentConfig,
    pub design: &'a DesignMatrix,
    pub penalty: &'a PenaltyLevel,
    pub kappas: &'a CertifiedKappas,
}

fn star_losses(
    estimator: &CoefficientVector,
    beta_star: &CoefficientVector,
    design: &DesignMatrix,
    p_list: &[f64],
) -> StarLosses {
    let l1 = losses(estimator, beta_star, design, 1.0).unwrap();
    let lp = p_list
        .iter()
        .map(|&p| LpLoss {
            p,
            value: losses(estimator, beta_star, design, p).unwrap().lp_loss,
        })
        .collect();
    StarLosses {
        l1: l1.lp_loss,
        lp,
        pred_normalized: l1.pred_loss_normalized,
        pred_unnormalized: l1.pred_loss_unnormalized,
    }
}

fn cone_flag(delta: &CoefficientVector, j0: &[usize], c0: f64) -> bool {
    let mut on = 0.0;
    let mut mask = vec![false; delta.len()];
    for &j in j0 {
        mask[j] = true;
        on += delta.as_slice()[j].abs();
    }
    let off: f64 = delta
        .as_slice()
        .iter()
        .enumerate()
        .filter(|(j, _)| !mask[*j])
        .map(|(_, v)| v.abs())
        .sum();
    off <= c0 * on + CONE_TOL
}

/// Total support count the per-trial oracle would enumerate.
fn oracle_support_count(m: usize, s: usize) -> u128 {
    (1..=s).map(|k| binomial(m, k)).sum()
}

/// Budget above which the per-trial sparse-approximation oracle is skipped
/// (the oracle-inequality checks are then reported inapplicable).
pub const ORACLE_TRIAL_CAP: u128 = 20_000;

pub fn run_trial(ctx: &TrialContext, trial_id: u64) -> Result<TrialRecord> {
    let config = ctx.config;
    let design = ctx.design;
    let penalty = ctx.penalty;
    let kappas = ctx.kappas;
    let instance = generate_instance(config, design, trial_id)?;
    let linear = instance.is_linear(1e-9);
    let events = detect_events(&instance, penalty)?;

    // Lasso.
    let lasso_result = fit_lasso(&instance, &LassoConfig::new(penalty.r), None)?;
    let kkt = lasso_kkt_check(&instance, &lasso_result.beta_hat, penalty.r, CONE_TOL)?;
    let (lasso_feasible, _) =
        dantzig_feasibility(&instance, &lasso_result.beta_hat, penalty.r + CONE_TOL)?;
    let lasso_summary = LassoSummary {
        converged: lasso_result.converged,
        sweeps: lasso_result.sweeps_used,
        kkt_violation: lasso_result.kkt_violation,
        kkt_passes: kkt.passes,
        objective: lasso_result.objective,
        sparsity: lasso_result.beta_hat.sparsity(0.0),
        l1_norm: lasso_result.beta_hat.l1_norm(),
        dantzig_feasible: lasso_feasible,
    };

    // Dantzig.
    let (dantzig_beta, dantzig_summary) = match fit_dantzig(&instance, &DantzigConfig::new(penalty.r))
    {
        Ok(result) => {
            let summary = DantzigSummary {
                solved: true,
                feasible: result.feasible,
                pivots: result.pivots_used,
                max_constraint: result.max_constraint,
                sparsity: result.beta_hat.sparsity(LP_ZERO_TOL),
                l1_norm: result.l1_norm,
                error: None,
            };
            (result.beta_hat, summary)
        }
        Err(e) => (
            CoefficientVector::zeros(design.m()),
            DantzigSummary {
                solved: false,
                feasible: false,
                pivots: 0,
                max_constraint: f64::NAN,
                sparsity: 0,
                l1_norm: f64::NAN,
                error: Some(e.to_string()),
            },
        ),
    };

    let f_true = instance
        .f_true
        .as_ref()
        .expect("simulated instances always carry f_true");
    let lasso_pred_loss = instance.prediction_loss(&lasso_result.beta_hat)?;
    let dantzig_pred_loss = if dantzig_summary.solved {
        instance.prediction_loss(&dantzig_beta)?
    } else {
        f64::NAN
    };

    let beta_star = instance.beta_star.clone();
    let lasso_vs_star = beta_star
        .as_ref()
        .map(|b| star_losses(&lasso_result.beta_hat, b, design, &config.p_list));
    let dantzig_vs_star = match (&beta_star, dantzig_summary.solved) {
        (Some(b), true) => Some(star_losses(&dantzig_beta, b, design, &config.p_list)),
        _ => None,
    };

    let l1_dominance = !dantzig_summary.solved
        || dantzig_summary.l1_norm <= lasso_summary.l1_norm + CONE_TOL;

    let star_support = beta_star.as_ref().map(|b| b.support(0.0));
    let lasso_cone3_vs_star = match (&beta_star, &star_support, linear) {
        (Some(b), Some(j0), true) => {
            let delta =
                CoefficientVector::from(lasso_result.beta_hat.vector() - b.vector());
            Some(cone_flag(&delta, j0, 3.0))
        }
        _ => None,
    };
    let dantzig_cone_vs_star = match (&beta_star, &star_support, linear, dantzig_summary.solved)
    {
        (Some(b), Some(j0), true, true) => {
            let delta = CoefficientVector::from(dantzig_beta.vector() - b.vector());
            Some(cone_flag(&delta, j0, 1.0))
        }
        _ => None,
    };
    let dantzig_cone_vs_lasso = if dantzig_summary.solved {
        let j0 = lasso_result.beta_hat.support(0.0);
        let delta =
            CoefficientVector::from(dantzig_beta.vector() - lasso_result.beta_hat.vector());
        cone_flag(&delta, &j0, 1.0)
    } else {
        true
    };

    // Bound checks, in the canonical order of `report::bound_names`.
    let mut bounds: Vec<BoundCheck> = Vec::new();
    let s = config.s;
    let m_block = config.m_block();

    // Theorem-4 family: Dantzig vs beta* in the linear model, on event B.
    if let (Some(b), true, true) = (&beta_star, linear, dantzig_summary.solved) {
        let inputs = CoefficientBoundInputs {
            design,
            beta_hat: &dantzig_beta,
            beta_ref: b,
            s,
            m: m_block,
            penalty,
            p_list: &config.p_list,
        };
        bounds.extend(dantzig_bounds(
            &inputs,
            kappas.s1,
            kappas.sm1,
            &THEOREM4_NAMES,
            RequiredEvent::EventB,
            0.0,
        ));
    } else {
        let reason = if !dantzig_summary.solved {
            "dantzig solver failed"
        } else {
            "nonlinear target"
        };
        bounds.push(BoundCheck::inapplicable(
            THEOREM4_NAMES.l1,
            RequiredEvent::EventB,
            reason,
        ));
        bounds.push(BoundCheck::inapplicable(
            THEOREM4_NAMES.pred,
            RequiredEvent::EventB,
            reason,
        ));
        for p in &config.p_list {
            bounds.push(BoundCheck::inapplicable(
                &format!("{}-{p}", THEOREM4_NAMES.lp),
                RequiredEvent::EventB,
                reason,
            ));
        }
    }

    // Sup-variant of the same bounds against the Lasso solution, which
    // satisfies the constraint deterministically.
    if dantzig_summary.solved {
        let inputs = CoefficientBoundInputs {
            design,
            beta_hat: &dantzig_beta,
            beta_ref: &lasso_result.beta_hat,
            s,
            m: m_block,
            penalty,
            p_list: &config.p_list,
        };
        bounds.extend(dantzig_bounds(
            &inputs,
            kappas.s1,
            kappas.sm1,
            &THEOREM4A_NAMES,
            RequiredEvent::None,
            0.0,
        ));
    } else {
        bounds.push(BoundCheck::inapplicable(
            THEOREM4A_NAMES.l1,
            RequiredEvent::None,
            "dantzig solver failed",
        ));
        bounds.push(BoundCheck::inapplicable(
            THEOREM4A_NAMES.pred,
            RequiredEvent::None,
            "dantzig solver failed",
        ));
        for p in &config.p_list {
            bounds.push(BoundCheck::inapplicable(
                &format!("{}-{p}", THEOREM4A_NAMES.lp),
                RequiredEvent::None,
                "dantzig solver failed",
            ));
        }
    }

    // Theorem-5 family: Lasso vs beta* in the linear model, on event A.
    if let (Some(b), true) = (&beta_star, linear) {
        let inputs = CoefficientBoundInputs {
            design,
            beta_hat: &lasso_result.beta_hat,
            beta_ref: b,
            s,
            m: m_block,
            penalty,
            p_list: &config.p_list,
        };
        bounds.extend(lasso_bounds(
            &inputs,
            kappas.s3,
            kappas.sm3,
            kappas.phi_max,
            0.0,
        ));
    } else {
        for name in ["th53-l1", "th54-pred", "th55-sparsity"] {
            bounds.push(BoundCheck::inapplicable(
                name,
                RequiredEvent::EventA,
                "nonlinear target",
            ));
        }
        for p in &config.p_list {
            bounds.push(BoundCheck::inapplicable(
                &format!("th52-lp-{p}"),
                RequiredEvent::EventA,
                "nonlinear target",
            ));
        }
    }

    // Prediction-loss equivalence.
    if dantzig_summary.solved {
        let inputs = EquivalenceInputs {
            pred_lasso: lasso_pred_loss,
            pred_dantzig: dantzig_pred_loss,
            sparsity_lasso: lasso_summary.sparsity,
            sparsity_dantzig: dantzig_summary.sparsity,
            f_max: kappas.f_max,
            unit_norms: kappas.unit_norms,
        };
        bounds.extend(equivalence_bounds(
            &inputs,
            s,
            kappas.s1,
            kappas.s5,
            penalty,
        ));
    } else {
        bounds.push(BoundCheck::inapplicable(
            "th1-equiv",
            RequiredEvent::Both,
            "dantzig solver failed",
        ));
        bounds.push(BoundCheck::inapplicable(
            "th2-equiv",
            RequiredEvent::EventA,
            "dantzig solver failed",
        ));
    }

    // Oracle inequalities, when the per-trial enumeration stays affordable.
    if oracle_support_count(design.m(), s) <= ORACLE_TRIAL_CAP {
        let oracle = best_sparse_approx(design, f_true, s, config.enumeration_cap)?;
        bounds.push(
            oracle_inequality_rhs(
                &oracle,
                lasso_pred_loss,
                config.eps,
                kappas.oracle,
                kappas.f_max,
                penalty,
                &OracleVariant::Theorem3,
            )
            .unwrap_or_else(|e| {
                BoundCheck::inapplicable("th3-oracle", RequiredEvent::EventA, &e.to_string())
            }),
        );

        let prop1 = if !dantzig_summary.solved {
            BoundCheck::inapplicable(
                "prop1-oracle",
                RequiredEvent::EventA,
                "dantzig solver failed",
            )
        } else if penalty.r <= 0.0 {
            BoundCheck::inapplicable(
                "prop1-oracle",
                RequiredEvent::EventA,
                "weak sparsity needs r > 0",
            )
        } else if !kappas.oracle.usable() {
            BoundCheck::inapplicable(
                "prop1-oracle",
                RequiredEvent::EventA,
                "vacuous: kappa <= 0",
            )
        } else {
            // Smallest C0 admitting any sparsity level into the weak set.
            let unit = kappas.f_max * kappas.f_max * penalty.r * penalty.r
                / (kappas.oracle.value * kappas.oracle.value);
            let c0_weak = (1..=s)
                .map(|k| oracle.per_sparsity_bias[k] / (unit * k as f64))
                .fold(f64::INFINITY, f64::min)
                .max(0.0);
            let kappa0 = if kappas.identity_gram {
                // On an identity Gram matrix kappa is exactly 1 at every
                // sparsity level, including the inflated one.
                KappaPlugin::certified(1.0)
            } else {
                KappaPlugin::heuristic(kappas.oracle.value)
            };
            oracle_inequality_rhs(
                &oracle,
                dantzig_pred_loss,
                config.eps,
                kappas.oracle,
                kappas.f_max,
                penalty,
                &OracleVariant::Proposition1 {
                    c0_weak,
                    kappa0,
                    phi_max: kappas.phi_max,
                    f_min: kappas.f_min,
                },
            )
            .unwrap_or_else(|e| {
                BoundCheck::inapplicable("prop1-oracle", RequiredEvent::EventA, &e.to_string())
            })
        };
        bounds.push(prop1);
    } else {
        bounds.push(BoundCheck::inapplicable(
            "th3-oracle",
            RequiredEvent::EventA,
            "oracle enumeration exceeds the per-trial cap",
        ));
        bounds.push(BoundCheck::inapplicable(
            "prop1-oracle",
            RequiredEvent::EventA,
            "oracle enumeration exceeds the per-trial cap",
        ));
    }

    Ok(TrialRecord {
        trial_id,
        seed: trial_seed(config.seed, trial_id),
        events,
        linear_model: linear,
        lasso: lasso_summary,
        dantzig: dantzig_summary,
        lasso_pred_loss,
        dantzig_pred_loss,
        lasso_vs_star,
        dantzig_vs_star,
        l1_dominance,
        lasso_cone3_vs_star,
        dantzig_cone_vs_star,
        dantzig_cone_vs_lasso,
        bounds,
    })
}

/// Whether the event a bound is conditioned on held in this trial.
pub fn event_held(events: &EventReport, required: RequiredEvent) -> bool {
    match required {
        RequiredEvent::EventA => events.event_a,
        RequiredEvent::EventB => events.event_b,
        RequiredEvent::Both => events.event_a && events.event_b,
        RequiredEvent::None => true,
    }
}
