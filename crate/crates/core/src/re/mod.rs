//! Restricted eigenvalues, restricted correlations, the kappa constants and
//! the assumption checks that certify them.
//!
//! Everything here orbits the Gram matrix Psi = X^T X / n. Lower bounds on
//! the restricted-eigenvalue constant kappa come from the two closed-form
//! constants kappa1/kappa2 (certified whenever the underlying extrema were
//! enumerated exactly); upper bounds come from witnessed cone search.

mod search;
mod subsets;

pub use search::{min_ratio_over_cone, project_l1_ball, ConeSearchOutcome, SearchParams};
pub use subsets::{binomial, for_each_disjoint_pair, for_each_support};

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{cone_membership, CoefficientVector, DesignMatrix, GramMatrix};

/// Parameters of a restricted-eigenvalue query.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReQuery {
    pub s: usize,
    pub m: Option<usize>,
    pub c0: f64,
    /// Max subsets enumerated exactly; beyond it sampling kicks in and
    /// results are flagged inexact.
    pub enumeration_cap: usize,
    /// Random restarts per support in the kappa upper-bound search.
    pub search_budget: usize,
}

impl ReQuery {
    pub fn new(s: usize, c0: f64) -> Self {
        ReQuery {
            s,
            m: None,
            c0,
            enumeration_cap: 1_000_000,
            search_budget: 64,
        }
    }

    pub fn with_m(mut self, m: usize) -> Self {
        self.m = Some(m);
        self
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.search_budget = budget;
        self
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.enumeration_cap = cap;
        self
    }

    fn validate(&self, m_cols: usize) -> Result<()> {
        if self.s < 1 || self.s > m_cols {
            return Err(Error::invalid(format!(
                "s = {} out of range for M = {m_cols}",
                self.s
            )));
        }
        if !(self.c0 > 0.0) {
            return Err(Error::invalid("c0 must be positive"));
        }
        if let Some(m) = self.m {
            if m < self.s || self.s + m > m_cols {
                return Err(Error::invalid(format!(
                    "m = {m} must satisfy s <= m and s + m <= M (s = {}, M = {m_cols})",
                    self.s
                )));
            }
        }
        Ok(())
    }
}

/// Restricted eigenvalues phi_min(u), phi_max(u): extreme eigenvalues of all
/// u x u principal submatrices of the Gram matrix. By eigenvalue
/// interlacing the extrema over sparsity <= u are attained at size u.
pub fn restricted_eigenvalues(
    gram: &GramMatrix,
    u: usize,
    cap: usize,
) -> Result<(f64, f64, bool)> {
    let m = gram.dim();
    if u < 1 || u > m {
        return Err(Error::invalid(format!(
            "restricted eigenvalue order u = {u} out of range 1..={m}"
        )));
    }
    let mut phi_min = f64::INFINITY;
    let mut phi_max = f64::NEG_INFINITY;
    let exact = for_each_support(m, u, cap, |support| {
        let sub = gram.principal_submatrix(support);
        let eig = sub.symmetric_eigen();
        phi_min = phi_min.min(eig.eigenvalues.min());
        phi_max = phi_max.max(eig.eigenvalues.max());
    });
    Ok((phi_min, phi_max, exact))
}

/// Restricted correlation theta_{m1,m2}: the largest spectral norm of a
/// cross block X_{I1}^T X_{I2} / n over disjoint supports with |I_i| <= m_i.
/// Undefined (invalid input) when m1 + m2 > M.
pub fn restricted_correlation(
    gram: &GramMatrix,
    m1: usize,
    m2: usize,
    cap: usize,
) -> Result<(f64, bool)> {
    let m = gram.dim();
    if m1 < 1 || m2 < 1 {
        return Err(Error::invalid("restricted correlation block sizes must be >= 1"));
    }
    if m1 + m2 > m {
        return Err(Error::invalid(format!(
            "theta_{{{m1},{m2}}} undefined: m1 + m2 > M = {m}"
        )));
    }
    let mut theta: f64 = 0.0;
    let exact = for_each_disjoint_pair(m, m1, m2, cap, |i1, i2| {
        let block = gram.cross_block(i1, i2);
        let sigma = block
            .svd(false, false)
            .singular_values
            .iter()
            .cloned()
            .fold(0.0f64, f64::max);
        theta = theta.max(sigma);
    });
    Ok((theta, exact))
}

/// kappa1(s, c0) = sqrt(phi_min(2s)) (1 - c0 theta_{s,2s} / phi_min(2s)),
/// reported only when positive. `exact` records whether the extrema were
/// enumerated exhaustively (a requirement for using the value as a
/// certified lower bound).
pub fn kappa1_lower(
    gram: &GramMatrix,
    s: usize,
    c0: f64,
    cap: usize,
) -> Result<(Option<f64>, bool)> {
    let m = gram.dim();
    if s < 1 || 2 * s > m {
        return Err(Error::invalid(format!("kappa1 needs 1 <= s <= M/2, got s = {s}")));
    }
    if 3 * s > m {
        return Err(Error::invalid(format!(
            "kappa1 needs theta_{{s,2s}}, undefined for 3s > M (s = {s}, M = {m})"
        )));
    }
    let (phi_min, _, exact_phi) = restricted_eigenvalues(gram, 2 * s, cap)?;
    let (theta, exact_theta) = restricted_correlation(gram, s, 2 * s, cap)?;
    let exact = exact_phi && exact_theta;
    if phi_min <= 0.0 {
        return Ok((None, exact));
    }
    let value = phi_min.sqrt() * (1.0 - c0 * theta / phi_min);
    Ok((if value > 0.0 { Some(value) } else { None }, exact))
}

/// kappa2(s, m, c0) = sqrt(phi_min(s+m)) (1 - c0 sqrt(s phi_max(m) / (m phi_min(s+m)))),
/// reported only when positive.
pub fn kappa2_lower(
    gram: &GramMatrix,
    s: usize,
    m: usize,
    c0: f64,
    cap: usize,
) -> Result<(Option<f64>, bool)> {
    let cols = gram.dim();
    if s < 1 || m < s || s + m > cols {
        return Err(Error::invalid(format!(
            "kappa2 needs 1 <= s <= m and s + m <= M (s = {s}, m = {m}, M = {cols})"
        )));
    }
    let (phi_min, _, exact_lo) = restricted_eigenvalues(gram, s + m, cap)?;
    let (_, phi_max, exact_hi) = restricted_eigenvalues(gram, m, cap)?;
    let exact = exact_lo && exact_hi;
    if phi_min <= 0.0 {
        return Ok((None, exact));
    }
    let value = phi_min.sqrt()
        * (1.0 - c0 * (s as f64 * phi_max / (m as f64 * phi_min)).sqrt());
    Ok((if value > 0.0 { Some(value) } else { None }, exact))
}

/// Both closed-form lower bounds at once; `m` defaults to `s` for kappa2.
pub fn kappa_lower_bounds(
    gram: &GramMatrix,
    s: usize,
    m: Option<usize>,
    c0: f64,
    cap: usize,
) -> Result<(Option<f64>, Option<f64>)> {
    let cols = gram.dim();
    let kappa1 = if 2 * s <= cols && 3 * s <= cols {
        kappa1_lower(gram, s, c0, cap)?.0
    } else {
        None
    };
    let m_eff = m.unwrap_or(s);
    let kappa2 = if m_eff >= s && s + m_eff <= cols {
        kappa2_lower(gram, s, m_eff, c0, cap)?.0
    } else {
        None
    };
    Ok((kappa1, kappa2))
}

/// Outcome of one assumption check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verdict {
    Holds { slack: f64 },
    Fails { slack: f64 },
    NotApplicable { reason: String },
}

impl Verdict {
    fn strict(lhs_minus_rhs: f64, holds_when_positive: bool) -> Self {
        let holds = if holds_when_positive {
            lhs_minus_rhs > 0.0
        } else {
            lhs_minus_rhs < 0.0
        };
        if holds {
            Verdict::Holds {
                slack: lhs_minus_rhs,
            }
        } else {
            Verdict::Fails {
                slack: lhs_minus_rhs,
            }
        }
    }

    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds { .. })
    }
}

/// The five sufficient conditions, in order:
/// 1. phi_min(2s) > c0 theta_{s,2s}
/// 2. m phi_min(s+m) > c0^2 s phi_max(m)
/// 3. phi_min(s) > 2 c0 theta_{s,1} sqrt(s)
/// 4. phi_min(s) > 2 c0 theta_{1,1} s
/// 5. unit diagonal and theta_{1,1} < 1 / ((1 + 2 c0) s)
///
/// Slack is always reported as LHS - RHS of the inequality as written, so
/// conditions 1-4 hold at positive slack and condition 5 at negative slack.
pub fn check_assumptions(
    gram: &GramMatrix,
    s: usize,
    m: Option<usize>,
    c0: f64,
    cap: usize,
) -> Result<Vec<Verdict>> {
    let cols = gram.dim();
    if s < 1 || s > cols {
        return Err(Error::invalid(format!("s = {s} out of range")));
    }
    if !(c0 > 0.0) {
        return Err(Error::invalid("c0 must be positive"));
    }
    let mut verdicts = Vec::with_capacity(5);

    // Assumption 1.
    if 2 * s <= cols && 3 * s <= cols {
        let (phi_min, _, _) = restricted_eigenvalues(gram, 2 * s, cap)?;
        let (theta, _) = restricted_correlation(gram, s, 2 * s, cap)?;
        verdicts.push(Verdict::strict(phi_min - c0 * theta, true));
    } else {
        verdicts.push(Verdict::NotApplicable {
            reason: format!("needs 2s <= M and 3s <= M (s = {s}, M = {cols})"),
        });
    }

    // Assumption 2.
    match m {
        Some(m_val) if 2 * s <= cols && m_val >= s && s + m_val <= cols => {
            let (phi_lo, _, _) = restricted_eigenvalues(gram, s + m_val, cap)?;
            let (_, phi_hi, _) = restricted_eigenvalues(gram, m_val, cap)?;
            verdicts.push(Verdict::strict(
                m_val as f64 * phi_lo - c0 * c0 * s as f64 * phi_hi,
                true,
            ));
        }
        Some(m_val) => verdicts.push(Verdict::NotApplicable {
            reason: format!("needs s <= M/2, m >= s, s + m <= M (s = {s}, m = {m_val})"),
        }),
        None => verdicts.push(Verdict::NotApplicable {
            reason: "no m supplied".to_string(),
        }),
    }

    // Assumption 3.
    if s + 1 <= cols {
        let (phi_min, _, _) = restricted_eigenvalues(gram, s, cap)?;
        let (theta, _) = restricted_correlation(gram, s, 1, cap)?;
        verdicts.push(Verdict::strict(
            phi_min - 2.0 * c0 * theta * (s as f64).sqrt(),
            true,
        ));
    } else {
        verdicts.push(Verdict::NotApplicable {
            reason: "theta_{s,1} undefined for s + 1 > M".to_string(),
        });
    }

    // Assumption 4.
    {
        let (phi_min, _, _) = restricted_eigenvalues(gram, s, cap)?;
        let (theta, _) = restricted_correlation(gram, 1, 1, cap)?;
        verdicts.push(Verdict::strict(phi_min - 2.0 * c0 * theta * s as f64, true));
    }

    // Assumption 5; the mutual-coherence reading needs a unit diagonal.
    let unit_diagonal = (0..cols).all(|j| (gram.matrix()[(j, j)] - 1.0).abs() <= 1e-9);
    if unit_diagonal {
        let (theta, _) = restricted_correlation(gram, 1, 1, cap)?;
        verdicts.push(Verdict::strict(
            theta - 1.0 / ((1.0 + 2.0 * c0) * s as f64),
            false,
        ));
    } else {
        verdicts.push(Verdict::NotApplicable {
            reason: "gram diagonal is not identically 1".to_string(),
        });
    }

    Ok(verdicts)
}

/// Interval estimate of kappa with its witness.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KappaEstimate {
    /// Certified lower bound (max of applicable kappa1/kappa2), absent when
    /// neither constant is defined and positive.
    pub lower: Option<f64>,
    /// Witnessed upper bound on kappa(s, c0).
    pub upper: f64,
    /// Witnessed upper bound on kappa(s, m, c0), evaluated on the same
    /// witnesses (hence never above `upper`); present when m was supplied.
    pub upper_m: Option<f64>,
    pub witness_j0: Vec<usize>,
    pub witness_delta: Vec<f64>,
    /// Whether every size-s support was enumerated.
    pub exact_enumeration: bool,
    /// Whether `lower` rests on exhaustive enumeration (sampled extrema
    /// cannot certify a lower bound).
    pub lower_certified: bool,
}

/// Estimates kappa(s, c0) (and kappa(s, m, c0) when m is given) as an
/// interval: certified lower bound via the closed-form constants, witnessed
/// upper bound via multi-start cone search over enumerated supports.
pub fn estimate_kappa(design: &DesignMatrix, query: &ReQuery) -> Result<KappaEstimate> {
    let gram = design.gram();
    estimate_kappa_from_gram(&gram, query)
}

pub fn estimate_kappa_from_gram(gram: &GramMatrix, query: &ReQuery) -> Result<KappaEstimate> {
    let cols = gram.dim();
    query.validate(cols)?;
    let s = query.s;
    let cap = query.enumeration_cap;

    let mut lower: Option<f64> = None;
    let mut lower_certified = false;
    if 2 * s <= cols && 3 * s <= cols {
        let (k1, exact) = kappa1_lower(gram, s, query.c0, cap)?;
        if let Some(v) = k1 {
            if exact && v > lower.unwrap_or(f64::NEG_INFINITY) {
                lower = Some(v);
                lower_certified = true;
            }
        }
    }
    let m_eff = query.m.unwrap_or(s);
    if m_eff >= s && s + m_eff <= cols {
        let (k2, exact) = kappa2_lower(gram, s, m_eff, query.c0, cap)?;
        if let Some(v) = k2 {
            if exact && v > lower.unwrap_or(f64::NEG_INFINITY) {
                lower = Some(v);
                lower_certified = true;
            }
        }
    }

    let lipschitz = 2.0 * gram.matrix().clone().symmetric_eigen().eigenvalues.max();
    let params = SearchParams {
        budget: query.search_budget,
        ..Default::default()
    };
    let mut best = f64::INFINITY;
    let mut best_m = f64::INFINITY;
    let mut witness_j0 = Vec::new();
    let mut witness_delta = DVector::zeros(cols);
    let mut rng = ChaCha8Rng::seed_from_u64(0x6b61_7070_6100 ^ s as u64);
    let exact_enumeration = for_each_support(cols, s, cap, |j0| {
        let outcome = min_ratio_over_cone(
            gram.matrix(),
            j0,
            query.c0,
            query.m,
            lipschitz,
            &params,
            &mut rng,
        );
        if outcome.ratio < best {
            best = outcome.ratio;
            witness_j0 = j0.to_vec();
            witness_delta = outcome.delta;
        }
        if let Some(rm) = outcome.ratio_m {
            best_m = best_m.min(rm);
        }
    });

    Ok(KappaEstimate {
        lower,
        upper: best,
        upper_m: query.m.map(|_| best_m),
        witness_j0,
        witness_delta: witness_delta.iter().cloned().collect(),
        exact_enumeration,
        lower_certified,
    })
}

/// Cone minimum for one fixed support (used for weak-set membership):
/// returns the witnessed upper bound on
/// min over the cone of |X D|_2 / (sqrt(n) |D_{J0}|_2).
pub fn support_cone_minimum(
    gram: &GramMatrix,
    j0: &[usize],
    c0: f64,
    m: Option<usize>,
    budget: usize,
) -> f64 {
    let lipschitz = 2.0 * gram.matrix().clone().symmetric_eigen().eigenvalues.max();
    let params = SearchParams {
        budget,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(
        0x7375_7070 ^ j0.iter().fold(0u64, |acc, &j| acc.wrapping_mul(131).wrapping_add(j as u64)),
    );
    min_ratio_over_cone(gram.matrix(), j0, c0, m, lipschitz, &params, &mut rng).ratio
}

/// Verdict on whether a support belongs to the weak set
/// { J0 : min over the c0-cone of |X D|_2 / (sqrt(n) |D_{J0}|_2) >= gamma }.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaMembership {
    /// The certified lower bound (kappa1/kappa2) already clears gamma.
    CertifiedHolds,
    /// A witnessed cone direction drops below gamma.
    WitnessedFails,
    /// Neither side is conclusive; the per-support minimum lies between
    /// the certified floor and the witnessed ceiling.
    Undecided,
}

/// Decides membership of one support in the gamma-restricted weak set.
///
/// The certified side reuses the global kappa1/kappa2 constants at
/// s = |J0| (their proofs hold per support); the falsifying side uses the
/// witnessed per-support cone minimum.
pub fn lambda_membership(
    design: &DesignMatrix,
    j0: &[usize],
    gamma: f64,
    c0: f64,
    m: Option<usize>,
    query: &ReQuery,
) -> Result<LambdaMembership> {
    if !(gamma > 0.0) {
        return Err(Error::invalid("gamma must be positive"));
    }
    let gram = design.gram();
    let cols = gram.dim();
    let s = j0.len();
    if s == 0 || s > cols || j0.iter().any(|&j| j >= cols) {
        return Err(Error::invalid("invalid support for lambda membership"));
    }
    let mut certified_floor: Option<f64> = None;
    if 2 * s <= cols && 3 * s <= cols {
        if let (Some(v), true) = kappa1_lower(&gram, s, c0, query.enumeration_cap)? {
            certified_floor = Some(certified_floor.map_or(v, |c: f64| c.max(v)));
        }
    }
    let m_eff = m.unwrap_or(s);
    if m_eff >= s && s + m_eff <= cols {
        if let (Some(v), true) = kappa2_lower(&gram, s, m_eff, c0, query.enumeration_cap)? {
            certified_floor = Some(certified_floor.map_or(v, |c: f64| c.max(v)));
        }
    }
    if certified_floor.is_some_and(|floor| floor >= gamma) {
        return Ok(LambdaMembership::CertifiedHolds);
    }
    let upper = support_cone_minimum(&gram, j0, c0, m, query.search_budget);
    if upper < gamma {
        return Ok(LambdaMembership::WitnessedFails);
    }
    Ok(LambdaMembership::Undecided)
}

/// Entrywise perturbation radius between two Gram matrices and the cone
/// lower-bound correction eps_n (1 + c0)^2 |J0| it induces.
pub fn gram_perturbation_bound(
    psi_n: &GramMatrix,
    psi_ref: &GramMatrix,
    j0_size: usize,
    c0: f64,
) -> Result<(f64, f64)> {
    let eps_n = psi_n.max_entry_distance(psi_ref)?;
    let term = eps_n * (1.0 + c0) * (1.0 + c0) * j0_size as f64;
    Ok((eps_n, term))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProjectorConeCheck {
    /// |P01 X delta|_2 / sqrt(n).
    pub lhs: f64,
    pub j01: Vec<usize>,
    pub d_j01_norm: f64,
    pub kappa1: Option<f64>,
    pub kappa2: Option<f64>,
    pub holds_vs_kappa1: Option<bool>,
    pub holds_vs_kappa2: Option<bool>,
}

/// Projects X delta onto the span of the J01 columns and compares the
/// scaled norm against kappa1 |D_{J01}|_2 and kappa2 |D_{J01}|_2.
/// Errors when `delta` is not in the c0-cone of `j0`.
pub fn projector_cone_check(
    design: &DesignMatrix,
    j0: &[usize],
    m: usize,
    delta: &CoefficientVector,
    c0: f64,
    cap: usize,
) -> Result<ProjectorConeCheck> {
    if delta.len() != design.m() {
        return Err(Error::invalid("projector check: dimension mismatch"));
    }
    if !cone_membership(delta, j0, c0) {
        return Err(Error::invalid(
            "projector check: delta violates the cone precondition",
        ));
    }
    let (_, j01) = crate::model::select_j01(delta, j0, m)?;
    let n = design.n() as f64;
    let x_delta = design.apply(delta.vector());
    let x01 = design.submatrix(&j01);
    // P01 X delta via minimum-norm least squares on the J01 columns.
    let svd = x01.clone().svd(true, true);
    let coefs = svd
        .solve(&x_delta, 1e-12)
        .map_err(|e| Error::invalid(format!("projector solve failed: {e}")))?;
    let projected = x01 * coefs;
    let lhs = projected.norm() / n.sqrt();
    let d_j01_norm = j01
        .iter()
        .map(|&j| delta.as_slice()[j] * delta.as_slice()[j])
        .sum::<f64>()
        .sqrt();

    let gram = design.gram();
    let s = j0.len().max(1);
    let cols = gram.dim();
    let kappa1 = if 2 * s <= cols && 3 * s <= cols {
        kappa1_lower(&gram, s, c0, cap)?.0
    } else {
        None
    };
    let kappa2 = if m >= s && s + m <= cols {
        kappa2_lower(&gram, s, m, c0, cap)?.0
    } else {
        None
    };
    Ok(ProjectorConeCheck {
        lhs,
        d_j01_norm,
        holds_vs_kappa1: kappa1.map(|k| lhs >= k * d_j01_norm - 1e-9),
        holds_vs_kappa2: kappa2.map(|k| lhs >= k * d_j01_norm - 1e-9),
        kappa1,
        kappa2,
        j01,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelSparsityCheck {
    pub ok: bool,
    pub worst_sigma_min: f64,
    pub exact: bool,
}

/// Enumerates supports of size 2s and reports the smallest singular value
/// of X_J / sqrt(n); `ok` when every submatrix is numerically full rank
/// (threshold 1e-10), which is the identifiability condition for s-sparse
/// vectors.
pub fn kernel_sparsity_check(
    design: &DesignMatrix,
    s: usize,
    cap: usize,
) -> Result<KernelSparsityCheck> {
    let cols = design.m();
    if 2 * s > cols {
        return Err(Error::invalid(format!(
            "kernel check needs 2s <= M (s = {s}, M = {cols})"
        )));
    }
    let n = design.n() as f64;
    let mut worst = f64::INFINITY;
    let exact = for_each_support(cols, 2 * s, cap, |support| {
        let sub = design.submatrix(support) / n.sqrt();
        let sigma_min = sub
            .svd(false, false)
            .singular_values
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        worst = worst.min(sigma_min);
    });
    Ok(KernelSparsityCheck {
        ok: worst > 1e-10,
        worst_sigma_min: worst,
        exact,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RestrictedEigenvalue {
    pub u: usize,
    pub phi_min: f64,
    pub phi_max: f64,
    pub exact: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RestrictedCorrelation {
    pub m1: usize,
    pub m2: usize,
    pub value: f64,
    pub exact: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConeConstantReport {
    pub c0: f64,
    pub kappa1: Option<f64>,
    pub kappa2: Option<f64>,
    pub assumptions: Vec<Verdict>,
    pub kappa: KappaEstimate,
}

/// Full restricted-eigenvalue report for one design.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReAnalysisReport {
    pub n: usize,
    pub columns: usize,
    pub s: usize,
    pub m: Option<usize>,
    pub unit_diagonal: bool,
    /// Maximal eigenvalue of the full Gram matrix.
    pub phi_max_full: f64,
    pub phi: Vec<RestrictedEigenvalue>,
    pub theta: Vec<RestrictedCorrelation>,
    pub per_c0: Vec<ConeConstantReport>,
}

/// Builds the full report: eigenvalue/correlation tables at the orders the
/// (s, m) query touches, plus assumptions and kappa intervals per c0.
pub fn analyze(
    design: &DesignMatrix,
    s: usize,
    m: Option<usize>,
    c0_list: &[f64],
    enumeration_cap: usize,
    search_budget: usize,
) -> Result<ReAnalysisReport> {
    let gram = design.gram();
    let cols = gram.dim();
    if s < 1 || s > cols {
        return Err(Error::invalid(format!("s = {s} out of range for M = {cols}")));
    }
    if c0_list.is_empty() {
        return Err(Error::invalid("c0 list must not be empty"));
    }

    let mut orders: Vec<usize> = vec![1, s];
    if 2 * s <= cols {
        orders.push(2 * s);
    }
    if let Some(m_val) = m {
        orders.push(m_val.min(cols));
        if s + m_val <= cols {
            orders.push(s + m_val);
        }
    }
    orders.sort_unstable();
    orders.dedup();

    let mut phi = Vec::new();
    for &u in &orders {
        let (lo, hi, exact) = restricted_eigenvalues(&gram, u, enumeration_cap)?;
        phi.push(RestrictedEigenvalue {
            u,
            phi_min: lo,
            phi_max: hi,
            exact,
        });
    }

    let mut theta_pairs: Vec<(usize, usize)> = vec![(1, 1)];
    if s + 1 <= cols {
        theta_pairs.push((s, 1));
    }
    if 3 * s <= cols {
        theta_pairs.push((s, 2 * s));
    }
    theta_pairs.dedup();
    let mut theta = Vec::new();
    for (m1, m2) in theta_pairs {
        let (value, exact) = restricted_correlation(&gram, m1, m2, enumeration_cap)?;
        theta.push(RestrictedCorrelation {
            m1,
            m2,
            value,
            exact,
        });
    }

    let mut per_c0 = Vec::new();
    for &c0 in c0_list {
        let (kappa1, kappa2) = kappa_lower_bounds(&gram, s, m, c0, enumeration_cap)?;
        let assumptions = check_assumptions(&gram, s, m, c0, enumeration_cap)?;
        let mut query = ReQuery::new(s, c0)
            .with_cap(enumeration_cap)
            .with_budget(search_budget);
        query.m = m;
        let kappa = estimate_kappa_from_gram(&gram, &query)?;
        per_c0.push(ConeConstantReport {
            c0,
            kappa1,
            kappa2,
            assumptions,
            kappa,
        });
    }

    let unit_diagonal = (0..cols).all(|j| (gram.matrix()[(j, j)] - 1.0).abs() <= 1e-9);
    Ok(ReAnalysisReport {
        n: design.n(),
        columns: cols,
        s,
        m,
        unit_diagonal,
        phi_max_full: gram.phi_max(),
        phi,
        theta,
        per_c0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    const CAP: usize = 1_000_000;

    /// Gram matrix with unit diagonal and constant off-diagonal rho.
    fn equicorrelated(m: usize, rho: f64) -> GramMatrix {
        let psi = DMatrix::from_fn(m, m, |i, j| if i == j { 1.0 } else { rho });
        GramMatrix::from_matrix(psi).unwrap()
    }

    fn identity_gram(m: usize) -> GramMatrix {
        GramMatrix::from_matrix(DMatrix::identity(m, m)).unwrap()
    }

    /// A design whose Gram matrix is the given psd matrix: X = sqrt(n) L^T
    /// from the Cholesky factor (n = M rows suffice).
    fn design_with_gram(psi: &GramMatrix) -> DesignMatrix {
        let m = psi.dim();
        let chol = psi.matrix().clone().cholesky().expect("psd gram");
        let x = (m as f64).sqrt() * chol.l().transpose();
        DesignMatrix::new(x).unwrap()
    }

    #[test]
    fn identity_eigenvalues_are_one_for_all_orders() {
        let gram = identity_gram(5);
        for u in 1..=5 {
            let (lo, hi, exact) = restricted_eigenvalues(&gram, u, CAP).unwrap();
            assert_relative_eq!(lo, 1.0, epsilon = 1e-12);
            assert_relative_eq!(hi, 1.0, epsilon = 1e-12);
            assert!(exact);
        }
    }

    #[test]
    fn two_by_two_eigenvalues() {
        let gram = equicorrelated(2, 0.5);
        let (lo, hi, _) = restricted_eigenvalues(&gram, 2, CAP).unwrap();
        assert_relative_eq!(lo, 0.5, epsilon = 1e-12);
        assert_relative_eq!(hi, 1.5, epsilon = 1e-12);
    }

    #[test]
    fn unit_diagonal_gives_unit_order_one() {
        let gram = equicorrelated(4, 0.37);
        let (lo, hi, _) = restricted_eigenvalues(&gram, 1, CAP).unwrap();
        assert_relative_eq!(lo, 1.0, epsilon = 1e-12);
        assert_relative_eq!(hi, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_out_of_range_order() {
        let gram = identity_gram(3);
        assert!(restricted_eigenvalues(&gram, 4, CAP).is_err());
        assert!(restricted_eigenvalues(&gram, 0, CAP).is_err());
    }

    #[test]
    fn orthogonal_columns_have_zero_correlation() {
        let gram = identity_gram(4);
        let (theta, exact) = restricted_correlation(&gram, 1, 2, CAP).unwrap();
        assert_eq!(theta, 0.0);
        assert!(exact);
    }

    #[test]
    fn pairwise_correlation_is_rho() {
        let gram = equicorrelated(3, -0.45);
        let (theta, _) = restricted_correlation(&gram, 1, 1, CAP).unwrap();
        assert_relative_eq!(theta, 0.45, epsilon = 1e-12);
    }

    #[test]
    fn one_by_two_block_of_equicorrelated() {
        // Block [rho, rho] has singular value rho * sqrt(2).
        let gram = equicorrelated(3, 0.3);
        let (theta, _) = restricted_correlation(&gram, 1, 2, CAP).unwrap();
        assert_relative_eq!(theta, 0.3 * 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn correlation_undefined_on_overlap() {
        let gram = identity_gram(3);
        assert!(restricted_correlation(&gram, 2, 2, CAP).is_err());
    }

    #[test]
    fn kappa1_is_one_on_identity() {
        let gram = identity_gram(6);
        for (s, c0) in [(1usize, 1.0), (2, 3.0), (1, 5.0)] {
            let (k1, exact) = kappa1_lower(&gram, s, c0, CAP).unwrap();
            assert_relative_eq!(k1.unwrap(), 1.0, epsilon = 1e-12);
            assert!(exact);
        }
    }

    #[test]
    fn kappa2_identity_example() {
        // s=1, m=4, c0=1: kappa2 = 1 - sqrt(1/4) = 0.5.
        let gram = identity_gram(6);
        let (k2, _) = kappa2_lower(&gram, 1, 4, 1.0, CAP).unwrap();
        assert_relative_eq!(k2.unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn kappa1_equicorrelated_example() {
        // Six columns, rho = 0.1, s = 1, c0 = 1:
        // phi_min(2) = 0.9, theta_{1,2} = 0.1 sqrt(2),
        // kappa1 = sqrt(0.9) (1 - 0.1 sqrt(2) / 0.9).
        let gram = equicorrelated(6, 0.1);
        let (k1, _) = kappa1_lower(&gram, 1, 1.0, CAP).unwrap();
        let expected = 0.9f64.sqrt() * (1.0 - 0.1 * 2f64.sqrt() / 0.9);
        assert_relative_eq!(k1.unwrap(), expected, epsilon = 1e-12);
        assert_relative_eq!(k1.unwrap(), 0.79962, epsilon = 1e-5);
    }

    #[test]
    fn kappa1_not_applicable_when_negative() {
        // Strong correlation kills the bound.
        let gram = equicorrelated(6, 0.45);
        let (k1, _) = kappa1_lower(&gram, 1, 3.0, CAP).unwrap();
        assert!(k1.is_none());
    }

    #[test]
    fn assumptions_all_hold_on_identity() {
        // Assumption 2 is strict, so m must exceed c0^2 s even when Psi = I.
        let gram = identity_gram(8);
        let verdicts = check_assumptions(&gram, 2, Some(4), 1.0, CAP).unwrap();
        for (k, v) in verdicts.iter().enumerate() {
            assert!(v.holds(), "assumption {} failed: {v:?}", k + 1);
        }
    }

    #[test]
    fn assumption2_identity_boundary_is_strict() {
        let gram = identity_gram(8);
        let verdicts = check_assumptions(&gram, 2, Some(2), 1.0, CAP).unwrap();
        assert!(matches!(verdicts[1], Verdict::Fails { slack } if slack.abs() <= 1e-12));
    }

    #[test]
    fn assumption5_fails_on_strong_equicorrelation() {
        // rho = 0.3, s = 2, c0 = 3: 0.3 >= 1/14.
        let gram = equicorrelated(6, 0.3);
        let verdicts = check_assumptions(&gram, 2, None, 3.0, CAP).unwrap();
        match &verdicts[4] {
            Verdict::Fails { slack } => {
                assert_relative_eq!(*slack, 0.3 - 1.0 / 14.0, epsilon = 1e-12)
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn assumption1_boundary_equality_fails() {
        // Choose rho so phi_min(2) = c0 theta_{1,2} exactly:
        // 1 - rho = rho sqrt(2)  =>  rho = 1 / (1 + sqrt(2)).
        let rho = 1.0 / (1.0 + 2f64.sqrt());
        let gram = equicorrelated(3, rho);
        let verdicts = check_assumptions(&gram, 1, None, 1.0, CAP).unwrap();
        match &verdicts[0] {
            Verdict::Fails { slack } => assert!(slack.abs() <= 1e-12),
            other => panic!("expected boundary failure, got {other:?}"),
        }
    }

    #[test]
    fn assumption5_not_applicable_off_unit_diagonal() {
        let psi = DMatrix::from_row_slice(2, 2, &[2.0, 0.1, 0.1, 2.0]);
        let gram = GramMatrix::from_matrix(psi).unwrap();
        let verdicts = check_assumptions(&gram, 1, None, 1.0, CAP).unwrap();
        assert!(matches!(verdicts[4], Verdict::NotApplicable { .. }));
    }

    #[test]
    fn estimate_kappa_identity_interval_is_unit() {
        let gram = identity_gram(4);
        let query = ReQuery::new(1, 1.0).with_budget(8);
        let est = estimate_kappa_from_gram(&gram, &query).unwrap();
        assert_relative_eq!(est.lower.unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(est.upper, 1.0, epsilon = 1e-9);
        assert!(est.lower_certified);
        assert!(est.exact_enumeration);
        // The witness is a coordinate vector direction.
        let delta = DVector::from_vec(est.witness_delta.clone());
        let on: f64 = est.witness_j0.iter().map(|&j| delta[j].abs()).sum();
        assert!(on > 0.0);
    }

    #[test]
    fn estimate_kappa_correlated_two_by_two() {
        // True kappa(1,1) = sqrt(3)/2; no lower bound is defined at M = 2
        // (theta_{1,2} needs M >= 3 and kappa2 needs s + m <= 2 with a
        // nonpositive value).
        let gram = equicorrelated(2, 0.5);
        let query = ReQuery::new(1, 1.0).with_budget(8);
        let est = estimate_kappa_from_gram(&gram, &query).unwrap();
        assert!(est.lower.is_none());
        assert_relative_eq!(est.upper, 0.75f64.sqrt(), epsilon = 1e-6);
    }

    #[test]
    fn kappa_upper_nonnegative_for_tiny_c0() {
        let gram = equicorrelated(4, 0.2);
        let query = ReQuery::new(2, 1e-6).with_budget(4);
        let est = estimate_kappa_from_gram(&gram, &query).unwrap();
        assert!(est.upper >= 0.0);
        // With the cone collapsed onto J0, the ratio is at least
        // sqrt(phi_min(s)) up to the residual c0 slack.
        let (phi_min, _, _) = restricted_eigenvalues(&gram, 2, CAP).unwrap();
        assert!(est.upper >= phi_min.sqrt() - 1e-3);
    }

    #[test]
    fn perturbation_bound_examples() {
        let gram = equicorrelated(4, 0.2);
        let (eps, term) = gram_perturbation_bound(&gram, &gram, 2, 1.0).unwrap();
        assert_eq!(eps, 0.0);
        assert_eq!(term, 0.0);

        let mut noisy = gram.matrix().clone();
        noisy[(0, 1)] += 0.01;
        noisy[(1, 0)] += 0.01;
        let noisy = GramMatrix::from_matrix(noisy).unwrap();
        let (eps, term) = gram_perturbation_bound(&noisy, &gram, 2, 1.0).unwrap();
        assert_relative_eq!(eps, 0.01, epsilon = 1e-12);
        assert_relative_eq!(term, 0.01 * 4.0 * 2.0, epsilon = 1e-12);

        // Linearity: doubling the perturbation doubles both outputs.
        let mut doubled = gram.matrix().clone();
        doubled[(0, 1)] += 0.02;
        doubled[(1, 0)] += 0.02;
        let doubled = GramMatrix::from_matrix(doubled).unwrap();
        let (eps2, term2) = gram_perturbation_bound(&doubled, &gram, 2, 1.0).unwrap();
        assert_relative_eq!(eps2, 2.0 * eps, epsilon = 1e-12);
        assert_relative_eq!(term2, 2.0 * term, epsilon = 1e-12);
    }

    #[test]
    fn projector_check_identity_design_attains_equality() {
        // X = sqrt(n) I: P01 X delta = sqrt(n) delta_{J01}, so
        // lhs = |delta_{J01}|_2 and kappa1 = 1 makes it an equality.
        let gram = identity_gram(6);
        let design = design_with_gram(&gram);
        let delta = CoefficientVector::from_vec(vec![1.0, 0.4, -0.3, 0.2, 0.0, 0.0]);
        let check = projector_cone_check(&design, &[0], 2, &delta, 1.0, CAP).unwrap();
        assert_relative_eq!(check.lhs, check.d_j01_norm, epsilon = 1e-9);
        assert_eq!(check.holds_vs_kappa1, Some(true));
    }

    #[test]
    fn projector_absorbs_delta_supported_inside_j01() {
        let gram = equicorrelated(5, 0.2);
        let design = design_with_gram(&gram);
        // Support {0, 1, 2} = J0 ∪ two largest outside; P01 X delta = X delta.
        let delta = CoefficientVector::from_vec(vec![1.0, 0.5, -0.4, 0.0, 0.0]);
        let check = projector_cone_check(&design, &[0], 2, &delta, 1.0, CAP).unwrap();
        let x_delta = design.apply(delta.vector());
        assert_relative_eq!(
            check.lhs,
            x_delta.norm() / (design.n() as f64).sqrt(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn projector_check_rejects_out_of_cone_delta() {
        let gram = identity_gram(4);
        let design = design_with_gram(&gram);
        let delta = CoefficientVector::from_vec(vec![0.1, 5.0, 5.0, 5.0]);
        assert!(projector_cone_check(&design, &[0], 1, &delta, 1.0, CAP).is_err());
    }

    #[test]
    fn kernel_check_identity_is_ok_with_unit_margin() {
        let gram = identity_gram(4);
        let design = design_with_gram(&gram);
        let check = kernel_sparsity_check(&design, 1, CAP).unwrap();
        assert!(check.ok);
        assert_relative_eq!(check.worst_sigma_min, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn kernel_check_fails_on_duplicated_column() {
        let x = DMatrix::from_fn(5, 4, |i, j| {
            let col = if j == 3 { 0 } else { j };
            ((i * 3 + col * 7 + 1) as f64).sin() + 0.4
        });
        let design = DesignMatrix::new(x).unwrap();
        let check = kernel_sparsity_check(&design, 1, CAP).unwrap();
        assert!(!check.ok);
    }

    #[test]
    fn lambda_membership_verdicts() {
        let design = design_with_gram(&identity_gram(6));
        let query = ReQuery::new(1, 1.0).with_budget(4);
        // Identity: per-support minimum is 1; gamma below it certifies,
        // gamma above it is falsified by any witness.
        assert_eq!(
            lambda_membership(&design, &[0], 0.9, 1.0, None, &query).unwrap(),
            LambdaMembership::CertifiedHolds
        );
        assert_eq!(
            lambda_membership(&design, &[0], 1.5, 1.0, None, &query).unwrap(),
            LambdaMembership::WitnessedFails
        );

        // Correlated 2x2: no certificate exists (theta_{1,2} undefined), the
        // per-support minimum is sqrt(3)/2, so gamma in between is
        // undecided-from-below but falsifiable from above.
        let gram = equicorrelated(2, 0.5);
        let design = design_with_gram(&gram);
        assert_eq!(
            lambda_membership(&design, &[0], 0.95, 1.0, None, &query).unwrap(),
            LambdaMembership::WitnessedFails
        );
        assert_eq!(
            lambda_membership(&design, &[0], 0.5, 1.0, None, &query).unwrap(),
            LambdaMembership::Undecided
        );
        assert!(lambda_membership(&design, &[0], -1.0, 1.0, None, &query).is_err());
    }

    #[test]
    fn analyze_produces_consistent_report() {
        let gram = equicorrelated(6, 0.1);
        let design = design_with_gram(&gram);
        let report = analyze(&design, 1, Some(2), &[1.0, 3.0], CAP, 8).unwrap();
        assert_eq!(report.columns, 6);
        assert!(report.unit_diagonal);
        assert_eq!(report.per_c0.len(), 2);
        for c0_report in &report.per_c0 {
            if let (Some(lower), upper) = (c0_report.kappa.lower, c0_report.kappa.upper) {
                assert!(lower <= upper + 1e-9);
            }
            assert_eq!(c0_report.assumptions.len(), 5);
        }
        // JSON round trip carries the exact/sampled flags.
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("\"exact\""));
    }
}
