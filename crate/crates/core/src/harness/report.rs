//! Machine-readable outputs: the fixed-schema trial CSV and the JSON
//! summary. Floats are written with 17 significant digits so records parse
//! back bit-identically.

use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::harness::montecarlo::CoverageSummary;
use crate::harness::trial::TrialRecord;

/// Canonical bound identifiers for a given p list, in emission order.
pub fn bound_names(p_list: &[f64]) -> Vec<String> {
    let mut names = Vec::new();
    names.push("th43-l1".to_string());
    names.push("th44-pred".to_string());
    for p in p_list {
        names.push(format!("th42-lp-{p}"));
    }
    names.push("th4a-l1".to_string());
    names.push("th4a-pred".to_string());
    for p in p_list {
        names.push(format!("th4a-lp-{p}"));
    }
    names.push("th53-l1".to_string());
    names.push("th54-pred".to_string());
    names.push("th55-sparsity".to_string());
    for p in p_list {
        names.push(format!("th52-lp-{p}"));
    }
    names.push("th1-equiv".to_string());
    names.push("th2-equiv".to_string());
    names.push("th3-oracle".to_string());
    names.push("prop1-oracle".to_string());
    names
}

fn column_token(name: &str) -> String {
    name.replace(['-', '.'], "_")
}

/// 17 significant digits, round-trip exact for f64.
fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v:.16e}")
    }
}

fn fmt_bool(v: bool) -> &'static str {
    if v {
        "true"
    } else {
        "false"
    }
}

fn fmt_opt_bool(v: Option<bool>) -> String {
    v.map(|b| fmt_bool(b).to_string()).unwrap_or_default()
}

fn fmt_opt_float(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

/// Header line of the trial CSV.
pub fn csv_header(p_list: &[f64]) -> String {
    let mut columns = vec![
        "trial_id".to_string(),
        "seed".to_string(),
        "n".to_string(),
        "M".to_string(),
        "s".to_string(),
        "A".to_string(),
        "sigma".to_string(),
        "design_kind".to_string(),
        "event_A".to_string(),
        "event_B".to_string(),
        "max_scaled_vj".to_string(),
        "linear_model".to_string(),
        "lasso_converged".to_string(),
        "lasso_sweeps".to_string(),
        "lasso_kkt_violation".to_string(),
        "lasso_sparsity".to_string(),
        "lasso_l1_norm".to_string(),
        "dantzig_solved".to_string(),
        "dantzig_feasible".to_string(),
        "dantzig_pivots".to_string(),
        "dantzig_max_constraint".to_string(),
        "dantzig_sparsity".to_string(),
        "dantzig_l1_norm".to_string(),
        "l1_dominance".to_string(),
        "lasso_dantzig_feasible".to_string(),
        "lasso_cone3_vs_star".to_string(),
        "dantzig_cone_vs_star".to_string(),
        "dantzig_cone_vs_lasso".to_string(),
        "lasso_l1".to_string(),
        "lasso_pred".to_string(),
        "dantzig_l1".to_string(),
        "dantzig_pred".to_string(),
    ];
    for name in bound_names(p_list) {
        let token = column_token(&name);
        columns.push(format!("{token}_empirical"));
        columns.push(format!("{token}_rhs"));
        columns.push(format!("{token}_holds"));
        columns.push(format!("{token}_applicable"));
    }
    columns.join(",")
}

fn record_row(record: &TrialRecord, config: &ExperimentConfig) -> String {
    let mut fields = vec![
        record.trial_id.to_string(),
        record.seed.to_string(),
        config.n.to_string(),
        config.m_cols.to_string(),
        config.s.to_string(),
        fmt_float(config.a),
        fmt_float(config.sigma),
        config.design.label(),
        fmt_bool(record.events.event_a).to_string(),
        fmt_bool(record.events.event_b).to_string(),
        fmt_float(record.events.max_scaled_vj),
        fmt_bool(record.linear_model).to_string(),
        fmt_bool(record.lasso.converged).to_string(),
        record.lasso.sweeps.to_string(),
        fmt_float(record.lasso.kkt_violation),
        record.lasso.sparsity.to_string(),
        fmt_float(record.lasso.l1_norm),
        fmt_bool(record.dantzig.solved).to_string(),
        fmt_bool(record.dantzig.feasible).to_string(),
        record.dantzig.pivots.to_string(),
        fmt_float(record.dantzig.max_constraint),
        record.dantzig.sparsity.to_string(),
        fmt_float(record.dantzig.l1_norm),
        fmt_bool(record.l1_dominance).to_string(),
        fmt_bool(record.lasso.dantzig_feasible).to_string(),
        fmt_opt_bool(record.lasso_cone3_vs_star),
        fmt_opt_bool(record.dantzig_cone_vs_star),
        fmt_bool(record.dantzig_cone_vs_lasso).to_string(),
        fmt_opt_float(record.lasso_vs_star.as_ref().map(|l| l.l1)),
        fmt_float(record.lasso_pred_loss),
        fmt_opt_float(record.dantzig_vs_star.as_ref().map(|l| l.l1)),
        fmt_float(record.dantzig_pred_loss),
    ];
    for check in &record.bounds {
        if check.applicable {
            fields.push(fmt_float(check.empirical));
            fields.push(fmt_float(check.rhs));
            fields.push(fmt_bool(check.holds).to_string());
            fields.push("true".to_string());
        } else {
            fields.push(String::new());
            fields.push(String::new());
            fields.push(String::new());
            fields.push("false".to_string());
        }
    }
    fields.join(",")
}

/// Renders the full CSV document (header plus one row per trial, ordered
/// by trial id).
pub fn render_csv(records: &[TrialRecord], config: &ExperimentConfig) -> String {
    let mut out = String::new();
    out.push_str(&csv_header(&config.p_list));
    out.push('\n');
    for record in records {
        debug_assert_eq!(
            record.bounds.len(),
            bound_names(&config.p_list).len(),
            "record bound list must match the canonical schema"
        );
        out.push_str(&record_row(record, config));
        out.push('\n');
    }
    out
}

/// Writes the CSV and the JSON summary, with path context on I/O errors.
pub fn emit_report(
    records: &[TrialRecord],
    summary: &CoverageSummary,
    csv_path: &Path,
    summary_path: &Path,
) -> Result<()> {
    let csv = render_csv(records, &summary.config);
    std::fs::write(csv_path, csv)
        .map_err(|e| Error::io(format!("writing {}", csv_path.display()), e))?;
    crate::io::write_json(summary_path, summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_schema_is_stable() {
        let header = csv_header(&[1.5, 2.0]);
        let expected_prefix = "trial_id,seed,n,M,s,A,sigma,design_kind,event_A,event_B,\
                               max_scaled_vj,linear_model,lasso_converged,lasso_sweeps,\
                               lasso_kkt_violation,lasso_sparsity,lasso_l1_norm,dantzig_solved,\
                               dantzig_feasible,dantzig_pivots,dantzig_max_constraint,\
                               dantzig_sparsity,dantzig_l1_norm,l1_dominance,\
                               lasso_dantzig_feasible,lasso_cone3_vs_star,dantzig_cone_vs_star,\
                               dantzig_cone_vs_lasso,lasso_l1,lasso_pred,dantzig_l1,dantzig_pred";
        let expected_prefix: String = expected_prefix
            .split_whitespace()
            .collect::<Vec<_>>()
            .join("");
        assert!(header.starts_with(&expected_prefix), "header drifted: {header}");
        assert!(header.contains("th42_lp_1_5_rhs"));
        assert!(header.contains("prop1_oracle_applicable"));
        let bounds = bound_names(&[1.5, 2.0]);
        assert_eq!(bounds.len(), 17);
        assert_eq!(
            header.split(',').count(),
            32 + 4 * bounds.len(),
            "column count drifted"
        );
    }

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, 1.0 / 3.0, 2f64.sqrt() * 1e-7, -123.456e20] {
            let s = fmt_float(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(v, back, "{s} did not round trip");
        }
        assert_eq!(fmt_float(f64::NAN), "");
    }
}
