//! Evaluation report: one JSON document plus an aligned text table.
//!
//! Everything outside the `metadata` block is deterministic given the
//! configuration and seed; timestamps and durations live only in
//! `metadata`.

use serde::{Deserialize, Serialize};

use perpred_core::{ConditionalError, Label, SparseLinearClassifier};

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationReport {
    /// Non-deterministic run facts; excluded from reproducibility checks.
    pub metadata: RunMetadata,
    /// The resolved configuration the run used.
    pub config: ExperimentConfig,
    pub summary: Summary,
    pub trials: Vec<TrialReport>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMetadata {
    pub created_unix_ms: u128,
    pub duration_ms: u128,
    pub tool_version: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub trials: usize,
    /// Median test error of the personalized predictions over trials.
    pub pers_error_median: Option<f64>,
    /// Median test error of the global sparse baseline over trials.
    pub sparse_error_median: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialReport {
    pub seed: u64,
    pub train_size: usize,
    pub test_size: usize,
    pub dim: usize,
    pub list_size: usize,
    pub attempted_tuples: u64,
    pub pers_error: Option<f64>,
    pub sparse_error: Option<f64>,
    pub failed_queries: usize,
    /// Baseline: the list classifier with the best training accuracy.
    pub sparse_classifier: Option<SparseLinearClassifier>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub per_query: Vec<QueryRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QueryRecord {
    pub id: usize,
    pub query: Vec<f64>,
    pub true_label: Label,
    pub predicted: Option<Label>,
    pub classifier_terms: Vec<(usize, f64)>,
    pub halfspace_normal: Vec<f64>,
    pub support_count: usize,
    pub conditional_error: ConditionalError,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub fn median(values: &mut Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite errors"));
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    })
}

/// Renders the per-trial table, one row per seed plus the median line.
pub fn render_table(report: &EvaluationReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:>12} {:>8} {:>7} {:>5} {:>9} {:>8} {:>8} {:>7}\n",
        "seed", "train", "test", "dim", "list", "sparse", "pers", "failed"
    ));
    let fmt_err = |e: Option<f64>| match e {
        Some(v) => format!("{v:.4}"),
        None => "-".to_string(),
    };
    for t in &report.trials {
        out.push_str(&format!(
            "{:>12} {:>8} {:>7} {:>5} {:>9} {:>8} {:>8} {:>7}\n",
            t.seed,
            t.train_size,
            t.test_size,
            t.dim,
            t.list_size,
            fmt_err(t.sparse_error),
            fmt_err(t.pers_error),
            t.failed_queries,
        ));
    }
    out.push_str(&format!(
        "{:>12} {:>8} {:>7} {:>5} {:>9} {:>8} {:>8} {:>7}\n",
        "median",
        "",
        "",
        "",
        "",
        fmt_err(report.summary.sparse_error_median),
        fmt_err(report.summary.pers_error_median),
        "",
    ));
    out
}
