use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::eval::{wilcoxon_signed_rank, ConfusionMatrix, WilcoxonResult};
use crate::error::{Result, SegalignError};

pub const RESULTS_SCHEMA: u32 = 1;

/// Accuracy of one scorer on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultEntry {
    pub scorer: String,
    pub dataset: String,
    pub accuracy: f64,
    pub std: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fold_accuracies: Vec<f64>,
    pub confusion: ConfusionMatrix,
    /// Wall-clock seconds.
    pub timing: f64,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub params: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsFile {
    pub schema: u32,
    pub results: Vec<ResultEntry>,
}

impl ResultsFile {
    pub fn new(results: Vec<ResultEntry>) -> Self {
        Self {
            schema: RESULTS_SCHEMA,
            results,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: Self = serde_json::from_str(s)?;
        if f.schema != RESULTS_SCHEMA {
            return Err(SegalignError::InvalidArgument(format!(
                "unsupported results schema {}, expected {RESULTS_SCHEMA}",
                f.schema
            )));
        }
        Ok(f)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// `dataset,scorer,accuracy,std,timing` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dataset,scorer,accuracy,std,timing\n");
        for r in &self.results {
            let _ = writeln!(out, "{},{},{},{},{}", r.dataset, r.scorer, r.accuracy, r.std, r.timing);
        }
        out
    }
}

/// Pairs per-dataset accuracies of two results files by dataset name (in the
/// order of `a`) and runs the signed-rank test of `a` against `b`.
pub fn compare_results(a: &ResultsFile, b: &ResultsFile) -> Result<(Vec<String>, WilcoxonResult)> {
    let (mut names, mut xa, mut xb) = (Vec::new(), Vec::new(), Vec::new());
    for ra in &a.results {
        if let Some(rb) = b.results.iter().find(|r| r.dataset == ra.dataset) {
            names.push(ra.dataset.clone());
            xa.push(ra.accuracy);
            xb.push(rb.accuracy);
        }
    }
    if names.is_empty() {
        return Err(SegalignError::EmptyInput("the two results files share no dataset".into()));
    }
    Ok((names, wilcoxon_signed_rank(&xa, &xb)?))
}
