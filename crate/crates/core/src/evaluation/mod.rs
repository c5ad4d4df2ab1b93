//! Metrics, repeated cross-validation, report tables and error listings.

mod analysis;
mod metrics;
mod report;
mod runner;

use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::models::{ModelConfig, ModelError};

pub use analysis::{appraisal_listing, error_analysis, error_table, Block, ErrorRecord};
pub use metrics::{compute_metrics, compute_multilabel_metrics, ClassScore, Counts, Metrics};
pub use report::{emit_report, predictions_table, Report};
pub use runner::{run_batch, run_experiment, Cell, Prediction, RunResult, Task};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("label sequences differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("fold plan mismatch: {0}")]
    FoldPlanMismatch(String),
    #[error("text tasks need a vocabulary and word vectors")]
    MissingEncoder,
    #[error("instance `{0}` has no gold appraisal")]
    MissingAppraisal(String),
    #[error("repetition {repetition}, fold {fold}: {source}")]
    Fold {
        repetition: usize,
        fold: usize,
        #[source]
        source: ModelError,
    },
    #[error("{task} scored {oracle} but a component scored {best} (repetition {repetition}, fold {fold})")]
    OracleViolation {
        task: &'static str,
        repetition: usize,
        fold: usize,
        oracle: f64,
        best: f64,
    },
    #[error(transparent)]
    Config(ModelError),
    #[error("{0}")]
    InvalidArgument(String),
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// How fold-level results are combined, recorded with every run.
pub const AGGREGATION: &str = "arithmetic mean over repetition x fold cells; micro averages pool counts within a cell";

/// Everything a run depended on, written next to its reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetadata {
    pub corpus: String,
    pub corpus_provenance: String,
    pub instances: usize,
    pub embeddings: String,
    pub embedding_coverage: Option<f64>,
    pub tasks: Vec<String>,
    pub k: usize,
    pub repetitions: usize,
    pub fold_seed: u64,
    pub partition_hash: String,
    pub aggregation: String,
    pub jobs: usize,
    pub model: ModelConfig,
}

impl RunMetadata {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("metadata serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, path: &Path) -> Result<(), EvalError> {
        report::write_file(path, &self.to_json())
    }
}
