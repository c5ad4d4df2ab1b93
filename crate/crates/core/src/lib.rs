//! Emotion classification from text, informed by cognitive appraisal.
//!
//! * [`corpus`]: instances, TSV loading, synthetic corpora, fold plans.
//! * [`agreement`]: Cohen's κ, appraisal/emotion co-occurrence and the
//!   reference appraisal profiles.
//! * [`nn`]: a small autodiff engine with gradient checking.
//! * [`encoder`]: tokenization, vocabulary, word vectors.
//! * [`models`]: CNN text classifiers, the appraisal MLP, pipelines and
//!   oracle ensembles.
//! * [`evaluation`]: metrics, repeated cross-validation and reports.

pub mod agreement;
pub mod corpus;
pub mod encoder;
pub mod evaluation;
pub mod models;
pub mod nn;
pub mod table;

pub use corpus::{AppraisalVector, Corpus, CorpusError, Dimension, Emotion, FoldPlan, Instance};
pub use table::Table;
