use serde::{Deserialize, Serialize};

use super::ModelError;

/// Hyperparameters shared by all models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub filter_widths: Vec<usize>,
    pub filters: usize,
    pub embedding_dim: usize,
    pub max_len: usize,
    pub pool: usize,
    pub dropout: f64,
    /// Hidden layer sizes of the appraisal-to-emotion network.
    pub hidden: Vec<usize>,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Weight of the appraisal loss in the multitask objective.
    pub lambda: f64,
    pub train_embeddings: bool,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            filter_widths: vec![2, 3, 4],
            filters: 64,
            embedding_dim: 300,
            max_len: 64,
            pool: 2,
            dropout: 0.5,
            hidden: vec![64, 64],
            lr: 1e-3,
            batch_size: 32,
            epochs: 25,
            lambda: 1.0,
            train_embeddings: false,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn with_seed(&self, seed: u64) -> Self {
        ModelConfig {
            seed,
            ..self.clone()
        }
    }

    /// Length of the flattened pooled feature vector of the text encoder.
    pub fn feature_len(&self) -> usize {
        self.filter_widths
            .iter()
            .map(|&w| (self.max_len + 1 - w) / self.pool * self.filters)
            .sum()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidConfig(msg));
        if self.filter_widths != [2, 3, 4] {
            return bad(format!("filter widths must be [2, 3, 4], got {:?}", self.filter_widths));
        }
        if self.filters == 0 || self.embedding_dim == 0 {
            return bad("filters and embedding_dim must be positive".into());
        }
        if self.pool == 0 {
            return bad("pool must be positive".into());
        }
        if self.filter_widths.iter().any(|&w| w > self.max_len || (self.max_len + 1 - w) < self.pool) {
            return bad(format!("max_len {} too short for the filters and pooling", self.max_len));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return bad(format!("hidden sizes {:?} must be non-empty and positive", self.hidden));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("learning rate {} must be positive", self.lr));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda {} must be non-negative", self.lambda));
        }
        Ok(())
    }
}
