//! A small double-precision autodiff engine.
//!
//! Just enough for the text and appraisal models: dense tensors, an eager
//! graph recording the operations of one forward pass, reverse-mode
//! gradients, the Adam optimizer, a finite-difference gradient checker and
//! a text checkpoint format.

mod checkpoint;
pub mod gradcheck;
mod graph;
mod optim;
mod params;
mod rng;
mod tensor;

use thiserror::Error;

pub use checkpoint::{load_params, params_from_text, params_to_text, save_params};
pub use graph::{sigmoid, softmax, Graph, Mode, NodeId, OpKind, PROB_EPS};
pub use optim::Adam;
pub use params::{Gradients, Param, ParamId, ParamStore};
pub use rng::Rng;
pub use tensor::Tensor;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },
    #[error("backward called on a node that was not evaluated in this graph")]
    GraphNotEvaluated,
    #[error("loss must be a single value, got shape {0:?}")]
    NotScalar(Vec<usize>),
    #[error("unknown parameter {0:?}")]
    UnknownParameter(String),
    #[error("checkpoint line {line}: {detail}")]
    Parse { line: usize, detail: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
