//! Trainable numerical engine: bi-LSTM trunk, max-pooling with provenance,
//! softmax heads, cross-entropy, analytic gradients and Adam.

pub mod adam;
pub mod checkpoint;
pub mod head;
pub mod lstm;
pub mod model;
pub mod pool;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{Checkpoint, CheckpointError, TaskInfo};
pub use head::{cross_entropy, cross_entropy_grad, head_forward, softmax, Head};
pub use lstm::{bilstm_encode, lstm_cell, BiLstmLayer, BiStates, LstmParams};
pub use model::{argmax, batch_loss, model_gradients, Gradients, ModelParams, Prediction, Sample};
pub use pool::{max_pool_with_provenance, Direction, PoolProvenance, Winner};

/// Number of stacked bi-LSTM layers in the trunk.
pub const TRUNK_LAYERS: usize = 2;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum NnError {
    #[error("{what}: expected dimension {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("sequence has no tokens")]
    EmptySequence,
    #[error("model has no encoder layers")]
    EmptyTrunk,
    #[error("batch is empty")]
    EmptyBatch,
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("task {task} has no head (model has {heads})")]
    UnknownTask { task: usize, heads: usize },
    #[error("gradient contains non-finite entries")]
    NonFiniteGradient,
}
