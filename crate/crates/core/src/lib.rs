//! Multi-task hate speech classification.
//!
//! Posts are cleaned and tokenized ([`preprocess`]), mapped to static word
//! vectors ([`embeddings`]), encoded by a two-layer bidirectional LSTM,
//! max-pooled into a sentence vector and classified by a per-task softmax
//! head ([`nn`]). Several labelled corpora can share the encoder by training
//! on mixed batches ([`training`]). Pool provenance drives per-word
//! attribution and pooled vectors feed a t-SNE map ([`interpret`]).

pub mod data;
pub mod embeddings;
pub mod eval;
pub mod interpret;
pub mod matrix;
pub mod nn;
pub mod preprocess;
pub mod seed;
pub mod synthetic;
pub mod training;

pub use embeddings::{CharFallbackConfig, Embedder, EmbeddingTable};
pub use matrix::Matrix;
pub use nn::{Checkpoint, ModelParams, PoolProvenance, TaskInfo};
pub use preprocess::{clean_text, tokenize, CleanPost, RawPost};

/// Engine version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
