//! Metrics, repeated-resampling statistics and the n-gram baseline.

pub mod baseline;
pub mod metrics;
pub mod repeated;

pub use baseline::{baseline_char_ngram_lr, BaselineConfig, CharNgramLogReg};
pub use metrics::{confusion, confusion_with_labels, macro_f1, ClassScores, ConfusionMatrix, EvalReport};
pub use repeated::{mean_std, repeated_experiment, RepeatedReport, RunRow, TaskSummary};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("gold has {gold} labels but predictions have {pred}")]
    LengthMismatch { gold: usize, pred: usize },
    #[error("nothing to evaluate")]
    Empty,
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("at least one repetition is required")]
    NoRepetitions,
    #[error("baseline: {0}")]
    Baseline(String),
}
