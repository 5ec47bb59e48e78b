//! Single-task and transfer training loops, model selection and grid search.

pub mod config;
pub mod grid;
pub mod sampling;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use config::{ConfigError, EmbeddingSource, Mode, TrainConfig};
pub use grid::{grid_search, GridRow};
pub use sampling::{
    mixed_batches, oversample, oversample_by, stratified_split, stratified_split_by,
    subsample_stratified, BatchItem,
};

use crate::embeddings::Embedder;
use crate::eval::macro_f1;
use crate::matrix::Matrix;
use crate::nn::{
    adam_step, model_gradients, AdamState, Checkpoint, ModelParams, NnError, Sample, TaskInfo,
    TRUNK_LAYERS,
};
use crate::preprocess::CleanPost;
use crate::seed;

/// Share of each class that goes to the training side of a split.
pub const TRAIN_RATIO: f64 = 0.9;

/// Stand-in token for posts that are empty after cleaning.
pub const EMPTY_POST_TOKEN: &str = "<empty>";

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("data: {0}")]
    Data(String),
    #[error("class {0} has no samples")]
    EmptyClass(usize),
    #[error("class {class} has {count} sample(s); at least 2 are needed to split")]
    ClassTooSmall { class: usize, count: usize },
    #[error("non-finite loss at epoch {epoch}, batch {batch} (loss = {loss})")]
    NonFiniteLoss { epoch: usize, batch: usize, loss: f64 },
    #[error("numeric failure at epoch {epoch}: {source}")]
    Numeric {
        epoch: usize,
        #[source]
        source: NnError,
    },
    #[error(transparent)]
    Model(#[from] NnError),
}

impl From<ConfigError> for TrainError {
    fn from(e: ConfigError) -> Self {
        TrainError::Config(e.to_string())
    }
}

/// A task's data after splitting.
#[derive(Debug, Clone)]
pub struct TaskSplit {
    pub info: TaskInfo,
    pub train: Vec<CleanPost>,
    pub validation: Vec<CleanPost>,
}

impl TaskSplit {
    pub fn num_classes(&self) -> usize {
        self.info.labels.len()
    }
}

/// One validation point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryPoint {
    pub epoch: usize,
    /// Validation macro-F1 per task, in task order.
    pub macro_f1: Vec<f64>,
    /// Mean training loss over the epoch.
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    pub tasks: Vec<String>,
    pub points: Vec<HistoryPoint>,
}

impl TrainHistory {
    /// CSV with header `epoch,task,macro_f1,loss`, one row per task per point.
    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["epoch", "task", "macro_f1", "loss"])?;
        for p in &self.points {
            for (task, f1) in self.tasks.iter().zip(&p.macro_f1) {
                w.write_record([
                    p.epoch.to_string(),
                    task.clone(),
                    format!("{f1:.6}"),
                    format!("{:.6}", p.loss),
                ])?;
            }
        }
        w.flush()
    }
}

pub struct TrainOutcome {
    /// The checkpoint with the best mean validation macro-F1.
    pub checkpoint: Checkpoint,
    pub history: TrainHistory,
    pub best_epoch: usize,
    /// Per-task validation macro-F1 of the selected checkpoint.
    pub best_scores: Vec<f64>,
}

impl TrainOutcome {
    pub fn best_mean(&self) -> f64 {
        mean(&self.best_scores)
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len().max(1) as f64
}

/// Embeds a post; empty posts become a single placeholder token.
pub fn embed_post(embedder: &Embedder, post: &CleanPost) -> Matrix {
    if post.tokens.is_empty() {
        embedder.embed_sequence(&[EMPTY_POST_TOKEN])
    } else {
        embedder.embed_sequence(&post.tokens)
    }
}

/// Predicted label ids for `posts` under head `task`.
pub fn predict_labels(
    params: &ModelParams,
    embedder: &Embedder,
    posts: &[CleanPost],
    task: usize,
) -> Result<Vec<usize>, NnError> {
    posts
        .iter()
        .map(|p| params.predict(&embed_post(embedder, p), task).map(|r| r.label))
        .collect()
}

fn validation_scores(
    params: &ModelParams,
    inputs: &[Vec<Matrix>],
    tasks: &[TaskSplit],
) -> Result<Vec<f64>, NnError> {
    tasks
        .iter()
        .zip(inputs)
        .enumerate()
        .map(|(t, (split, xs))| {
            let pred = xs
                .iter()
                .map(|x| params.predict(x, t).map(|r| r.label))
                .collect::<Result<Vec<_>, _>>()?;
            let gold: Vec<usize> = split.validation.iter().map(|p| p.label_id).collect();
            Ok(macro_f1(&gold, &pred, split.num_classes()).unwrap_or(0.0))
        })
        .collect()
}

/// Trains a model on `tasks` and returns the best-validation checkpoint.
///
/// Each task's training side is oversampled to balance, all tasks are
/// mixed into shared batches (one head per task) and every `eval_every`
/// epochs the validation macro-F1 of every task is recorded.
pub fn train(
    config: &TrainConfig,
    tasks: &[TaskSplit],
    embedder: &Embedder,
) -> Result<TrainOutcome, TrainError> {
    if config.epochs == 0 || config.eval_every == 0 || !config.epochs.is_multiple_of(config.eval_every) {
        return Err(TrainError::Config("eval_every must divide a positive epoch count".into()));
    }
    if tasks.is_empty() {
        return Err(TrainError::Config("no tasks".into()));
    }
    match config.mode {
        Mode::SingleTask if tasks.len() > 1 => {
            return Err(TrainError::Config(
                "single-task mode takes exactly one task".into(),
            ))
        }
        Mode::Transfer if tasks.len() == 1 => {
            log::warn!("transfer mode with a single task; training a single-task model");
        }
        _ => {}
    }
    for t in tasks {
        if t.validation.is_empty() {
            return Err(TrainError::Data(format!("task {} has no validation samples", t.info.name)));
        }
    }

    let classes: Vec<usize> = tasks.iter().map(TaskSplit::num_classes).collect();
    let mut params = ModelParams::init(
        embedder.dim(),
        config.hidden_size,
        TRUNK_LAYERS,
        &classes,
        &mut seed::rng(config.seed, "init"),
    );

    let mut train_inputs: Vec<Vec<(Matrix, usize)>> = Vec::with_capacity(tasks.len());
    for (t, split) in tasks.iter().enumerate() {
        let balanced = oversample(
            &split.train,
            split.num_classes(),
            seed::derive_indexed(config.seed, "oversample", t as u64),
        )?;
        train_inputs.push(
            balanced
                .iter()
                .map(|p| (embed_post(embedder, p), p.label_id))
                .collect(),
        );
    }
    let val_inputs: Vec<Vec<Matrix>> = tasks
        .iter()
        .map(|s| s.validation.iter().map(|p| embed_post(embedder, p)).collect())
        .collect();
    let sizes: Vec<usize> = train_inputs.iter().map(Vec::len).collect();

    let adam = config.adam();
    let mut state = AdamState::for_model(&params);
    let mut history = TrainHistory {
        tasks: tasks.iter().map(|t| t.info.name.clone()).collect(),
        points: Vec::new(),
    };
    let mut best: Option<(f64, usize, Vec<f64>, ModelParams)> = None;

    for epoch in 1..=config.epochs {
        let batches = mixed_batches(
            &sizes,
            config.batch_size,
            seed::derive_indexed(config.seed, "epoch", epoch as u64),
        )?;
        let mut loss_sum = 0.0;
        let mut seen = 0usize;
        for (b, batch) in batches.iter().enumerate() {
            let samples: Vec<Sample> = batch
                .iter()
                .map(|it| {
                    let (x, gold) = &train_inputs[it.task][it.index];
                    Sample {
                        inputs: x,
                        gold: *gold,
                        task: it.task,
                    }
                })
                .collect();
            let (loss, grads) = model_gradients(&params, &samples)?;
            if !loss.is_finite() {
                return Err(TrainError::NonFiniteLoss { epoch, batch: b, loss });
            }
            adam_step(&mut params, &grads, &mut state, &adam)
                .map_err(|source| TrainError::Numeric { epoch, source })?;
            loss_sum += loss * samples.len() as f64;
            seen += samples.len();
        }
        if epoch % config.eval_every == 0 {
            let scores = validation_scores(&params, &val_inputs, tasks)?;
            let score = mean(&scores);
            let loss = loss_sum / seen as f64;
            log::debug!("epoch {epoch}: loss {loss:.5}, validation macro-F1 {score:.4}");
            if best.as_ref().is_none_or(|b| score > b.0) {
                best = Some((score, epoch, scores.clone(), params.clone()));
            }
            history.points.push(HistoryPoint {
                epoch,
                macro_f1: scores,
                loss,
            });
        }
    }

    let (_, best_epoch, best_scores, best_params) = best.expect("at least one evaluation");
    let checkpoint = Checkpoint::new(tasks.iter().map(|t| t.info.clone()).collect(), best_params)
        .map_err(|e| TrainError::Config(e.to_string()))?;
    Ok(TrainOutcome {
        checkpoint,
        history,
        best_epoch,
        best_scores,
    })
}

/// Splits every task 90/10 with a per-task seed derived from `root_seed`.
pub fn split_tasks(
    tasks: &[(TaskInfo, Vec<CleanPost>)],
    root_seed: u64,
) -> Result<Vec<TaskSplit>, TrainError> {
    tasks
        .iter()
        .enumerate()
        .map(|(t, (info, posts))| {
            let (train, validation) = stratified_split(
                posts,
                info.labels.len(),
                TRAIN_RATIO,
                seed::derive_indexed(root_seed, "split", t as u64),
            )?;
            Ok(TaskSplit {
                info: info.clone(),
                train,
                validation,
            })
        })
        .collect()
}
