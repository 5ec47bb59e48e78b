use rand::Rng;
use serde::{Deserialize, Serialize};

use super::head::{cross_entropy, cross_entropy_grad, softmax, Head};
use super::lstm::{backprop_encoder, encode_cached, BiLstmLayer};
use super::pool::{pool_states, unpool, PoolProvenance};
use super::NnError;
use crate::matrix::Matrix;

/// Shared bi-LSTM trunk plus one classification head per task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub embed_dim: usize,
    pub hidden: usize,
    pub trunk: Vec<BiLstmLayer>,
    pub heads: Vec<Head>,
}

/// Same shape as [`ModelParams`], holding loss derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub ModelParams);

impl ModelParams {
    /// Builds a model with `layers` stacked bi-LSTM layers and one head per
    /// entry of `classes_per_task`.
    pub fn init<R: Rng>(
        embed_dim: usize,
        hidden: usize,
        layers: usize,
        classes_per_task: &[usize],
        rng: &mut R,
    ) -> Self {
        let trunk = (0..layers)
            .map(|l| BiLstmLayer::init(if l == 0 { embed_dim } else { 2 * hidden }, hidden, rng))
            .collect();
        let heads = classes_per_task
            .iter()
            .map(|&k| Head::init(hidden, k, rng))
            .collect();
        Self {
            embed_dim,
            hidden,
            trunk,
            heads,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            embed_dim: self.embed_dim,
            hidden: self.hidden,
            trunk: self
                .trunk
                .iter()
                .map(|l| BiLstmLayer::zeros(l.forward.input_dim, l.forward.hidden))
                .collect(),
            heads: self
                .heads
                .iter()
                .map(|h| Head::zeros(h.input_dim, h.classes))
                .collect(),
        }
    }

    /// Every parameter block in checkpoint order: for each layer, forward
    /// then backward direction, each as input weights, hidden weights,
    /// bias; then for each head, weight then bias.
    pub fn blocks(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for layer in &self.trunk {
            out.extend(layer.forward.slices());
            out.extend(layer.backward.slices());
        }
        for head in &self.heads {
            out.extend(head.slices());
        }
        out
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for layer in &mut self.trunk {
            out.extend(layer.forward.slices_mut());
            out.extend(layer.backward.slices_mut());
        }
        for head in &mut self.heads {
            out.extend(head.slices_mut());
        }
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.blocks().iter().map(|b| b.len()).sum()
    }

    pub fn head(&self, task: usize) -> Result<&Head, NnError> {
        self.heads.get(task).ok_or(NnError::UnknownTask {
            task,
            heads: self.heads.len(),
        })
    }

    /// Pooled sentence vector and its provenance.
    pub fn encode(&self, x: &Matrix) -> Result<(Vec<f64>, PoolProvenance), NnError> {
        let caches = encode_cached(x, &self.trunk)?;
        let top = caches.last().ok_or(NnError::EmptyTrunk)?;
        pool_states(&top.states())
    }

    pub fn predict(&self, x: &Matrix, task: usize) -> Result<Prediction, NnError> {
        let head = self.head(task)?;
        let (pooled, provenance) = self.encode(x)?;
        let probs = softmax(&head.logits(&pooled)?);
        Ok(Prediction {
            label: argmax(&probs),
            probs,
            pooled,
            provenance,
        })
    }
}

pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Output of one forward pass.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub label: usize,
    pub probs: Vec<f64>,
    pub pooled: Vec<f64>,
    pub provenance: PoolProvenance,
}

/// A training example routed to one task head.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub inputs: &'a Matrix,
    pub gold: usize,
    pub task: usize,
}

/// Loss of one sample, accumulating its (unscaled) gradient into `grads`.
fn accumulate_sample(
    params: &ModelParams,
    sample: &Sample<'_>,
    grads: &mut ModelParams,
) -> Result<f64, NnError> {
    let head = params.head(sample.task)?;
    let caches = encode_cached(sample.inputs, &params.trunk)?;
    let top = caches.last().ok_or(NnError::EmptyTrunk)?;
    let (pooled, prov) = pool_states(&top.states())?;
    let logits = head.logits(&pooled)?;
    let loss = cross_entropy(&logits, sample.gold)?;
    let dlogits = cross_entropy_grad(&logits, sample.gold)?;

    let h = head.input_dim;
    let gh = &mut grads.heads[sample.task];
    let mut dpooled = vec![0.0; h];
    for (k, &dz) in dlogits.iter().enumerate() {
        gh.bias[k] += dz;
        let row = &head.weight[k * h..(k + 1) * h];
        let grow = &mut gh.weight[k * h..(k + 1) * h];
        for j in 0..h {
            grow[j] += dz * pooled[j];
            dpooled[j] += dz * row[j];
        }
    }
    let top_grad = unpool(&dpooled, &prov, sample.inputs.rows());
    backprop_encoder(&params.trunk, &caches, top_grad, &mut grads.trunk);
    Ok(loss)
}

/// Mean cross-entropy over `batch` and its exact gradient with respect to
/// every trunk and head parameter. Embeddings are inputs, not parameters.
pub fn model_gradients(
    params: &ModelParams,
    batch: &[Sample<'_>],
) -> Result<(f64, Gradients), NnError> {
    if batch.is_empty() {
        return Err(NnError::EmptyBatch);
    }
    let mut grads = params.zeros_like();
    let mut total = 0.0;
    for sample in batch {
        total += accumulate_sample(params, sample, &mut grads)?;
    }
    let scale = 1.0 / batch.len() as f64;
    for block in grads.blocks_mut() {
        for g in block.iter_mut() {
            *g *= scale;
        }
    }
    Ok((total * scale, Gradients(grads)))
}

/// Mean loss only, for finite-difference checks and monitoring.
pub fn batch_loss(params: &ModelParams, batch: &[Sample<'_>]) -> Result<f64, NnError> {
    if batch.is_empty() {
        return Err(NnError::EmptyBatch);
    }
    let mut total = 0.0;
    for s in batch {
        let (pooled, _) = params.encode(s.inputs)?;
        total += cross_entropy(&params.head(s.task)?.logits(&pooled)?, s.gold)?;
    }
    Ok(total / batch.len() as f64)
}
