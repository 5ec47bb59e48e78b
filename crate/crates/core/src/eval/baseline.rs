//! Character n-gram logistic regression baseline.
//!
//! Features are counts of character 1- to 4-grams of the lowercased cleaned
//! text, hashed into 2^18 buckets and divided by the total n-gram count.
//! A multinomial logistic regression is fitted with the same Adam optimizer
//! as the neural model.

use rand::SeedableRng;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::metrics::EvalReport;
use super::EvalError;
use crate::nn::head::{cross_entropy_grad, softmax};
use crate::nn::{argmax, AdamConfig, AdamState};
use crate::preprocess::CleanPost;
use crate::seed;
use crate::training::oversample;

pub const HASH_BUCKETS: usize = 1 << 18;
pub const MAX_NGRAM: usize = 4;
const FEATURE_SEED: u64 = 0x000B_A5E1_1AE5;

/// Sparse feature vector, sorted by bucket, no repeated buckets.
pub type SparseFeatures = Vec<(u32, f64)>;

pub fn char_ngram_features(tokens: &[String]) -> SparseFeatures {
    let text: Vec<char> = tokens.join(" ").to_lowercase().chars().collect();
    let mut hits: Vec<u32> = Vec::new();
    let mut buf = String::new();
    for n in 1..=MAX_NGRAM {
        for gram in text.windows(n) {
            buf.clear();
            buf.extend(gram.iter());
            let h = seed::hash_bytes(buf.as_bytes(), FEATURE_SEED ^ n as u64);
            hits.push((h % HASH_BUCKETS as u64) as u32);
        }
    }
    let total = hits.len() as f64;
    hits.sort_unstable();
    let mut out: SparseFeatures = Vec::new();
    for b in hits {
        match out.last_mut() {
            Some((last, c)) if *last == b => *c += 1.0,
            _ => out.push((b, 1.0)),
        }
    }
    for (_, c) in &mut out {
        *c /= total;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            epochs: 40,
            batch_size: 32,
            lr: 0.01,
            weight_decay: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CharNgramLogReg {
    classes: usize,
    /// `K × HASH_BUCKETS`, row-major.
    weight: Vec<f64>,
    bias: Vec<f64>,
}

impl CharNgramLogReg {
    pub fn logits(&self, x: &SparseFeatures) -> Vec<f64> {
        (0..self.classes)
            .map(|k| {
                let row = &self.weight[k * HASH_BUCKETS..(k + 1) * HASH_BUCKETS];
                self.bias[k] + x.iter().map(|&(b, v)| row[b as usize] * v).sum::<f64>()
            })
            .collect()
    }

    pub fn predict_proba(&self, post: &CleanPost) -> Vec<f64> {
        softmax(&self.logits(&char_ngram_features(&post.tokens)))
    }

    pub fn predict(&self, post: &CleanPost) -> usize {
        argmax(&self.logits(&char_ngram_features(&post.tokens)))
    }

    /// Fits on `train` after oversampling it to balance.
    pub fn fit(train: &[CleanPost], classes: usize, cfg: &BaselineConfig) -> Result<Self, EvalError> {
        if train.is_empty() {
            return Err(EvalError::Empty);
        }
        if cfg.batch_size == 0 {
            return Err(EvalError::Baseline("batch size must be positive".into()));
        }
        let balanced = oversample(train, classes, seed::derive(cfg.seed, "baseline-oversample"))
            .map_err(|e| EvalError::Baseline(e.to_string()))?;
        let data: Vec<(SparseFeatures, usize)> = balanced
            .iter()
            .map(|p| (char_ngram_features(&p.tokens), p.label_id))
            .collect();
        let mut model = Self {
            classes,
            weight: vec![0.0; classes * HASH_BUCKETS],
            bias: vec![0.0; classes],
        };
        let adam = AdamConfig {
            lr: cfg.lr,
            weight_decay: cfg.weight_decay,
            ..AdamConfig::default()
        };
        let mut state = AdamState::new(model.weight.len() + model.bias.len());
        let mut gw = vec![0.0; model.weight.len()];
        let mut gb = vec![0.0; classes];
        let mut order: Vec<usize> = (0..data.len()).collect();
        for epoch in 0..cfg.epochs {
            let mut rng = seed::Rng::seed_from_u64(seed::derive_indexed(cfg.seed, "baseline-epoch", epoch as u64));
            order.shuffle(&mut rng);
            for batch in order.chunks(cfg.batch_size) {
                gw.fill(0.0);
                gb.fill(0.0);
                let scale = 1.0 / batch.len() as f64;
                for &i in batch {
                    let (x, gold) = &data[i];
                    let dz = cross_entropy_grad(&model.logits(x), *gold)
                        .map_err(|e| EvalError::Baseline(e.to_string()))?;
                    for (k, &d) in dz.iter().enumerate() {
                        gb[k] += d * scale;
                        let row = &mut gw[k * HASH_BUCKETS..(k + 1) * HASH_BUCKETS];
                        for &(b, v) in x {
                            row[b as usize] += d * v * scale;
                        }
                    }
                }
                state
                    .update_blocks(&mut [&mut model.weight, &mut model.bias], &[&gw, &gb], &adam)
                    .map_err(|e| EvalError::Baseline(e.to_string()))?;
            }
        }
        Ok(model)
    }
}

/// Fits the baseline on `train` and evaluates it on `test`.
pub fn baseline_char_ngram_lr(
    train: &[CleanPost],
    test: &[CleanPost],
    labels: &[String],
    cfg: &BaselineConfig,
) -> Result<EvalReport, EvalError> {
    if test.is_empty() {
        return Err(EvalError::Empty);
    }
    let model = CharNgramLogReg::fit(train, labels.len(), cfg)?;
    let gold: Vec<usize> = test.iter().map(|p| p.label_id).collect();
    let pred: Vec<usize> = test.iter().map(|p| model.predict(p)).collect();
    EvalReport::new(&gold, &pred, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split(' ').map(str::to_string).collect()
    }

    #[test]
    fn features_are_normalized_and_case_folded() {
        let f = char_ngram_features(&toks("Ab c"));
        let total: f64 = f.iter().map(|x| x.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
        // "ab c": 4 + 3 + 2 + 1 grams
        assert!(f.iter().all(|x| (x.1 * 10.0).fract().abs() < 1e-9));
        assert_eq!(f, char_ngram_features(&toks("aB c")));
        assert!(f.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn empty_inputs() {
        let labels = vec!["a".to_string(), "b".to_string()];
        assert!(matches!(
            baseline_char_ngram_lr(&[], &[], &labels, &BaselineConfig::default()),
            Err(EvalError::Empty)
        ));
    }
}
