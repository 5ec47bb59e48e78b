//! Per-task affine softmax classifiers and the cross-entropy loss.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::NnError;
use crate::matrix::dot;

/// Affine map `H → K` followed by softmax.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Head {
    pub input_dim: usize,
    pub classes: usize,
    /// `K × H`, row-major.
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Head {
    pub fn zeros(input_dim: usize, classes: usize) -> Self {
        Self {
            input_dim,
            classes,
            weight: vec![0.0; classes * input_dim],
            bias: vec![0.0; classes],
        }
    }

    pub fn init<R: Rng>(input_dim: usize, classes: usize, rng: &mut R) -> Self {
        let mut h = Self::zeros(input_dim, classes);
        let bound = 1.0 / (input_dim as f64).sqrt();
        for w in &mut h.weight {
            *w = rng.random_range(-bound..bound);
        }
        h
    }

    pub fn logits(&self, s: &[f64]) -> Result<Vec<f64>, NnError> {
        if s.len() != self.input_dim {
            return Err(NnError::Dimension {
                what: "head input",
                expected: self.input_dim,
                found: s.len(),
            });
        }
        Ok(self
            .weight
            .chunks_exact(self.input_dim.max(1))
            .take(self.classes)
            .zip(&self.bias)
            .map(|(row, b)| if self.input_dim == 0 { *b } else { dot(row, s) + b })
            .collect())
    }

    pub(crate) fn slices(&self) -> [&[f64]; 2] {
        [&self.weight, &self.bias]
    }

    pub(crate) fn slices_mut(&mut self) -> [&mut [f64]; 2] {
        [&mut self.weight, &mut self.bias]
    }
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(logits);
    logits.iter().map(|z| (z - lse).exp()).collect()
}

/// Class probabilities for pooled vector `s`.
pub fn head_forward(s: &[f64], head: &Head) -> Result<Vec<f64>, NnError> {
    Ok(softmax(&head.logits(s)?))
}

/// `-ln softmax(logits)[gold]`, evaluated as `logsumexp(logits) - logits[gold]`.
pub fn cross_entropy(logits: &[f64], gold: usize) -> Result<f64, NnError> {
    if gold >= logits.len() {
        return Err(NnError::LabelOutOfRange {
            label: gold,
            classes: logits.len(),
        });
    }
    Ok((log_sum_exp(logits) - logits[gold]).max(0.0))
}

/// Gradient of [`cross_entropy`] with respect to the logits: `p - onehot(gold)`.
pub fn cross_entropy_grad(logits: &[f64], gold: usize) -> Result<Vec<f64>, NnError> {
    if gold >= logits.len() {
        return Err(NnError::LabelOutOfRange {
            label: gold,
            classes: logits.len(),
        });
    }
    let mut p = softmax(logits);
    p[gold] -= 1.0;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn zero_head_is_uniform() {
        let h = Head::zeros(4, 3);
        let p = head_forward(&[1.0, 2.0, 3.0, 4.0], &h).unwrap();
        for x in p {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn saturation() {
        let p = softmax(&[10.0, -10.0]);
        assert!(p[0] > 0.9999);
    }

    #[test]
    fn random_heads_normalize() {
        let mut rng = seed::rng(3, "head");
        for _ in 0..50 {
            let mut h = Head::init(5, 4, &mut rng);
            for b in &mut h.bias {
                *b = rng.random_range(-30.0..30.0);
            }
            let s: Vec<f64> = (0..5).map(|_| rng.random_range(-5.0..5.0)).collect();
            let p = head_forward(&s, &h).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|&x| x > 0.0));
        }
    }

    #[test]
    fn head_dimension_mismatch() {
        assert!(matches!(
            head_forward(&[1.0], &Head::zeros(2, 2)),
            Err(NnError::Dimension { .. })
        ));
    }

    #[test]
    fn uniform_loss_is_ln_k() {
        let l = cross_entropy(&[0.0, 0.0, 0.0], 1).unwrap();
        assert!((l - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn confident_loss_vanishes() {
        let l = cross_entropy(&[50.0, 0.0], 0).unwrap();
        assert!(l >= 0.0 && l < 1e-20);
    }

    #[test]
    fn gold_out_of_range() {
        assert!(matches!(
            cross_entropy(&[0.0, 0.0], 2),
            Err(NnError::LabelOutOfRange { .. })
        ));
    }

    #[test]
    fn logit_gradient_matches_finite_differences() {
        let z = [0.3, -1.2, 2.0];
        let g = cross_entropy_grad(&z, 2).unwrap();
        let p = softmax(&z);
        for k in 0..3 {
            let expected = p[k] - if k == 2 { 1.0 } else { 0.0 };
            assert!((g[k] - expected).abs() < 1e-15);
            let mut zp = z;
            let mut zm = z;
            zp[k] += 1e-6;
            zm[k] -= 1e-6;
            let fd = (cross_entropy(&zp, 2).unwrap() - cross_entropy(&zm, 2).unwrap()) / 2e-6;
            assert!((fd - g[k]).abs() < 1e-8);
        }
    }
}
