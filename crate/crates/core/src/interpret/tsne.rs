//! Exact t-SNE.
//!
//! Gaussian input affinities use a per-point precision found by bisection so
//! that each conditional distribution has the requested perplexity; the
//! conditionals are symmetrized and normalized. Output affinities use a
//! Student-t kernel with one degree of freedom. KL(P‖Q) is minimized by
//! gradient descent with momentum, per-parameter adaptive gains and early
//! exaggeration; the embedding is re-centered after every update.

use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::InterpretError;
use crate::matrix::Matrix;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub seed: u64,
    pub learning_rate: f64,
    pub exaggeration: f64,
    /// Iterations run with exaggerated affinities and initial momentum.
    pub exaggeration_iters: usize,
    pub initial_momentum: f64,
    pub final_momentum: f64,
    /// Standard deviation of the Gaussian initialization.
    pub init_std: f64,
    /// Record the KL divergence every this many iterations (0 = never).
    pub kl_every: usize,
}

impl Default for TsneConfig {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            iterations: 1000,
            seed: 0,
            learning_rate: 200.0,
            exaggeration: 12.0,
            exaggeration_iters: 250,
            initial_momentum: 0.5,
            final_momentum: 0.8,
            init_std: 1e-4,
            kl_every: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TsneOutput {
    /// `m × 2`
    pub coords: Matrix,
    /// `(iteration, KL(P‖Q))` after the given number of completed iterations,
    /// always measured against the unexaggerated P.
    pub kl_trace: Vec<(usize, f64)>,
}

impl TsneOutput {
    pub fn kl_at(&self, iteration: usize) -> Option<f64> {
        self.kl_trace.iter().find(|(i, _)| *i == iteration).map(|x| x.1)
    }
}

const BISECTION_TOL: f64 = 1e-5;
const BISECTION_STEPS: usize = 200;
const MIN_PROB: f64 = 1e-12;

fn squared_distances(x: &Matrix) -> Vec<f64> {
    let m = x.rows();
    let mut d = vec![0.0; m * m];
    for i in 0..m {
        for j in i + 1..m {
            let s: f64 = x
                .row(i)
                .iter()
                .zip(x.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            d[i * m + j] = s;
            d[j * m + i] = s;
        }
    }
    d
}

/// Conditional affinities `p_{j|i}` (row `i`) at the given perplexity.
pub fn conditional_affinities(dist2: &[f64], m: usize, perplexity: f64) -> Vec<f64> {
    let target = perplexity.ln();
    let mut p = vec![0.0; m * m];
    let mut row = vec![0.0; m];
    for i in 0..m {
        let d = &dist2[i * m..(i + 1) * m];
        let mut beta = 1.0;
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        // Shift by the nearest-neighbor distance for numerical range.
        let dmin = (0..m)
            .filter(|&j| j != i)
            .map(|j| d[j])
            .fold(f64::INFINITY, f64::min);
        for _ in 0..BISECTION_STEPS {
            let mut sum = 0.0;
            let mut weighted = 0.0;
            for j in 0..m {
                row[j] = if j == i { 0.0 } else { (-(d[j] - dmin) * beta).exp() };
                sum += row[j];
                weighted += (d[j] - dmin) * row[j];
            }
            // Entropy of the normalized row, in nats.
            let entropy = sum.ln() + beta * weighted / sum;
            let diff = entropy - target;
            if diff.abs() < BISECTION_TOL {
                break;
            }
            if diff > 0.0 {
                lo = beta;
                beta = if hi.is_finite() { (beta + hi) / 2.0 } else { beta * 2.0 };
            } else {
                hi = beta;
                beta = if lo.is_finite() { (beta + lo) / 2.0 } else { beta / 2.0 };
            }
        }
        let sum: f64 = row.iter().sum();
        for j in 0..m {
            p[i * m + j] = row[j] / sum;
        }
    }
    p
}

/// Symmetrized joint affinities `(p_{j|i} + p_{i|j}) / 2m`, floored.
pub fn joint_affinities(x: &Matrix, perplexity: f64) -> Vec<f64> {
    let m = x.rows();
    let cond = conditional_affinities(&squared_distances(x), m, perplexity);
    let mut p = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            if i != j {
                p[i * m + j] = ((cond[i * m + j] + cond[j * m + i]) / (2.0 * m as f64)).max(MIN_PROB);
            }
        }
    }
    p
}

/// Student-t numerators `1 / (1 + |y_i - y_j|²)` and their sum.
fn student_t(y: &Matrix) -> (Vec<f64>, f64) {
    let m = y.rows();
    let mut num = vec![0.0; m * m];
    let mut sum = 0.0;
    for i in 0..m {
        for j in i + 1..m {
            let dx = y.get(i, 0) - y.get(j, 0);
            let dy = y.get(i, 1) - y.get(j, 1);
            let v = 1.0 / (1.0 + dx * dx + dy * dy);
            num[i * m + j] = v;
            num[j * m + i] = v;
            sum += 2.0 * v;
        }
    }
    (num, sum)
}

/// KL(P‖Q) for joint affinities `p` and embedding `y`.
pub fn kl_divergence(p: &[f64], y: &Matrix) -> f64 {
    let m = y.rows();
    let (num, sum) = student_t(y);
    let mut kl = 0.0;
    for i in 0..m {
        for j in 0..m {
            if i != j {
                let pij = p[i * m + j];
                let qij = (num[i * m + j] / sum).max(MIN_PROB);
                kl += pij * (pij / qij).ln();
            }
        }
    }
    kl
}

pub fn tsne_project(x: &Matrix, cfg: &TsneConfig) -> Result<TsneOutput, InterpretError> {
    let m = x.rows();
    if m < 4 {
        return Err(InterpretError::TooFewPoints(m));
    }
    if !(cfg.perplexity > 0.0 && cfg.perplexity < m as f64) {
        return Err(InterpretError::Perplexity {
            perplexity: cfg.perplexity,
            points: m,
        });
    }
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(InterpretError::NonFinite);
    }
    if (1..m).all(|i| x.row(i) == x.row(0)) {
        return Err(InterpretError::Degenerate);
    }

    let p = joint_affinities(x, cfg.perplexity);
    let mut p_opt: Vec<f64> = p.iter().map(|v| v * cfg.exaggeration).collect();

    let mut rng = seed::Rng::seed_from_u64(seed::derive(cfg.seed, "tsne-init"));
    let normal = Normal::new(0.0, cfg.init_std).map_err(|_| InterpretError::NonFinite)?;
    let mut y = Matrix::from_vec(m, 2, (0..2 * m).map(|_| normal.sample(&mut rng)).collect());
    let mut update = vec![0.0; 2 * m];
    let mut gains = vec![1.0; 2 * m];
    let mut grad = vec![0.0; 2 * m];
    let mut kl_trace = Vec::new();

    for it in 0..cfg.iterations {
        if it == cfg.exaggeration_iters {
            p_opt.copy_from_slice(&p);
        }
        let (num, sum) = student_t(&y);
        grad.fill(0.0);
        for i in 0..m {
            let (yi0, yi1) = (y.get(i, 0), y.get(i, 1));
            let (mut g0, mut g1) = (0.0, 0.0);
            for j in 0..m {
                if i == j {
                    continue;
                }
                let n = num[i * m + j];
                let q = (n / sum).max(MIN_PROB);
                let w = (p_opt[i * m + j] - q) * n;
                g0 += w * (yi0 - y.get(j, 0));
                g1 += w * (yi1 - y.get(j, 1));
            }
            grad[2 * i] = 4.0 * g0;
            grad[2 * i + 1] = 4.0 * g1;
        }
        let momentum = if it < cfg.exaggeration_iters {
            cfg.initial_momentum
        } else {
            cfg.final_momentum
        };
        let ys = y.as_mut_slice();
        for k in 0..2 * m {
            let gain: f64 = if (grad[k] > 0.0) != (update[k] > 0.0) {
                gains[k] + 0.2
            } else {
                gains[k] * 0.8
            };
            gains[k] = gain.max(0.01);
            update[k] = momentum * update[k] - cfg.learning_rate * gains[k] * grad[k];
            ys[k] += update[k];
        }
        for c in 0..2 {
            let mean = (0..m).map(|i| ys[2 * i + c]).sum::<f64>() / m as f64;
            for i in 0..m {
                ys[2 * i + c] -= mean;
            }
        }
        let done = it + 1;
        if cfg.kl_every > 0 && (done % cfg.kl_every == 0 || done == cfg.iterations) {
            kl_trace.push((done, kl_divergence(&p, &y)));
        }
    }
    if y.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(InterpretError::NonFinite);
    }
    Ok(TsneOutput { coords: y, kl_trace })
}
