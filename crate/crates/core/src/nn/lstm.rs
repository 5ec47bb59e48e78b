//! LSTM cells and the stacked bidirectional encoder, with exact
//! backpropagation through time.
//!
//! Gate rows are stacked in the order input, forget, cell candidate, output:
//! row block `[k*H, (k+1)*H)` of every weight matrix belongs to gate `k`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::NnError;
use crate::matrix::{axpy, dot, sigmoid, Matrix};

/// Weights of one LSTM direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub input_dim: usize,
    pub hidden: usize,
    /// `4H × input_dim`, row-major.
    pub w_input: Vec<f64>,
    /// `4H × H`, row-major.
    pub w_hidden: Vec<f64>,
    /// `4H`
    pub bias: Vec<f64>,
}

impl LstmParams {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        Self {
            input_dim,
            hidden,
            w_input: vec![0.0; 4 * hidden * input_dim],
            w_hidden: vec![0.0; 4 * hidden * hidden],
            bias: vec![0.0; 4 * hidden],
        }
    }

    /// Uniform(-1/√H, 1/√H) weights, forget-gate bias 1, other biases 0.
    pub fn init<R: Rng>(input_dim: usize, hidden: usize, rng: &mut R) -> Self {
        let mut p = Self::zeros(input_dim, hidden);
        let bound = 1.0 / (hidden as f64).sqrt();
        for w in p.w_input.iter_mut().chain(p.w_hidden.iter_mut()) {
            *w = rng.random_range(-bound..bound);
        }
        p.bias[hidden..2 * hidden].fill(1.0);
        p
    }

    pub(crate) fn slices(&self) -> [&[f64]; 3] {
        [&self.w_input, &self.w_hidden, &self.bias]
    }

    pub(crate) fn slices_mut(&mut self) -> [&mut [f64]; 3] {
        [&mut self.w_input, &mut self.w_hidden, &mut self.bias]
    }

    fn check(&self, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> Result<(), NnError> {
        if x.len() != self.input_dim {
            return Err(NnError::Dimension {
                what: "lstm input",
                expected: self.input_dim,
                found: x.len(),
            });
        }
        for (what, v) in [("previous hidden state", h_prev), ("previous cell state", c_prev)] {
            if v.len() != self.hidden {
                return Err(NnError::Dimension {
                    what,
                    expected: self.hidden,
                    found: v.len(),
                });
            }
        }
        Ok(())
    }
}

/// Gate activations and states of one time step, kept for the backward pass.
#[derive(Debug, Clone)]
pub(crate) struct StepCache {
    /// `[i | f | g | o]`, each of length H, post-activation.
    gates: Vec<f64>,
    c: Vec<f64>,
    tanh_c: Vec<f64>,
    h: Vec<f64>,
}

fn step(p: &LstmParams, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> StepCache {
    let hd = p.hidden;
    let mut gates = p.bias.clone();
    for (r, z) in gates.iter_mut().enumerate() {
        *z += dot(&p.w_input[r * p.input_dim..(r + 1) * p.input_dim], x)
            + dot(&p.w_hidden[r * hd..(r + 1) * hd], h_prev);
    }
    for (r, z) in gates.iter_mut().enumerate() {
        *z = if (2 * hd..3 * hd).contains(&r) {
            z.tanh()
        } else {
            sigmoid(*z)
        };
    }
    let mut c = vec![0.0; hd];
    let mut tanh_c = vec![0.0; hd];
    let mut h = vec![0.0; hd];
    for j in 0..hd {
        let (i, f, g, o) = (gates[j], gates[hd + j], gates[2 * hd + j], gates[3 * hd + j]);
        c[j] = f * c_prev[j] + i * g;
        tanh_c[j] = c[j].tanh();
        h[j] = o * tanh_c[j];
    }
    StepCache { gates, c, tanh_c, h }
}

/// One LSTM step. Returns `(h, c)`.
pub fn lstm_cell(
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    p: &LstmParams,
) -> Result<(Vec<f64>, Vec<f64>), NnError> {
    p.check(x, h_prev, c_prev)?;
    let s = step(p, x, h_prev, c_prev);
    Ok((s.h, s.c))
}

/// Runs one direction over `inputs` in the given visiting order, starting
/// from zero states. Caches are returned in visiting order.
pub(crate) fn run_direction(p: &LstmParams, inputs: &Matrix, reverse: bool) -> Vec<StepCache> {
    let n = inputs.rows();
    let zeros = vec![0.0; p.hidden];
    let mut caches: Vec<StepCache> = Vec::with_capacity(n);
    for k in 0..n {
        let t = if reverse { n - 1 - k } else { k };
        let (h_prev, c_prev) = match caches.last() {
            Some(prev) => (&prev.h[..], &prev.c[..]),
            None => (&zeros[..], &zeros[..]),
        };
        let s = step(p, inputs.row(t), h_prev, c_prev);
        caches.push(s);
    }
    caches
}

/// Backpropagates through one direction.
///
/// `dh_out` holds the loss gradient with respect to each token's output
/// state (indexed by token position). Accumulates into `grad`, and, when
/// `dx` is given, writes input gradients into it (indexed by token).
pub(crate) fn backprop_direction(
    p: &LstmParams,
    inputs: &Matrix,
    caches: &[StepCache],
    reverse: bool,
    dh_out: &Matrix,
    grad: &mut LstmParams,
    mut dx: Option<&mut Matrix>,
) {
    let hd = p.hidden;
    let din = p.input_dim;
    let n = inputs.rows();
    let zeros = vec![0.0; hd];
    let mut dh_next = vec![0.0; hd];
    let mut dc_next = vec![0.0; hd];
    let mut dz = vec![0.0; 4 * hd];
    for k in (0..n).rev() {
        let t = if reverse { n - 1 - k } else { k };
        let cache = &caches[k];
        let (h_prev, c_prev) = if k == 0 {
            (&zeros[..], &zeros[..])
        } else {
            (&caches[k - 1].h[..], &caches[k - 1].c[..])
        };
        let dh_t = dh_out.row(t);
        for j in 0..hd {
            let dh = dh_t[j] + dh_next[j];
            let (i, f, g, o) = (
                cache.gates[j],
                cache.gates[hd + j],
                cache.gates[2 * hd + j],
                cache.gates[3 * hd + j],
            );
            let tc = cache.tanh_c[j];
            let dc = dc_next[j] + dh * o * (1.0 - tc * tc);
            dz[j] = dc * g * i * (1.0 - i);
            dz[hd + j] = dc * c_prev[j] * f * (1.0 - f);
            dz[2 * hd + j] = dc * i * (1.0 - g * g);
            dz[3 * hd + j] = dh * tc * o * (1.0 - o);
            dc_next[j] = dc * f;
        }
        let x = inputs.row(t);
        dh_next.fill(0.0);
        let mut dx_row = dx.as_deref_mut().map(|m| m.row_mut(t));
        for (r, &dzr) in dz.iter().enumerate() {
            if dzr == 0.0 {
                continue;
            }
            grad.bias[r] += dzr;
            axpy(dzr, x, &mut grad.w_input[r * din..(r + 1) * din]);
            axpy(dzr, h_prev, &mut grad.w_hidden[r * hd..(r + 1) * hd]);
            axpy(dzr, &p.w_hidden[r * hd..(r + 1) * hd], &mut dh_next);
            if let Some(row) = dx_row.as_deref_mut() {
                axpy(dzr, &p.w_input[r * din..(r + 1) * din], row);
            }
        }
    }
}

/// A forward/backward pair over the same input sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiLstmLayer {
    pub forward: LstmParams,
    pub backward: LstmParams,
}

impl BiLstmLayer {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        Self {
            forward: LstmParams::zeros(input_dim, hidden),
            backward: LstmParams::zeros(input_dim, hidden),
        }
    }

    pub fn init<R: Rng>(input_dim: usize, hidden: usize, rng: &mut R) -> Self {
        Self {
            forward: LstmParams::init(input_dim, hidden, rng),
            backward: LstmParams::init(input_dim, hidden, rng),
        }
    }
}

/// Forward and backward top-layer states, one row per token.
#[derive(Debug, Clone, PartialEq)]
pub struct BiStates {
    pub forward: Matrix,
    pub backward: Matrix,
}

pub(crate) struct LayerCache {
    pub(crate) input: Matrix,
    pub(crate) forward: Vec<StepCache>,
    pub(crate) backward: Vec<StepCache>,
}

impl LayerCache {
    pub(crate) fn states(&self) -> BiStates {
        let n = self.input.rows();
        let hd = self.forward.first().map_or(0, |c| c.h.len());
        let mut fwd = Matrix::zeros(n, hd);
        let mut bwd = Matrix::zeros(n, hd);
        for t in 0..n {
            fwd.row_mut(t).copy_from_slice(&self.forward[t].h);
            bwd.row_mut(t).copy_from_slice(&self.backward[n - 1 - t].h);
        }
        BiStates {
            forward: fwd,
            backward: bwd,
        }
    }

    /// Per-token `[forward ‖ backward]` concatenation, the next layer's input.
    fn concat(&self) -> Matrix {
        let s = self.states();
        let hd = s.forward.cols();
        let mut m = Matrix::zeros(s.forward.rows(), 2 * hd);
        for t in 0..m.rows() {
            let row = m.row_mut(t);
            row[..hd].copy_from_slice(s.forward.row(t));
            row[hd..].copy_from_slice(s.backward.row(t));
        }
        m
    }
}

pub(crate) fn encode_cached(x: &Matrix, layers: &[BiLstmLayer]) -> Result<Vec<LayerCache>, NnError> {
    if x.rows() == 0 {
        return Err(NnError::EmptySequence);
    }
    let mut caches: Vec<LayerCache> = Vec::with_capacity(layers.len());
    for layer in layers {
        let input = match caches.last() {
            Some(prev) => prev.concat(),
            None => x.clone(),
        };
        if input.cols() != layer.forward.input_dim {
            return Err(NnError::Dimension {
                what: "encoder layer input",
                expected: layer.forward.input_dim,
                found: input.cols(),
            });
        }
        let forward = run_direction(&layer.forward, &input, false);
        let backward = run_direction(&layer.backward, &input, true);
        caches.push(LayerCache {
            input,
            forward,
            backward,
        });
    }
    Ok(caches)
}

/// Encodes an `n × d` sequence with the stacked bi-LSTM and returns the
/// top layer's forward and backward states.
pub fn bilstm_encode(x: &Matrix, layers: &[BiLstmLayer]) -> Result<BiStates, NnError> {
    let caches = encode_cached(x, layers)?;
    caches.last().map(LayerCache::states).ok_or(NnError::EmptyTrunk)
}

/// Backpropagates top-layer state gradients through all layers.
pub(crate) fn backprop_encoder(
    layers: &[BiLstmLayer],
    caches: &[LayerCache],
    top_grad: BiStates,
    grads: &mut [BiLstmLayer],
) {
    let mut d_fwd = top_grad.forward;
    let mut d_bwd = top_grad.backward;
    for (l, (layer, cache)) in layers.iter().zip(caches).enumerate().rev() {
        let need_dx = l > 0;
        let mut dx = need_dx.then(|| Matrix::zeros(cache.input.rows(), cache.input.cols()));
        let g = &mut grads[l];
        backprop_direction(
            &layer.forward,
            &cache.input,
            &cache.forward,
            false,
            &d_fwd,
            &mut g.forward,
            dx.as_mut(),
        );
        backprop_direction(
            &layer.backward,
            &cache.input,
            &cache.backward,
            true,
            &d_bwd,
            &mut g.backward,
            dx.as_mut(),
        );
        if let Some(dx) = dx {
            let hd = dx.cols() / 2;
            let n = dx.rows();
            let mut f = Matrix::zeros(n, hd);
            let mut b = Matrix::zeros(n, hd);
            for t in 0..n {
                f.row_mut(t).copy_from_slice(&dx.row(t)[..hd]);
                b.row_mut(t).copy_from_slice(&dx.row(t)[hd..]);
            }
            d_fwd = f;
            d_bwd = b;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    /// Independent scalar LSTM step written directly from the recurrence.
    fn oracle_cell(p: &LstmParams, x: &[f64], h: &[f64], c: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let hd = p.hidden;
        let pre = |gate: usize, j: usize| -> f64 {
            let r = gate * hd + j;
            let mut z = p.bias[r];
            for k in 0..p.input_dim {
                z += p.w_input[r * p.input_dim + k] * x[k];
            }
            for k in 0..hd {
                z += p.w_hidden[r * hd + k] * h[k];
            }
            z
        };
        let logistic = |z: f64| 1.0 / (1.0 + (-z).exp());
        let mut h_out = vec![0.0; hd];
        let mut c_out = vec![0.0; hd];
        for j in 0..hd {
            let i = logistic(pre(0, j));
            let f = logistic(pre(1, j));
            let g = pre(2, j).tanh();
            let o = logistic(pre(3, j));
            c_out[j] = f * c[j] + i * g;
            h_out[j] = o * c_out[j].tanh();
        }
        (h_out, c_out)
    }

    fn random_params(d: usize, h: usize, s: u64) -> LstmParams {
        let mut rng = seed::rng(s, "test");
        let mut p = LstmParams::init(d, h, &mut rng);
        for b in &mut p.bias {
            *b = rng.random_range(-0.5..0.5);
        }
        p
    }

    #[test]
    fn zero_params_zero_state() {
        let p = LstmParams::zeros(3, 2);
        let (h, c) = lstm_cell(&[1.0, 2.0, 3.0], &[0.0; 2], &[0.0; 2], &p).unwrap();
        assert_eq!(h, vec![0.0, 0.0]);
        assert_eq!(c, vec![0.0, 0.0]);
    }

    #[test]
    fn zero_params_carry_half_the_cell() {
        let p = LstmParams::zeros(1, 2);
        let v = [0.8, -2.0];
        let (h, c) = lstm_cell(&[0.3], &[0.1, 0.2], &v, &p).unwrap();
        for j in 0..2 {
            assert_eq!(c[j], 0.5 * v[j]);
            assert!((h[j] - 0.5 * (0.5 * v[j]).tanh()).abs() < 1e-15);
        }
    }

    #[test]
    fn cell_matches_scalar_oracle() {
        for s in 0..20 {
            let p = random_params(4, 3, s);
            let mut rng = seed::rng(s, "inputs");
            let mut v = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-2.0..2.0)).collect() };
            let (x, h, c) = (v(4), v(3), v(3));
            let (h1, c1) = lstm_cell(&x, &h, &c, &p).unwrap();
            let (h2, c2) = oracle_cell(&p, &x, &h, &c);
            for j in 0..3 {
                assert!((h1[j] - h2[j]).abs() < 1e-12);
                assert!((c1[j] - c2[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cell_dimension_mismatch() {
        let p = LstmParams::zeros(3, 2);
        assert!(matches!(
            lstm_cell(&[1.0], &[0.0; 2], &[0.0; 2], &p),
            Err(NnError::Dimension { .. })
        ));
    }

    fn two_layer(d: usize, h: usize, s: u64) -> Vec<BiLstmLayer> {
        let mut rng = seed::rng(s, "layers");
        vec![BiLstmLayer::init(d, h, &mut rng), BiLstmLayer::init(2 * h, h, &mut rng)]
    }

    #[test]
    fn encoder_shapes_and_empty_input() {
        let layers = two_layer(2, 3, 1);
        let x = Matrix::from_rows(2, &[[0.1, 0.2], [0.3, -0.1], [0.0, 1.0], [0.5, 0.5]]);
        let s = bilstm_encode(&x, &layers).unwrap();
        assert_eq!((s.forward.rows(), s.forward.cols()), (4, 3));
        assert_eq!((s.backward.rows(), s.backward.cols()), (4, 3));
        assert!(matches!(
            bilstm_encode(&Matrix::zeros(0, 2), &layers),
            Err(NnError::EmptySequence)
        ));
    }

    #[test]
    fn backward_direction_is_forward_over_reversed_input() {
        let mut rng = seed::rng(5, "sym");
        let layer = BiLstmLayer::init(2, 3, &mut rng);
        let swapped = BiLstmLayer {
            forward: layer.backward.clone(),
            backward: layer.forward.clone(),
        };
        let x = Matrix::from_rows(2, &[[0.1, 0.2], [0.3, -0.1], [0.0, 1.0]]);
        let rev = Matrix::from_rows(2, &[[0.0, 1.0], [0.3, -0.1], [0.1, 0.2]]);
        let a = bilstm_encode(&x, std::slice::from_ref(&layer)).unwrap();
        let b = bilstm_encode(&rev, std::slice::from_ref(&swapped)).unwrap();
        for t in 0..3 {
            assert_eq!(a.backward.row(t), b.forward.row(2 - t));
            assert_eq!(a.forward.row(t), b.backward.row(2 - t));
        }
    }

    #[test]
    fn tiny_stack_matches_scalar_oracle() {
        let layers = two_layer(2, 2, 9);
        let x = Matrix::from_rows(2, &[[0.5, -0.3], [0.2, 0.9], [-0.7, 0.1]]);
        let run = |p: &LstmParams, xs: &[Vec<f64>]| -> Vec<Vec<f64>> {
            let mut h = vec![0.0; 2];
            let mut c = vec![0.0; 2];
            xs.iter()
                .map(|x| {
                    let (h2, c2) = oracle_cell(p, x, &h, &c);
                    h = h2;
                    c = c2;
                    h.clone()
                })
                .collect()
        };
        let rows: Vec<Vec<f64>> = (0..3).map(|t| x.row(t).to_vec()).collect();
        let mut input = rows;
        let mut last = (vec![], vec![]);
        for layer in &layers {
            let f = run(&layer.forward, &input);
            let rev: Vec<Vec<f64>> = input.iter().rev().cloned().collect();
            let mut b = run(&layer.backward, &rev);
            b.reverse();
            input = f.iter().zip(&b).map(|(f, b)| [f.clone(), b.clone()].concat()).collect();
            last = (f, b);
        }
        let s = bilstm_encode(&x, &layers).unwrap();
        for t in 0..3 {
            for j in 0..2 {
                assert!((s.forward.get(t, j) - last.0[t][j]).abs() < 1e-12);
                assert!((s.backward.get(t, j) - last.1[t][j]).abs() < 1e-12);
            }
        }
    }
}
