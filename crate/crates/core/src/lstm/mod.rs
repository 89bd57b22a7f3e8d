//! Single-layer LSTM language model with full gate instrumentation.
//!
//! The cell reads the concatenated input x_t = [word embedding, c_{t-1},
//! h_{t-1}, 1] and computes
//!
//! ```text
//! f_t = sigmoid(Wf x_t)                    forget vector
//! u_t = sigmoid(Wu x_t) * tanh(Wc x_t)     context-update vector
//! c_t = f_t * c_{t-1} + u_t                context vector
//! h_t = tanh(c_t) * sigmoid(Wo x_t)        output vector
//! ```
//!
//! (elementwise products throughout). Note the output gate reads x_t, which
//! contains c_{t-1} rather than c_t; `OUTPUT_GATE_INPUT` documents this as
//! the only supported wiring. The softmax head predicts the next token from
//! h_t. All arithmetic is double precision; recorded traces are stored in
//! single precision.

pub mod backprop;
pub mod checkpoint;

pub use backprop::{loss_and_grads, DropoutConfig, Gradients};

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// The only supported wiring of the output gate: it sees the step input
/// x_t = [w_t, c_{t-1}, h_{t-1}, 1], not the freshly updated c_t.
pub const OUTPUT_GATE_INPUT: &str = "x_t";

/// Full parameter set of the model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub state_dim: usize,
    /// Word embeddings, one row per vocabulary id.
    pub embed: Array2<f64>,
    /// Forget-gate affine map, `[d, e + 2d + 1]`; the last column is the
    /// bias, applied through the constant-1 component of x_t.
    pub w_forget: Array2<f64>,
    /// Sigmoid half of the context update.
    pub w_update_gate: Array2<f64>,
    /// Tanh half of the context update.
    pub w_update_cand: Array2<f64>,
    /// Output gate.
    pub w_output_gate: Array2<f64>,
    /// Softmax head weight `[v, d]` and bias `[v]`.
    pub w_head: Array2<f64>,
    pub b_head: Array1<f64>,
}

/// Recurrent state carried between steps. The initial state is all zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct CellState {
    pub context: Array1<f64>,
    pub output: Array1<f64>,
}

impl CellState {
    pub fn zeros(state_dim: usize) -> Self {
        CellState {
            context: Array1::zeros(state_dim),
            output: Array1::zeros(state_dim),
        }
    }
}

/// The four internal vectors of one step, stored in single precision.
#[derive(Debug, Clone, PartialEq)]
pub struct GateRecord {
    pub forget: Vec<f32>,
    pub update: Vec<f32>,
    pub context: Vec<f32>,
    pub output: Vec<f32>,
}

/// Per-sentence record of every step's internal vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub sentence_id: usize,
    pub token_ids: Vec<u32>,
    pub records: Vec<GateRecord>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Largest violation of c_t = f_t * c_{t-1} + u_t across the trace,
    /// recomputed from the stored single-precision vectors.
    pub fn recurrence_residual(&self) -> f32 {
        let mut worst = 0.0f32;
        let d = self.records.first().map_or(0, |r| r.context.len());
        let mut prev = vec![0.0f32; d];
        for rec in &self.records {
            for i in 0..d {
                let predicted = rec.forget[i] * prev[i] + rec.update[i];
                worst = worst.max((rec.context[i] - predicted).abs());
            }
            prev.copy_from_slice(&rec.context);
        }
        worst
    }
}

impl ModelParams {
    /// Width of the concatenated step input.
    pub fn input_width(&self) -> usize {
        self.embed_dim + 2 * self.state_dim + 1
    }

    /// Deterministic initialization: every array uniform in
    /// `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`, then the forget-gate bias column
    /// set to +1 so early training favors retention.
    pub fn init(vocab_size: usize, embed_dim: usize, state_dim: usize, seed: u64) -> ModelParams {
        assert!(vocab_size >= 1 && embed_dim >= 1 && state_dim >= 1);
        let m = embed_dim + 2 * state_dim + 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut uniform = |rows: usize, cols: usize, fan_in: usize| -> Array2<f64> {
            let bound = 1.0 / (fan_in as f64).sqrt();
            Array2::from_shape_fn((rows, cols), |_| rng.random_range(-bound..bound))
        };
        let embed = uniform(vocab_size, embed_dim, embed_dim);
        let mut w_forget = uniform(state_dim, m, m);
        let w_update_gate = uniform(state_dim, m, m);
        let w_update_cand = uniform(state_dim, m, m);
        let w_output_gate = uniform(state_dim, m, m);
        let w_head = uniform(vocab_size, state_dim, state_dim);
        let b_head = uniform(vocab_size, 1, state_dim).column(0).to_owned();

        w_forget.column_mut(m - 1).fill(1.0);

        ModelParams {
            vocab_size,
            embed_dim,
            state_dim,
            embed,
            w_forget,
            w_update_gate,
            w_update_cand,
            w_output_gate,
            w_head,
            b_head,
        }
    }

    /// All parameter arrays as flat slices, in checkpoint order.
    pub fn flat(&self) -> Vec<&[f64]> {
        vec![
            self.embed.as_slice().expect("standard layout"),
            self.w_forget.as_slice().expect("standard layout"),
            self.w_update_gate.as_slice().expect("standard layout"),
            self.w_update_cand.as_slice().expect("standard layout"),
            self.w_output_gate.as_slice().expect("standard layout"),
            self.w_head.as_slice().expect("standard layout"),
            self.b_head.as_slice().expect("standard layout"),
        ]
    }

    pub fn flat_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            self.embed.as_slice_mut().expect("standard layout"),
            self.w_forget.as_slice_mut().expect("standard layout"),
            self.w_update_gate.as_slice_mut().expect("standard layout"),
            self.w_update_cand.as_slice_mut().expect("standard layout"),
            self.w_output_gate.as_slice_mut().expect("standard layout"),
            self.w_head.as_slice_mut().expect("standard layout"),
            self.b_head.as_slice_mut().expect("standard layout"),
        ]
    }

    pub fn param_count(&self) -> usize {
        self.flat().iter().map(|s| s.len()).sum()
    }

    fn check_token(&self, token: u32) -> Result<()> {
        if (token as usize) < self.vocab_size {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "token id {token} out of range for vocabulary of {}",
                self.vocab_size
            )))
        }
    }

    fn assemble_input(&self, token: u32, state: &CellState) -> Array1<f64> {
        let (e, d) = (self.embed_dim, self.state_dim);
        let mut x = Array1::zeros(self.input_width());
        x.slice_mut(ndarray::s![0..e])
            .assign(&self.embed.row(token as usize));
        x.slice_mut(ndarray::s![e..e + d]).assign(&state.context);
        x.slice_mut(ndarray::s![e + d..e + 2 * d]).assign(&state.output);
        x[self.input_width() - 1] = 1.0;
        x
    }

    /// One recurrence step, returning the next state and the gate record.
    pub fn step(&self, state: &CellState, token: u32) -> Result<(CellState, GateRecord)> {
        self.check_token(token)?;
        let x = self.assemble_input(token, state);
        let forget = self.w_forget.dot(&x).mapv(sigmoid);
        let gate = self.w_update_gate.dot(&x).mapv(sigmoid);
        let cand = self.w_update_cand.dot(&x).mapv(f64::tanh);
        let update = &gate * &cand;
        let context = &forget * &state.context + &update;
        let out_gate = self.w_output_gate.dot(&x).mapv(sigmoid);
        let output = context.mapv(f64::tanh) * &out_gate;

        if !context.iter().all(|v| v.is_finite()) || !output.iter().all(|v| v.is_finite()) {
            return Err(Error::numeric(None, "non-finite cell state"));
        }

        let record = GateRecord {
            forget: to_f32(&forget),
            update: to_f32(&update),
            context: to_f32(&context),
            output: to_f32(&output),
        };
        Ok((CellState { context, output }, record))
    }

    /// Run the model over a full sentence. Returns one logits row per input
    /// token (row t predicts token t+1) and the gate trace.
    ///
    /// With `dropout.train` set, inverted dropout is applied to the embedding
    /// input and to h ahead of the head, deterministically for a given seed.
    pub fn forward(&self, tokens: &[u32], dropout: &DropoutConfig) -> Result<(Array2<f64>, Trace)> {
        if tokens.is_empty() {
            return Err(Error::invalid("forward requires a non-empty token list"));
        }
        for &t in tokens {
            self.check_token(t)?;
        }
        let mut rng = dropout.rng();
        let mut state = CellState::zeros(self.state_dim);
        let mut logits = Array2::zeros((tokens.len(), self.vocab_size));
        let mut records = Vec::with_capacity(tokens.len());

        for (t, &token) in tokens.iter().enumerate() {
            let mut x = self.assemble_input(token, &state);
            if dropout.train && dropout.embed_rate > 0.0 {
                let keep = 1.0 - dropout.embed_rate;
                for i in 0..self.embed_dim {
                    x[i] = if rng.random::<f64>() < keep {
                        x[i] / keep
                    } else {
                        0.0
                    };
                }
            }
            let forget = self.w_forget.dot(&x).mapv(sigmoid);
            let gate = self.w_update_gate.dot(&x).mapv(sigmoid);
            let cand = self.w_update_cand.dot(&x).mapv(f64::tanh);
            let update = &gate * &cand;
            let context = &forget * &state.context + &update;
            let out_gate = self.w_output_gate.dot(&x).mapv(sigmoid);
            let output = context.mapv(f64::tanh) * &out_gate;

            if !context.iter().all(|v| v.is_finite()) {
                return Err(Error::numeric(Some(t), "non-finite cell state"));
            }

            let mut head_in = output.clone();
            if dropout.train && dropout.output_rate > 0.0 {
                let keep = 1.0 - dropout.output_rate;
                for i in 0..self.state_dim {
                    head_in[i] = if rng.random::<f64>() < keep {
                        head_in[i] / keep
                    } else {
                        0.0
                    };
                }
            }
            let row = self.w_head.dot(&head_in) + &self.b_head;
            logits.row_mut(t).assign(&row);

            records.push(GateRecord {
                forget: to_f32(&forget),
                update: to_f32(&update),
                context: to_f32(&context),
                output: to_f32(&output),
            });
            state = CellState { context, output };
        }

        Ok((
            logits,
            Trace {
                sentence_id: 0,
                token_ids: tokens.to_vec(),
                records,
            },
        ))
    }

    /// Probability distribution over the next token after a prefix.
    pub fn predict_next(&self, prefix: &[u32]) -> Result<Array1<f64>> {
        let (logits, _) = self.forward(prefix, &DropoutConfig::disabled())?;
        let mut row = logits.row(logits.nrows() - 1).to_owned();
        softmax_in_place(row.as_slice_mut().expect("standard layout"));
        Ok(row)
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn to_f32(v: &Array1<f64>) -> Vec<f32> {
    v.iter().map(|&x| x as f32).collect()
}

/// Numerically stable in-place softmax.
pub fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn zero_params(v: usize, e: usize, d: usize) -> ModelParams {
        let m = e + 2 * d + 1;
        ModelParams {
            vocab_size: v,
            embed_dim: e,
            state_dim: d,
            embed: Array2::zeros((v, e)),
            w_forget: Array2::zeros((d, m)),
            w_update_gate: Array2::zeros((d, m)),
            w_update_cand: Array2::zeros((d, m)),
            w_output_gate: Array2::zeros((d, m)),
            w_head: Array2::zeros((v, d)),
            b_head: Array1::zeros(v),
        }
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let a = ModelParams::init(5, 4, 3, 1);
        let b = ModelParams::init(5, 4, 3, 1);
        assert_eq!(a, b);
        let c = ModelParams::init(5, 4, 3, 2);
        assert_ne!(a, c);

        let m = a.input_width();
        for v in a.embed.iter() {
            assert!(v.abs() <= 1.0 / (4f64).sqrt());
        }
        for v in a.w_update_gate.iter() {
            assert!(v.abs() <= 1.0 / (m as f64).sqrt());
        }
        // Forget bias column is exactly +1.
        for v in a.w_forget.column(m - 1) {
            assert_eq!(*v, 1.0);
        }
    }

    #[test]
    fn zero_params_give_half_gates() {
        let p = zero_params(4, 3, 2);
        let (next, rec) = p.step(&CellState::zeros(2), 1).unwrap();
        for i in 0..2 {
            assert_abs_diff_eq!(rec.forget[i] as f64, 0.5, epsilon = 1e-12);
            assert_abs_diff_eq!(rec.update[i] as f64, 0.0, epsilon = 1e-12);
        }
        assert!(next.context.iter().all(|&v| v == 0.0));
        assert!(next.output.iter().all(|&v| v == 0.0));

        // From a non-zero state, c halves and h = tanh(c) * 0.5.
        let state = CellState {
            context: ndarray::array![0.8, -0.4],
            output: ndarray::array![0.1, 0.2],
        };
        let (next, _) = p.step(&state, 0).unwrap();
        assert_abs_diff_eq!(next.context[0], 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(next.context[1], -0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(next.output[0], 0.4f64.tanh() * 0.5, epsilon = 1e-12);
    }

    #[test]
    fn recurrence_holds_on_recorded_traces() {
        let p = ModelParams::init(6, 3, 2, 9);
        let tokens = vec![1, 2, 3, 4, 5, 0];
        let (_, trace) = p.forward(&tokens, &DropoutConfig::disabled()).unwrap();
        assert_eq!(trace.len(), tokens.len());
        assert!(trace.recurrence_residual() < 1e-7);
    }

    #[test]
    fn gate_ranges_hold_on_random_models() {
        for seed in 0..5 {
            let p = ModelParams::init(8, 4, 6, seed);
            let tokens: Vec<u32> = (0..12).map(|i| (i * 3 + seed as usize) as u32 % 8).collect();
            let (_, trace) = p.forward(&tokens, &DropoutConfig::disabled()).unwrap();
            for rec in &trace.records {
                assert!(rec.forget.iter().all(|&f| f > 0.0 && f < 1.0));
                assert!(rec.update.iter().all(|&u| u > -1.0 && u < 1.0));
                assert!(rec.output.iter().all(|&h| h > -1.0 && h < 1.0));
            }
        }
    }

    #[test]
    fn forward_is_deterministic_without_dropout() {
        let p = ModelParams::init(5, 3, 4, 3);
        let tokens = vec![0, 1, 2, 3, 4];
        let (la, ta) = p.forward(&tokens, &DropoutConfig::disabled()).unwrap();
        let (lb, tb) = p.forward(&tokens, &DropoutConfig::disabled()).unwrap();
        assert_eq!(la, lb);
        assert_eq!(ta, tb);
    }

    #[test]
    fn dropout_is_deterministic_given_seed() {
        let p = ModelParams::init(5, 3, 4, 3);
        let cfg = DropoutConfig {
            embed_rate: 0.2,
            output_rate: 0.5,
            train: true,
            seed: 77,
        };
        let tokens = vec![0, 1, 2, 3];
        let (la, _) = p.forward(&tokens, &cfg).unwrap();
        let (lb, _) = p.forward(&tokens, &cfg).unwrap();
        assert_eq!(la, lb);
    }

    #[test]
    fn softmax_rows_are_normalized() {
        let p = ModelParams::init(7, 3, 4, 5);
        let tokens = vec![1, 4, 6, 2];
        let (logits, _) = p.forward(&tokens, &DropoutConfig::disabled()).unwrap();
        for t in 0..logits.nrows() {
            let mut row = logits.row(t).to_owned();
            softmax_in_place(row.as_slice_mut().unwrap());
            let sum: f64 = row.sum();
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-6);
            assert!(row.iter().all(|&p| p >= 0.0));
        }
    }

    #[test]
    fn uniform_head_predicts_uniformly() {
        let mut p = ModelParams::init(5, 3, 4, 3);
        p.w_head.fill(0.0);
        p.b_head.fill(0.0);
        let probs = p.predict_next(&[1, 2]).unwrap();
        for &v in probs.iter() {
            assert_abs_diff_eq!(v, 0.2, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_token_sequence_traces_one_step() {
        let p = ModelParams::init(5, 3, 4, 3);
        let (logits, trace) = p.forward(&[2], &DropoutConfig::disabled()).unwrap();
        assert_eq!(trace.len(), 1);
        assert_eq!(logits.nrows(), 1);
    }

    #[test]
    fn out_of_range_token_errors() {
        let p = ModelParams::init(5, 3, 4, 3);
        assert!(p.forward(&[5], &DropoutConfig::disabled()).is_err());
        assert!(p.step(&CellState::zeros(4), 9).is_err());
    }
}
