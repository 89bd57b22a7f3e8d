//! Exact backpropagation through time over padded batches.
//!
//! Batches are padded to the longest member and masked, so the gradient of
//! the mean next-token cross-entropy is exact: padding contributes nothing,
//! and the recurrent paths through both c_{t-1} and h_{t-1} inside the step
//! input are differentiated.

use ndarray::{s, Array1, Array2, Axis};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{sigmoid, softmax_in_place, ModelParams};
use crate::error::{Error, Result};

/// Inverted-dropout settings for training passes.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct DropoutConfig {
    /// Rate applied to the embedding slice of the step input.
    pub embed_rate: f64,
    /// Rate applied to h just before the softmax head (the recurrent path
    /// stays undropped).
    pub output_rate: f64,
    pub train: bool,
    pub seed: u64,
}

impl DropoutConfig {
    pub fn disabled() -> Self {
        DropoutConfig {
            embed_rate: 0.0,
            output_rate: 0.0,
            train: false,
            seed: 0,
        }
    }

    pub(crate) fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Gradient accumulator shaped like [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub embed: Array2<f64>,
    pub w_forget: Array2<f64>,
    pub w_update_gate: Array2<f64>,
    pub w_update_cand: Array2<f64>,
    pub w_output_gate: Array2<f64>,
    pub w_head: Array2<f64>,
    pub b_head: Array1<f64>,
}

impl Gradients {
    pub fn zeros_like(p: &ModelParams) -> Self {
        Gradients {
            embed: Array2::zeros(p.embed.raw_dim()),
            w_forget: Array2::zeros(p.w_forget.raw_dim()),
            w_update_gate: Array2::zeros(p.w_update_gate.raw_dim()),
            w_update_cand: Array2::zeros(p.w_update_cand.raw_dim()),
            w_output_gate: Array2::zeros(p.w_output_gate.raw_dim()),
            w_head: Array2::zeros(p.w_head.raw_dim()),
            b_head: Array1::zeros(p.b_head.raw_dim()),
        }
    }

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

    /// Euclidean norm over every entry.
    pub fn global_norm(&self) -> f64 {
        self.flat()
            .iter()
            .flat_map(|s| s.iter())
            .map(|&g| g * g)
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        for slice in self.flat_mut() {
            for g in slice.iter_mut() {
                *g *= factor;
            }
        }
    }
}

struct StepTape {
    x: Array2<f64>,
    forget: Array2<f64>,
    in_gate: Array2<f64>,
    cand: Array2<f64>,
    out_gate: Array2<f64>,
    context_prev: Array2<f64>,
    tanh_context: Array2<f64>,
    dh_head: Array2<f64>,
    emb_mask: Option<Array2<f64>>,
}

/// Mean next-token cross-entropy over a batch and its exact gradient.
///
/// Every sequence must have length at least 2. The loss is the mean of
/// -log p(next token) over all prediction positions in the batch.
pub fn loss_and_grads(
    params: &ModelParams,
    batch: &[&[u32]],
    dropout: &DropoutConfig,
) -> Result<(f64, Gradients)> {
    if batch.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    for (i, seq) in batch.iter().enumerate() {
        if seq.len() < 2 {
            return Err(Error::invalid(format!(
                "sequence {i} has length {}; need at least 2 for next-token loss",
                seq.len()
            )));
        }
        for &t in seq.iter() {
            if t as usize >= params.vocab_size {
                return Err(Error::invalid(format!("token id {t} out of range")));
            }
        }
    }

    let bsz = batch.len();
    let (e, d, v) = (params.embed_dim, params.state_dim, params.vocab_size);
    let m = params.input_width();
    // The step consuming the final token predicts nothing, so it is skipped.
    let steps = batch.iter().map(|s| s.len() - 1).max().unwrap();
    let positions: usize = batch.iter().map(|s| s.len() - 1).sum();
    let inv_positions = 1.0 / positions as f64;

    let mut rng = dropout.rng();
    let mut grads = Gradients::zeros_like(params);
    let mut loss = 0.0;

    let mut context = Array2::<f64>::zeros((bsz, d));
    let mut hidden = Array2::<f64>::zeros((bsz, d));
    let mut tape: Vec<StepTape> = Vec::with_capacity(steps);

    for t in 0..steps {
        let mut x = Array2::<f64>::zeros((bsz, m));
        for (b, seq) in batch.iter().enumerate() {
            let token = if t < seq.len() { seq[t] } else { 0 };
            x.slice_mut(s![b, 0..e])
                .assign(&params.embed.row(token as usize));
        }
        let emb_mask = if dropout.train && dropout.embed_rate > 0.0 {
            let keep = 1.0 - dropout.embed_rate;
            let mask = Array2::from_shape_fn((bsz, e), |_| {
                if rng.random::<f64>() < keep {
                    1.0 / keep
                } else {
                    0.0
                }
            });
            let masked = &x.slice(s![.., 0..e]) * &mask;
            x.slice_mut(s![.., 0..e]).assign(&masked);
            Some(mask)
        } else {
            None
        };
        x.slice_mut(s![.., e..e + d]).assign(&context);
        x.slice_mut(s![.., e + d..e + 2 * d]).assign(&hidden);
        x.column_mut(m - 1).fill(1.0);

        let forget = x.dot(&params.w_forget.t()).mapv(sigmoid);
        let in_gate = x.dot(&params.w_update_gate.t()).mapv(sigmoid);
        let cand = x.dot(&params.w_update_cand.t()).mapv(f64::tanh);
        let out_gate = x.dot(&params.w_output_gate.t()).mapv(sigmoid);
        let context_prev = context;
        context = &forget * &context_prev + &in_gate * &cand;
        let tanh_context = context.mapv(f64::tanh);
        hidden = &tanh_context * &out_gate;

        // Head pass for this step: accumulate loss, head gradients, and the
        // gradient flowing back into h.
        let head_mask = if dropout.train && dropout.output_rate > 0.0 {
            let keep = 1.0 - dropout.output_rate;
            Some(Array2::from_shape_fn((bsz, d), |_| {
                if rng.random::<f64>() < keep {
                    1.0 / keep
                } else {
                    0.0
                }
            }))
        } else {
            None
        };
        let head_in = match &head_mask {
            Some(mask) => &hidden * mask,
            None => hidden.clone(),
        };
        let mut logits = head_in.dot(&params.w_head.t());
        logits += &params.b_head;

        let mut dz = Array2::<f64>::zeros((bsz, v));
        for (b, seq) in batch.iter().enumerate() {
            if t + 1 >= seq.len() {
                continue; // padded position
            }
            let target = seq[t + 1] as usize;
            let mut row = logits.row_mut(b);
            softmax_in_place(row.as_slice_mut().expect("standard layout"));
            loss -= row[target].max(f64::MIN_POSITIVE).ln() * inv_positions;
            let mut dz_row = dz.row_mut(b);
            dz_row.assign(&row);
            dz_row[target] -= 1.0;
            dz_row.mapv_inplace(|g| g * inv_positions);
        }
        ndarray::linalg::general_mat_mul(1.0, &dz.t(), &head_in, 1.0, &mut grads.w_head);
        grads.b_head += &dz.sum_axis(Axis(0));
        let mut dh_head = dz.dot(&params.w_head);
        if let Some(mask) = &head_mask {
            dh_head *= mask;
        }

        tape.push(StepTape {
            x,
            forget,
            in_gate,
            cand,
            out_gate,
            context_prev,
            tanh_context,
            dh_head,
            emb_mask,
        });
    }

    if !loss.is_finite() {
        return Err(Error::numeric(None, format!("non-finite loss {loss}")));
    }

    // Backward pass.
    let mut dc_next = Array2::<f64>::zeros((bsz, d));
    let mut dh_next = Array2::<f64>::zeros((bsz, d));
    for t in (0..steps).rev() {
        let rec = &tape[t];
        let dh = &rec.dh_head + &dh_next;
        let dtanh = rec.tanh_context.mapv(|v| 1.0 - v * v);
        let dc = dc_next + &dh * &rec.out_gate * &dtanh;

        let d_out = &dh * &rec.tanh_context * &rec.out_gate.mapv(|o| o * (1.0 - o));
        let d_forget = &dc * &rec.context_prev * &rec.forget.mapv(|f| f * (1.0 - f));
        let d_in = &dc * &rec.cand * &rec.in_gate.mapv(|g| g * (1.0 - g));
        let d_cand = &dc * &rec.in_gate * &rec.cand.mapv(|j| 1.0 - j * j);

        ndarray::linalg::general_mat_mul(1.0, &d_forget.t(), &rec.x, 1.0, &mut grads.w_forget);
        ndarray::linalg::general_mat_mul(1.0, &d_in.t(), &rec.x, 1.0, &mut grads.w_update_gate);
        ndarray::linalg::general_mat_mul(1.0, &d_cand.t(), &rec.x, 1.0, &mut grads.w_update_cand);
        ndarray::linalg::general_mat_mul(1.0, &d_out.t(), &rec.x, 1.0, &mut grads.w_output_gate);

        let mut dx = d_forget.dot(&params.w_forget);
        dx += &d_in.dot(&params.w_update_gate);
        dx += &d_cand.dot(&params.w_update_cand);
        dx += &d_out.dot(&params.w_output_gate);

        for (b, seq) in batch.iter().enumerate() {
            if t >= seq.len() - 1 {
                continue;
            }
            let token = seq[t] as usize;
            let mut row = grads.embed.row_mut(token);
            match &rec.emb_mask {
                Some(mask) => {
                    for i in 0..e {
                        row[i] += dx[[b, i]] * mask[[b, i]];
                    }
                }
                None => {
                    for i in 0..e {
                        row[i] += dx[[b, i]];
                    }
                }
            }
        }

        dc_next = &dc * &rec.forget + &dx.slice(s![.., e..e + d]);
        dh_next = dx.slice(s![.., e + d..e + 2 * d]).to_owned();
    }

    Ok((loss, grads))
}

/// Forward-only batched pass returning the argmax next-token prediction for
/// every position (row per sequence, entry per predicting step). Ties break
/// to the lowest token id. Dropout is never applied here.
pub fn predict_batch(params: &ModelParams, batch: &[&[u32]]) -> Result<Vec<Vec<u32>>> {
    if batch.is_empty() {
        return Ok(Vec::new());
    }
    let bsz = batch.len();
    let (e, d) = (params.embed_dim, params.state_dim);
    let m = params.input_width();
    let steps = batch.iter().map(|s| s.len().saturating_sub(1)).max().unwrap();
    let mut preds: Vec<Vec<u32>> = batch.iter().map(|s| Vec::with_capacity(s.len() - 1)).collect();

    let mut context = Array2::<f64>::zeros((bsz, d));
    let mut hidden = Array2::<f64>::zeros((bsz, d));
    for t in 0..steps {
        let mut x = Array2::<f64>::zeros((bsz, m));
        for (b, seq) in batch.iter().enumerate() {
            let token = if t < seq.len() { seq[t] } else { 0 };
            if token as usize >= params.vocab_size {
                return Err(Error::invalid(format!("token id {token} out of range")));
            }
            x.slice_mut(s![b, 0..e])
                .assign(&params.embed.row(token as usize));
        }
        x.slice_mut(s![.., e..e + d]).assign(&context);
        x.slice_mut(s![.., e + d..e + 2 * d]).assign(&hidden);
        x.column_mut(m - 1).fill(1.0);

        let forget = x.dot(&params.w_forget.t()).mapv(sigmoid);
        let in_gate = x.dot(&params.w_update_gate.t()).mapv(sigmoid);
        let cand = x.dot(&params.w_update_cand.t()).mapv(f64::tanh);
        let out_gate = x.dot(&params.w_output_gate.t()).mapv(sigmoid);
        context = &forget * &context + &in_gate * &cand;
        hidden = &context.mapv(f64::tanh) * &out_gate;

        let mut logits = hidden.dot(&params.w_head.t());
        logits += &params.b_head;
        for (b, seq) in batch.iter().enumerate() {
            if t + 1 >= seq.len() {
                continue;
            }
            let row = logits.row(b);
            let mut best = 0usize;
            for i in 1..row.len() {
                if row[i] > row[best] {
                    best = i;
                }
            }
            preds[b].push(best as u32);
        }
    }
    Ok(preds)
}
