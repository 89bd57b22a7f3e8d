//! Adam training loop with per-epoch evaluation and best-epoch selection.

pub mod eval;

pub use eval::{evaluate, ConfusionMatrix, EpochMetrics, GroupStats};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Scenario, Vocab};
use crate::error::{Error, Result};
use crate::lstm::{loss_and_grads, DropoutConfig, Gradients, ModelParams};

/// Hyperparameters for one training run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub embed_dim: usize,
    pub state_dim: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub embed_dropout: f64,
    pub output_dropout: f64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub clip_norm: f64,
}

impl TrainConfig {
    /// Scenario defaults: state size 100 for Paren, 200 for Tag, 1000 for the
    /// word-bearing scenarios, dropout only for raw words. Dimensions scale
    /// down freely for desk-size runs.
    pub fn for_scenario(scenario: Scenario) -> Self {
        let dim = match scenario {
            Scenario::Paren => 100,
            Scenario::Tag => 200,
            Scenario::ParenW | Scenario::TagW | Scenario::Words => 1000,
        };
        let (embed_dropout, output_dropout) = match scenario {
            Scenario::Words => (0.2, 0.5),
            _ => (0.0, 0.0),
        };
        TrainConfig {
            embed_dim: dim,
            state_dim: dim,
            epochs: 20,
            batch_size: 32,
            seed: 0,
            embed_dropout,
            output_dropout,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            clip_norm: 5.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.embed_dim == 0 || self.state_dim == 0 || self.batch_size == 0 {
            return Err(Error::invalid("dimensions and batch size must be positive"));
        }
        if !(0.0..1.0).contains(&self.embed_dropout) || !(0.0..1.0).contains(&self.output_dropout)
        {
            return Err(Error::invalid("dropout rates must lie in [0, 1)"));
        }
        if self.learning_rate <= 0.0 || self.clip_norm <= 0.0 || self.epsilon <= 0.0 {
            return Err(Error::invalid("optimizer constants must be positive"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::invalid("Adam betas must lie in [0, 1)"));
        }
        Ok(())
    }

    fn dropout_for_batch(&self, epoch: usize, batch: usize) -> DropoutConfig {
        DropoutConfig {
            embed_rate: self.embed_dropout,
            output_rate: self.output_dropout,
            train: self.embed_dropout > 0.0 || self.output_dropout > 0.0,
            seed: mix_seed(self.seed, 0x5eed, ((epoch as u64) << 32) | batch as u64),
        }
    }
}

/// First/second-moment accumulators shaped like the parameters.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub first: Gradients,
    pub second: Gradients,
    pub step: u64,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> Self {
        AdamState {
            first: Gradients::zeros_like(params),
            second: Gradients::zeros_like(params),
            step: 0,
        }
    }
}

/// One bias-corrected Adam step, after clipping the gradients to
/// `clip_norm` in global Euclidean norm.
pub fn adam_update(
    params: &mut ModelParams,
    mut grads: Gradients,
    state: &mut AdamState,
    cfg: &TrainConfig,
) -> Result<()> {
    let norm = grads.global_norm();
    if !norm.is_finite() {
        return Err(Error::numeric(None, "non-finite gradient"));
    }
    if norm > cfg.clip_norm {
        grads.scale(cfg.clip_norm / norm);
    }

    state.step += 1;
    let t = state.step as i32;
    let bias1 = 1.0 - cfg.beta1.powi(t);
    let bias2 = 1.0 - cfg.beta2.powi(t);

    let mut param_slices = params.flat_mut();
    let grad_slices = grads.flat();
    let mut m_slices = state.first.flat_mut();
    let mut v_slices = state.second.flat_mut();
    for a in 0..param_slices.len() {
        let p = &mut param_slices[a];
        let g = grad_slices[a];
        let m = &mut m_slices[a];
        let v = &mut v_slices[a];
        for k in 0..g.len() {
            m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
            v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
            let m_hat = m[k] / bias1;
            let v_hat = v[k] / bias2;
            p[k] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
            if !p[k].is_finite() {
                return Err(Error::numeric(None, "non-finite parameter after update"));
            }
        }
    }
    Ok(())
}

/// Result of a training run: the best-epoch parameters and every epoch's
/// metrics. `diverged` is set when a numeric fault aborted the loop; the
/// returned parameters are then the best (or initial) ones seen so far.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub best_epoch: Option<usize>,
    pub metrics: Vec<EpochMetrics>,
    pub diverged: bool,
}

/// Train for `cfg.epochs` epochs and keep the checkpoint with the best test
/// next-token accuracy (ties go to the earlier epoch).
///
/// Sentences are bucketed by length into fixed batches; batch order is
/// reshuffled each epoch from the run seed, so the whole run is reproducible
/// bit for bit.
pub fn train(
    cfg: &TrainConfig,
    train_ids: &[Vec<u32>],
    test_ids: &[Vec<u32>],
    vocab: &Vocab,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_ids.is_empty() || test_ids.is_empty() {
        return Err(Error::invalid("train and test sets must be non-empty"));
    }
    for seq in train_ids.iter().chain(test_ids) {
        if seq.len() < 2 {
            return Err(Error::invalid("every sequence needs at least 2 tokens"));
        }
    }

    let mut params = ModelParams::init(vocab.size(), cfg.embed_dim, cfg.state_dim, cfg.seed);
    let mut adam = AdamState::new(&params);

    // Length bucketing keeps padding waste low.
    let mut order: Vec<usize> = (0..train_ids.len()).collect();
    order.sort_by_key(|&i| (train_ids[i].len(), i));
    let batches: Vec<Vec<usize>> = order.chunks(cfg.batch_size).map(|c| c.to_vec()).collect();

    let mut best: Option<(usize, f64, ModelParams)> = None;
    let mut metrics = Vec::with_capacity(cfg.epochs);
    let mut diverged = false;

    'epochs: for epoch in 0..cfg.epochs {
        let mut batch_order: Vec<usize> = (0..batches.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, 0x0e90c4, epoch as u64));
        batch_order.shuffle(&mut rng);

        let mut loss_sum = 0.0;
        let mut position_sum = 0usize;
        for (k, &bi) in batch_order.iter().enumerate() {
            let batch: Vec<&[u32]> =
                batches[bi].iter().map(|&i| train_ids[i].as_slice()).collect();
            let positions: usize = batch.iter().map(|s| s.len() - 1).sum();
            let dropout = cfg.dropout_for_batch(epoch, k);
            let step = loss_and_grads(&params, &batch, &dropout).and_then(|(loss, grads)| {
                adam_update(&mut params, grads, &mut adam, cfg).map(|_| loss)
            });
            match step {
                Ok(loss) => {
                    loss_sum += loss * positions as f64;
                    position_sum += positions;
                }
                Err(Error::Numeric { .. }) => {
                    diverged = true;
                    break 'epochs;
                }
                Err(e) => return Err(e),
            }
        }

        let train_loss = loss_sum / position_sum.max(1) as f64;
        let mut epoch_metrics = evaluate(&params, test_ids, vocab)?;
        epoch_metrics.epoch = epoch;
        epoch_metrics.train_loss = Some(train_loss);
        let accuracy = epoch_metrics.accuracy;
        metrics.push(epoch_metrics);

        if best.as_ref().map_or(true, |(_, acc, _)| accuracy > *acc) {
            best = Some((epoch, accuracy, params.clone()));
        }
    }

    let (best_epoch, final_params) = match best {
        Some((epoch, _, p)) => (Some(epoch), p),
        None => (None, params),
    };
    Ok(TrainOutcome {
        params: final_params,
        best_epoch,
        metrics,
        diverged,
    })
}

/// Deterministic index split: every `every`-th sentence goes to the second
/// (test) part, the rest to the first.
pub fn split_evenly(n: usize, every: usize) -> (Vec<usize>, Vec<usize>) {
    let mut first = Vec::with_capacity(n);
    let mut second = Vec::with_capacity(n / every.max(1) + 1);
    for i in 0..n {
        if every > 0 && (i + 1) % every == 0 {
            second.push(i);
        } else {
            first.push(i);
        }
    }
    (first, second)
}

fn mix_seed(seed: u64, salt: u64, index: u64) -> u64 {
    // splitmix64 over the combined inputs
    let mut z = seed
        .wrapping_add(salt.wrapping_mul(0x9E3779B97F4A7C15))
        .wrapping_add(index.wrapping_mul(0xBF58476D1CE4E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocab, gen_dyck};
    use approx::assert_abs_diff_eq;
    use std::collections::BTreeMap;

    fn tiny_params() -> ModelParams {
        ModelParams::init(4, 2, 3, 7)
    }

    fn constant_grads(p: &ModelParams, value: f64) -> Gradients {
        let mut g = Gradients::zeros_like(p);
        for s in g.flat_mut() {
            for x in s.iter_mut() {
                *x = value;
            }
        }
        g
    }

    #[test]
    fn first_adam_step_moves_by_learning_rate() {
        let mut p = tiny_params();
        let before = p.clone();
        let mut cfg = TrainConfig::for_scenario(Scenario::Paren);
        cfg.clip_norm = 1e9; // keep the constant gradient unclipped
        let mut state = AdamState::new(&p);
        let g = 0.25;
        let grads = constant_grads(&p, g);
        adam_update(&mut p, grads, &mut state, &cfg).unwrap();
        // With bias correction, step 1 moves each entry by lr * g/(|g|+eps).
        for (a, b) in before.flat().iter().zip(p.flat().iter()) {
            for (x, y) in a.iter().zip(b.iter()) {
                assert_abs_diff_eq!(x - y, cfg.learning_rate, epsilon = 1e-6);
            }
        }
        assert_eq!(state.step, 1);
    }

    #[test]
    fn zero_gradient_leaves_parameters_fixed() {
        let mut p = tiny_params();
        let before = p.clone();
        let cfg = TrainConfig::for_scenario(Scenario::Paren);
        let mut state = AdamState::new(&p);
        let grads = constant_grads(&p, 0.0);
        adam_update(&mut p, grads, &mut state, &cfg).unwrap();
        assert_eq!(p, before);
    }

    #[test]
    fn adam_updates_are_deterministic() {
        let run = || {
            let mut p = tiny_params();
            let cfg = TrainConfig::for_scenario(Scenario::Paren);
            let mut state = AdamState::new(&p);
            for i in 0..5 {
                let grads = constant_grads(&p, 0.1 * i as f64);
                adam_update(&mut p, grads, &mut state, &cfg).unwrap();
            }
            p
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn clipping_bounds_the_applied_norm() {
        let p = tiny_params();
        let mut g = constant_grads(&p, 10.0);
        let norm = g.global_norm();
        assert!(norm > 5.0);
        g.scale(5.0 / norm);
        assert_abs_diff_eq!(g.global_norm(), 5.0, epsilon = 1e-9);
    }

    #[test]
    fn split_every_tenth_is_ten_percent() {
        let (train, test) = split_evenly(100, 10);
        assert_eq!(test.len(), 10);
        assert_eq!(train.len(), 90);
        assert_eq!(test[0], 9);
        assert!(train.iter().all(|i| (i + 1) % 10 != 0));
    }

    fn dyck_setup() -> (Vec<Vec<u32>>, Vec<Vec<u32>>, Vocab) {
        // A low depth ceiling makes forced closes frequent, so a counting
        // model has real headroom over the majority class.
        let seqs = gen_dyck(1, 400, 3, 5).unwrap();
        let vocab = build_vocab(&seqs, 10, &BTreeMap::new()).unwrap();
        let ids: Vec<Vec<u32>> = seqs.iter().map(|s| vocab.encode_seq(s).unwrap()).collect();
        let (train_idx, test_idx) = split_evenly(ids.len(), 10);
        (
            train_idx.iter().map(|&i| ids[i].clone()).collect(),
            test_idx.iter().map(|&i| ids[i].clone()).collect(),
            vocab,
        )
    }

    #[test]
    fn zero_epochs_returns_initial_model() {
        let (train_ids, test_ids, vocab) = dyck_setup();
        let mut cfg = TrainConfig::for_scenario(Scenario::Paren);
        cfg.embed_dim = 8;
        cfg.state_dim = 8;
        cfg.epochs = 0;
        let out = train(&cfg, &train_ids, &test_ids, &vocab).unwrap();
        assert!(out.metrics.is_empty());
        assert_eq!(out.best_epoch, None);
        assert_eq!(out.params, ModelParams::init(vocab.size(), 8, 8, cfg.seed));
    }

    #[test]
    fn training_is_deterministic() {
        let (train_ids, test_ids, vocab) = dyck_setup();
        let mut cfg = TrainConfig::for_scenario(Scenario::Paren);
        cfg.embed_dim = 8;
        cfg.state_dim = 8;
        cfg.epochs = 2;
        let a = train(&cfg, &train_ids, &test_ids, &vocab).unwrap();
        let b = train(&cfg, &train_ids, &test_ids, &vocab).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(
            serde_json::to_string(&a.metrics).unwrap(),
            serde_json::to_string(&b.metrics).unwrap()
        );
    }

    #[test]
    fn dyck_training_beats_majority_baseline() {
        let (train_ids, test_ids, vocab) = dyck_setup();
        // Majority baseline: always predict the most frequent target token.
        let mut counts = vec![0u64; vocab.size()];
        let mut total = 0u64;
        for seq in &test_ids {
            for &t in &seq[1..] {
                counts[t as usize] += 1;
                total += 1;
            }
        }
        let baseline = *counts.iter().max().unwrap() as f64 / total as f64;

        let mut cfg = TrainConfig::for_scenario(Scenario::Paren);
        cfg.embed_dim = 16;
        cfg.state_dim = 32;
        cfg.epochs = 10;
        cfg.seed = 3;
        let out = train(&cfg, &train_ids, &test_ids, &vocab).unwrap();
        let best = &out.metrics[out.best_epoch.unwrap()];
        assert!(
            best.accuracy > baseline,
            "trained accuracy {} should beat the majority baseline {baseline}",
            best.accuracy
        );
        assert!(!out.diverged);
        // The selected epoch maximizes accuracy over the recorded metrics.
        let max = out
            .metrics
            .iter()
            .map(|m| m.accuracy)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(best.accuracy, max);
        assert!(out.metrics.iter().all(|m| m.train_loss.unwrap().is_finite()));
    }
}
