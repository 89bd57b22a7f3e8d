//! Next-token evaluation: micro precision/recall per token group and a
//! token-level confusion matrix with infrequent words pooled.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{classify_token, TokenClass, Vocab};
use crate::error::Result;
use crate::lstm::backprop::predict_batch;
use crate::lstm::ModelParams;

/// Tokens ranked below this by test frequency collapse into the `*` row and
/// column of the confusion matrix.
pub const CONFUSION_DISPLAY_RANK: usize = 30;

const EVAL_BATCH: usize = 64;

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct GroupStats {
    pub true_positive: u64,
    pub false_positive: u64,
    pub false_negative: u64,
    pub precision: f64,
    pub recall: f64,
}

impl GroupStats {
    fn finalize(&mut self) {
        // A group never predicted has made no mistakes; report 1.0 rather
        // than dividing by zero.
        let p_den = self.true_positive + self.false_positive;
        let r_den = self.true_positive + self.false_negative;
        self.precision = if p_den == 0 {
            1.0
        } else {
            self.true_positive as f64 / p_den as f64
        };
        self.recall = if r_den == 0 {
            1.0
        } else {
            self.true_positive as f64 / r_den as f64
        };
    }
}

/// Token-level confusion counts; `labels` gives the display order and
/// `counts[i][j]` is the number of positions with true label i predicted as
/// label j.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    /// CSV with a header row and column of labels.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("true\\pred");
        for l in &self.labels {
            out.push(',');
            out.push_str(l);
        }
        out.push('\n');
        for (i, row) in self.counts.iter().enumerate() {
            out.push_str(&self.labels[i]);
            for v in row {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub train_loss: Option<f64>,
    /// Micro-averaged top-1 next-token accuracy over all test positions.
    pub accuracy: f64,
    pub positions: u64,
    /// Exact-match micro precision/recall per token group.
    pub groups: BTreeMap<String, GroupStats>,
    /// Per-token stats for every auxiliary (bracket / EOS) token.
    pub aux_tokens: BTreeMap<String, GroupStats>,
    pub confusion: ConfusionMatrix,
}

fn group_name(class: TokenClass) -> &'static str {
    match class {
        TokenClass::Bop => "bop",
        TokenClass::Eop => "eop",
        TokenClass::Eos => "eos",
        TokenClass::Word => "word",
    }
}

/// Evaluate top-1 next-token predictions over the test set.
///
/// Positions are all (sentence, t) with t >= 1: the model sees tokens up to
/// t-1 and predicts token t. Argmax ties break to the lowest token id.
pub fn evaluate(params: &ModelParams, test_ids: &[Vec<u32>], vocab: &Vocab) -> Result<EpochMetrics> {
    // Length-bucketed batches to keep padded work small.
    let mut order: Vec<usize> = (0..test_ids.len()).collect();
    order.sort_by_key(|&i| (test_ids[i].len(), i));

    let mut pairs: Vec<(u32, u32)> = Vec::new(); // (target, predicted)
    for chunk in order.chunks(EVAL_BATCH) {
        let batch: Vec<&[u32]> = chunk.iter().map(|&i| test_ids[i].as_slice()).collect();
        let preds = predict_batch(params, &batch)?;
        for (b, &i) in chunk.iter().enumerate() {
            for (t, &p) in preds[b].iter().enumerate() {
                pairs.push((test_ids[i][t + 1], p));
            }
        }
    }

    let classes: Vec<TokenClass> = vocab.tokens().iter().map(|t| classify_token(t)).collect();

    let mut correct = 0u64;
    let mut groups: BTreeMap<String, GroupStats> = BTreeMap::new();
    for class in [TokenClass::Bop, TokenClass::Eop, TokenClass::Eos, TokenClass::Word] {
        groups.insert(group_name(class).to_string(), GroupStats::default());
    }
    let mut aux_tokens: BTreeMap<String, GroupStats> = BTreeMap::new();
    let mut target_counts = vec![0u64; vocab.size()];

    for &(target, pred) in &pairs {
        target_counts[target as usize] += 1;
        let hit = target == pred;
        if hit {
            correct += 1;
        }
        let target_group = group_name(classes[target as usize]).to_string();
        let pred_group = group_name(classes[pred as usize]).to_string();
        {
            let g = groups.get_mut(&target_group).expect("groups prefilled");
            if hit {
                g.true_positive += 1;
            } else {
                g.false_negative += 1;
            }
        }
        if !hit {
            groups.get_mut(&pred_group).expect("groups prefilled").false_positive += 1;
        }

        for (id, is_target) in [(target, true), (pred, !hit)] {
            if classes[id as usize] == TokenClass::Word {
                continue;
            }
            let entry = aux_tokens
                .entry(vocab.decode(id).to_string())
                .or_default();
            if is_target && hit {
                entry.true_positive += 1;
            } else if is_target {
                entry.false_negative += 1;
            } else {
                entry.false_positive += 1;
            }
        }
    }
    for g in groups.values_mut() {
        g.finalize();
    }
    for g in aux_tokens.values_mut() {
        g.finalize();
    }

    let confusion = build_confusion(&pairs, vocab, &classes, &target_counts);
    let positions = pairs.len() as u64;
    Ok(EpochMetrics {
        epoch: 0,
        train_loss: None,
        accuracy: if positions == 0 {
            0.0
        } else {
            correct as f64 / positions as f64
        },
        positions,
        groups,
        aux_tokens,
        confusion,
    })
}

fn build_confusion(
    pairs: &[(u32, u32)],
    vocab: &Vocab,
    classes: &[TokenClass],
    target_counts: &[u64],
) -> ConfusionMatrix {
    // Keep the most frequent targets, pool the rest as '*'.
    let mut ranked: Vec<u32> = (0..vocab.size() as u32).filter(|&i| target_counts[i as usize] > 0).collect();
    ranked.sort_by(|&a, &b| {
        target_counts[b as usize]
            .cmp(&target_counts[a as usize])
            .then(a.cmp(&b))
    });
    let kept: Vec<u32> = ranked.into_iter().take(CONFUSION_DISPLAY_RANK).collect();

    // Display order: phrase openers, closers, EOS, words, then the pool.
    let mut display: Vec<u32> = Vec::new();
    for wanted in [TokenClass::Bop, TokenClass::Eop, TokenClass::Eos, TokenClass::Word] {
        let mut ids: Vec<u32> = kept
            .iter()
            .copied()
            .filter(|&i| classes[i as usize] == wanted)
            .collect();
        ids.sort_unstable();
        display.extend(ids);
    }

    let index_of = |id: u32| -> usize {
        display
            .iter()
            .position(|&k| k == id)
            .unwrap_or(display.len()) // the '*' pool
    };

    let mut labels: Vec<String> = display
        .iter()
        .map(|&i| vocab.decode(i).to_string())
        .collect();
    labels.push("*".to_string());
    let n = labels.len();
    let mut counts = vec![vec![0u64; n]; n];
    for &(target, pred) in pairs {
        counts[index_of(target)][index_of(pred)] += 1;
    }
    ConfusionMatrix { labels, counts }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocab, linearize, parse_trees, Scenario, TokenSeq};
    use crate::lstm::ModelParams;
    use std::collections::BTreeMap as Map;

    fn paren_setup() -> (Vec<Vec<u32>>, Vocab) {
        let trees =
            parse_trees("(S (NP (DT a) (NN dog)) (VP (VBZ runs)))\n(NP (DT a) (NN cat))").unwrap();
        let seqs: Vec<TokenSeq> = trees.iter().map(|t| linearize(t, Scenario::Paren)).collect();
        let vocab = build_vocab(&seqs, 10, &Map::new()).unwrap();
        let ids = seqs.iter().map(|s| vocab.encode_seq(s).unwrap()).collect();
        (ids, vocab)
    }

    #[test]
    fn uniform_model_always_predicts_eos() {
        // With a zeroed head every logit ties and the lowest id (EOS) wins,
        // so EOS precision equals the EOS target frequency.
        let (ids, vocab) = paren_setup();
        let mut p = ModelParams::init(vocab.size(), 4, 4, 1);
        p.w_head.fill(0.0);
        p.b_head.fill(0.0);
        let m = evaluate(&p, &ids, &vocab).unwrap();
        let eos_targets: u64 = ids.iter().map(|_| 1u64).sum();
        let expected = eos_targets as f64 / m.positions as f64;
        let eos = &m.groups["eos"];
        assert_eq!(eos.true_positive + eos.false_positive, m.positions);
        assert!((eos.precision - expected).abs() < 1e-12);
        assert_eq!(eos.recall, 1.0);
    }

    #[test]
    fn perfect_predictor_has_unit_precision_and_diagonal_confusion() {
        // A "model" evaluated on its own targets: emulate by evaluating a
        // trained-free scenario where prediction equals target is impossible
        // to force through the net, so instead check the bookkeeping
        // directly on synthetic pairs via the public pieces.
        let (ids, vocab) = paren_setup();
        let classes: Vec<TokenClass> =
            vocab.tokens().iter().map(|t| classify_token(t)).collect();
        let mut target_counts = vec![0u64; vocab.size()];
        let pairs: Vec<(u32, u32)> = ids
            .iter()
            .flat_map(|s| s[1..].iter().map(|&t| (t, t)))
            .collect();
        for &(t, _) in &pairs {
            target_counts[t as usize] += 1;
        }
        let confusion = build_confusion(&pairs, &vocab, &classes, &target_counts);
        for (i, row) in confusion.counts.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if i != j {
                    assert_eq!(v, 0, "off-diagonal {i},{j}");
                }
            }
        }
    }

    #[test]
    fn confusion_rows_sum_to_target_counts() {
        let (ids, vocab) = paren_setup();
        let p = ModelParams::init(vocab.size(), 4, 4, 2);
        let m = evaluate(&p, &ids, &vocab).unwrap();
        let total: u64 = m.confusion.counts.iter().flatten().sum();
        assert_eq!(total, m.positions);
        // Row for a label equals the number of times it was the target.
        let mut by_label: BTreeMap<String, u64> = BTreeMap::new();
        for seq in &ids {
            for &t in &seq[1..] {
                *by_label.entry(vocab.decode(t).to_string()).or_default() += 1;
            }
        }
        for (i, label) in m.confusion.labels.iter().enumerate() {
            if label == "*" {
                continue;
            }
            let row_sum: u64 = m.confusion.counts[i].iter().sum();
            assert_eq!(row_sum, by_label[label], "row {label}");
        }
    }

    #[test]
    fn group_stats_match_confusion_without_pooling() {
        // Small vocabulary: nothing is pooled, so group precision/recall can
        // be recomputed from the matrix exactly.
        let (ids, vocab) = paren_setup();
        let p = ModelParams::init(vocab.size(), 4, 4, 3);
        let m = evaluate(&p, &ids, &vocab).unwrap();
        assert!(m.confusion.labels.len() <= CONFUSION_DISPLAY_RANK + 1);

        let class_of = |label: &str| group_name(classify_token(label));
        for (gname, stats) in &m.groups {
            let mut tp = 0u64;
            let mut fp = 0u64;
            let mut fn_ = 0u64;
            for (i, row) in m.confusion.counts.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    let ti = &m.confusion.labels[i];
                    let tj = &m.confusion.labels[j];
                    if ti == "*" || tj == "*" {
                        assert_eq!(v, 0);
                        continue;
                    }
                    let exact = i == j;
                    if class_of(ti) == gname.as_str() {
                        if exact {
                            tp += v;
                        } else {
                            fn_ += v;
                        }
                    }
                    if class_of(tj) == gname.as_str() && !exact {
                        fp += v;
                    }
                }
            }
            assert_eq!(stats.true_positive, tp, "{gname} tp");
            assert_eq!(stats.false_positive, fp, "{gname} fp");
            assert_eq!(stats.false_negative, fn_, "{gname} fn");
        }
    }

    #[test]
    fn csv_has_header_row_and_column() {
        let cm = ConfusionMatrix {
            labels: vec!["(".into(), ")".into()],
            counts: vec![vec![3, 1], vec![0, 2]],
        };
        let csv = cm.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("true\\pred,(,)"));
        assert_eq!(lines.next(), Some("(,3,1"));
        assert_eq!(lines.next(), Some("),0,2"));
    }
}
