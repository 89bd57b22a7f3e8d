//! Probes over recorded gate traces: distributional statistics, linear
//! subspace fits, and principal-component analyses.

pub mod pca;
pub mod regress;
pub mod stats;

use std::collections::BTreeMap;

use ndarray::Array2;

use crate::corpus::{TokenClass, TokenSeq};
use crate::error::{Error, Result};
use crate::lstm::Trace;

/// Which internal vector a probe reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VectorKind {
    Forget,
    Update,
    Context,
    Output,
}

impl std::str::FromStr for VectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "f" | "forget" => Ok(VectorKind::Forget),
            "u" | "update" => Ok(VectorKind::Update),
            "c" | "context" => Ok(VectorKind::Context),
            "h" | "output" => Ok(VectorKind::Output),
            other => Err(Error::invalid(format!("unknown vector kind {other:?}"))),
        }
    }
}

/// Trace positions pooled across sentences, aligned with their gold
/// annotations.
///
/// Only content steps are pooled: the step that consumes the final EOS token
/// is dropped, since the state after it never feeds a prediction. Rows of
/// the vector matrices correspond 1:1 with the metadata vectors.
#[derive(Debug, Clone)]
pub struct ProbeDataset {
    pub state_dim: usize,
    pub sentence: Vec<u32>,
    pub step: Vec<u32>,
    pub token: Vec<u32>,
    pub token_class: Vec<TokenClass>,
    pub depth: Vec<f64>,
    pub tag_depth: BTreeMap<String, Vec<f64>>,
    pub inside: BTreeMap<String, Vec<bool>>,
    /// Preterminal tag over each word token; None for bracket tokens.
    pub gold_pos: Vec<Option<String>>,
    pub forget: Array2<f64>,
    pub update: Array2<f64>,
    pub context: Array2<f64>,
    pub output: Array2<f64>,
    /// Row range `[start, end)` of each sentence in the pooled arrays.
    pub sentence_ranges: Vec<(usize, usize)>,
}

impl ProbeDataset {
    pub fn build(traces: &[Trace], seqs: &[TokenSeq], tracked: &[String]) -> Result<Self> {
        if traces.len() != seqs.len() {
            return Err(Error::Probe(format!(
                "{} traces but {} annotated sentences",
                traces.len(),
                seqs.len()
            )));
        }
        if traces.is_empty() {
            return Err(Error::Probe("no traces to pool".into()));
        }
        let state_dim = traces[0].records.first().map_or(0, |r| r.context.len());
        if state_dim == 0 {
            return Err(Error::Probe("empty trace records".into()));
        }

        let mut total = 0usize;
        for (i, (trace, seq)) in traces.iter().zip(seqs).enumerate() {
            if trace.len() != seq.len() {
                return Err(Error::Probe(format!(
                    "sentence {i}: trace has {} steps but the annotation has {} tokens",
                    trace.len(),
                    seq.len()
                )));
            }
            if seq.classes.last() != Some(&TokenClass::Eos) {
                return Err(Error::Probe(format!(
                    "sentence {i} does not end with the EOS token"
                )));
            }
            total += trace.len() - 1;
        }

        let mut ds = ProbeDataset {
            state_dim,
            sentence: Vec::with_capacity(total),
            step: Vec::with_capacity(total),
            token: Vec::with_capacity(total),
            token_class: Vec::with_capacity(total),
            depth: Vec::with_capacity(total),
            tag_depth: tracked
                .iter()
                .map(|t| (t.clone(), Vec::with_capacity(total)))
                .collect(),
            inside: tracked
                .iter()
                .map(|t| (t.clone(), Vec::with_capacity(total)))
                .collect(),
            gold_pos: Vec::with_capacity(total),
            forget: Array2::zeros((total, state_dim)),
            update: Array2::zeros((total, state_dim)),
            context: Array2::zeros((total, state_dim)),
            output: Array2::zeros((total, state_dim)),
            sentence_ranges: Vec::with_capacity(traces.len()),
        };

        let mut row = 0usize;
        for (s_idx, (trace, seq)) in traces.iter().zip(seqs).enumerate() {
            let start = row;
            let per_tag: Vec<(&String, Vec<u32>)> =
                tracked.iter().map(|t| (t, seq.tag_depth_of(t))).collect();
            for t in 0..trace.len() - 1 {
                let rec = &trace.records[t];
                if rec.context.len() != state_dim {
                    return Err(Error::Probe("inconsistent trace dimensionality".into()));
                }
                ds.sentence.push(s_idx as u32);
                ds.step.push(t as u32);
                ds.token.push(trace.token_ids[t]);
                ds.token_class.push(seq.classes[t]);
                ds.depth.push(seq.depth_after[t] as f64);
                for (tag, depths) in &per_tag {
                    ds.tag_depth
                        .get_mut(*tag)
                        .expect("prefilled")
                        .push(depths[t] as f64);
                    ds.inside.get_mut(*tag).expect("prefilled").push(depths[t] > 0);
                }
                ds.gold_pos.push(seq.pos_of_token(t).map(str::to_string));
                for i in 0..state_dim {
                    ds.forget[[row, i]] = rec.forget[i] as f64;
                    ds.update[[row, i]] = rec.update[i] as f64;
                    ds.context[[row, i]] = rec.context[i] as f64;
                    ds.output[[row, i]] = rec.output[i] as f64;
                }
                row += 1;
            }
            ds.sentence_ranges.push((start, row));
        }
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.sentence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentence.is_empty()
    }

    pub fn vectors(&self, kind: VectorKind) -> &Array2<f64> {
        match kind {
            VectorKind::Forget => &self.forget,
            VectorKind::Update => &self.update,
            VectorKind::Context => &self.context,
            VectorKind::Output => &self.output,
        }
    }
}

/// Deterministic held-out split by sentence: every `every`-th distinct
/// sentence (in id order) goes to the second set. Returns row indices.
pub fn holdout_rows_by_sentence(sentence: &[u32], every: usize) -> (Vec<usize>, Vec<usize>) {
    let mut ids: Vec<u32> = sentence.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let held: std::collections::BTreeSet<u32> = ids
        .iter()
        .enumerate()
        .filter(|(rank, _)| every > 0 && (rank + 1) % every == 0)
        .map(|(_, &id)| id)
        .collect();
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (row, id) in sentence.iter().enumerate() {
        if held.contains(id) {
            test.push(row);
        } else {
            train.push(row);
        }
    }
    (train, test)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{annotate, linearize, parse_trees, Scenario};
    use crate::lstm::{DropoutConfig, ModelParams};

    fn build_small() -> ProbeDataset {
        let trees = parse_trees("(S (NP (DT a) (NN dog)) (VP (VBZ runs)))").unwrap();
        let seqs: Vec<_> = trees
            .iter()
            .map(|t| annotate(linearize(t, Scenario::ParenW), &["NP".into()]).unwrap())
            .collect();
        let params = ModelParams::init(20, 3, 4, 1);
        let traces: Vec<_> = seqs
            .iter()
            .map(|s| {
                let ids: Vec<u32> = (0..s.len() as u32).collect();
                params.forward(&ids, &DropoutConfig::disabled()).unwrap().1
            })
            .collect();
        ProbeDataset::build(&traces, &seqs, &["NP".into()]).unwrap()
    }

    #[test]
    fn pooling_drops_the_eos_step() {
        let ds = build_small();
        // ParenW: 6 nodes give 12 brackets, plus 3 words = 15 content tokens.
        let expected = 15;
        assert_eq!(ds.len(), expected);
        assert_eq!(ds.sentence_ranges, vec![(0, expected)]);
        assert!(ds.token_class.iter().all(|c| *c != TokenClass::Eos));
        assert_eq!(ds.tag_depth["NP"].len(), expected);
    }

    #[test]
    fn mismatched_lengths_are_rejected() {
        let trees = parse_trees("(S (NP (DT a) (NN dog)) (VP (VBZ runs)))").unwrap();
        let seqs: Vec<_> = trees.iter().map(|t| linearize(t, Scenario::Paren)).collect();
        let params = ModelParams::init(20, 3, 4, 1);
        let trace = params
            .forward(&[0, 1, 2], &DropoutConfig::disabled())
            .unwrap()
            .1;
        assert!(ProbeDataset::build(&[trace], &seqs, &[]).is_err());
    }

    #[test]
    fn holdout_split_separates_whole_sentences() {
        let sentence = vec![0, 0, 1, 1, 1, 2, 3, 3, 4, 4];
        let (train, test) = holdout_rows_by_sentence(&sentence, 5);
        // Sentence 4 is the fifth distinct id and is held out entirely.
        assert_eq!(test, vec![8, 9]);
        assert_eq!(train.len(), 8);
    }
}
