//! Capped vocabulary with part-of-speech backoff for infrequent words.

use std::collections::{BTreeMap, HashMap};

use super::{TokenClass, TokenSeq, EOS_TOKEN};
use crate::error::{Error, Result};

/// Token table for a corpus. Ids are dense; id 0 is always [`EOS_TOKEN`].
///
/// Auxiliary tokens (phrase brackets) and the part-of-speech labels of the
/// corpus words are reserved up front, so a word dropped for frequency can
/// always back off to its label within the configured cap.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocab {
    id_to_token: Vec<String>,
    token_to_id: HashMap<String, u32>,
    counts: Vec<u64>,
    backoff: BTreeMap<String, String>,
}

impl Vocab {
    pub fn size(&self) -> usize {
        self.id_to_token.len()
    }

    /// Vocabulary size excluding the reserved end-of-sentence id.
    pub fn size_without_reserved(&self) -> usize {
        self.id_to_token.len() - 1
    }

    pub fn eos_id(&self) -> u32 {
        0
    }

    pub fn decode(&self, id: u32) -> &str {
        &self.id_to_token[id as usize]
    }

    /// Encode a token, applying part-of-speech backoff for dropped words.
    pub fn encode(&self, token: &str) -> Result<u32> {
        if let Some(&id) = self.token_to_id.get(token) {
            return Ok(id);
        }
        if let Some(pos) = self.backoff.get(token) {
            if let Some(&id) = self.token_to_id.get(pos) {
                return Ok(id);
            }
        }
        Err(Error::Vocab(format!(
            "token {token:?} is not in the vocabulary and has no backoff label"
        )))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.token_to_id.contains_key(token)
    }

    pub fn count(&self, id: u32) -> u64 {
        self.counts[id as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.id_to_token
    }

    pub fn encode_seq(&self, seq: &TokenSeq) -> Result<Vec<u32>> {
        seq.tokens.iter().map(|t| self.encode(t)).collect()
    }

    /// Serialize as TSV `token<TAB>id<TAB>count`, sorted by id.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (id, token) in self.id_to_token.iter().enumerate() {
            out.push_str(&format!("{token}\t{id}\t{}\n", self.counts[id]));
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Vocab> {
        let mut id_to_token = Vec::new();
        let mut counts = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split('\t');
            let (token, id, count) = (parts.next(), parts.next(), parts.next());
            let (token, id, count) = match (token, id, count) {
                (Some(t), Some(i), Some(c)) => (t, i, c),
                _ => {
                    return Err(Error::Parse {
                        line: i + 1,
                        msg: "expected token<TAB>id<TAB>count".into(),
                    })
                }
            };
            let id: usize = id.parse().map_err(|_| Error::Parse {
                line: i + 1,
                msg: format!("bad id {id:?}"),
            })?;
            if id != id_to_token.len() {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("ids must be dense and sorted; expected {}", id_to_token.len()),
                });
            }
            let count: u64 = count.parse().map_err(|_| Error::Parse {
                line: i + 1,
                msg: format!("bad count {count:?}"),
            })?;
            id_to_token.push(token.to_string());
            counts.push(count);
        }
        if id_to_token.first().map(String::as_str) != Some(EOS_TOKEN) {
            return Err(Error::Vocab(format!("id 0 must be {EOS_TOKEN:?}")));
        }
        let token_to_id = id_to_token
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Ok(Vocab {
            id_to_token,
            token_to_id,
            counts,
            backoff: BTreeMap::new(),
        })
    }

    /// Attach a word-to-label backoff map (it is not stored in the TSV form).
    pub fn with_backoff(mut self, backoff: BTreeMap<String, String>) -> Vocab {
        self.backoff = backoff;
        self
    }

    pub fn backoff(&self) -> &BTreeMap<String, String> {
        &self.backoff
    }
}

/// Build a vocabulary over the corpus with at most `cap` entries.
///
/// Reserved first: the end-of-sentence token, every auxiliary bracket token,
/// and the part-of-speech labels of the corpus words (backoff targets). The
/// remaining slots go to words by descending frequency; everything else
/// encodes through `pos_of`.
pub fn build_vocab(
    seqs: &[TokenSeq],
    cap: usize,
    pos_of: &BTreeMap<String, String>,
) -> Result<Vocab> {
    let mut word_counts: BTreeMap<&str, u64> = BTreeMap::new();
    let mut aux_counts: BTreeMap<&str, u64> = BTreeMap::new();
    let mut eos_count: u64 = 0;

    for seq in seqs {
        for (token, class) in seq.tokens.iter().zip(&seq.classes) {
            match class {
                TokenClass::Eos => eos_count += 1,
                TokenClass::Bop | TokenClass::Eop => {
                    *aux_counts.entry(token.as_str()).or_default() += 1
                }
                TokenClass::Word => *word_counts.entry(token.as_str()).or_default() += 1,
            }
        }
    }

    // Backoff labels are reserved only for labels some corpus word maps to.
    let mut label_set: Vec<&str> = word_counts
        .keys()
        .filter_map(|w| pos_of.get(*w).map(String::as_str))
        .collect();
    label_set.sort_unstable();
    label_set.dedup();

    let mut id_to_token: Vec<String> = vec![EOS_TOKEN.to_string()];
    let mut counts: Vec<u64> = vec![eos_count];
    for (tok, count) in &aux_counts {
        id_to_token.push(tok.to_string());
        counts.push(*count);
    }
    for label in &label_set {
        if aux_counts.contains_key(label) {
            continue;
        }
        id_to_token.push(label.to_string());
        counts.push(word_counts.get(label).copied().unwrap_or(0));
    }

    if id_to_token.len() > cap {
        return Err(Error::Vocab(format!(
            "cap {cap} cannot hold the {} reserved tokens (EOS, brackets, backoff labels)",
            id_to_token.len()
        )));
    }

    // Fill the remaining slots with words, most frequent first.
    let mut ranked: Vec<(&str, u64)> = word_counts
        .iter()
        .map(|(w, c)| (*w, *c))
        .filter(|(w, _)| !id_to_token.iter().any(|t| t == w))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));

    let slots = cap - id_to_token.len();
    let mut backoff = BTreeMap::new();
    for (i, (word, count)) in ranked.iter().enumerate() {
        if i < slots {
            id_to_token.push(word.to_string());
            counts.push(*count);
        } else {
            let pos = pos_of.get(*word).ok_or_else(|| {
                Error::Vocab(format!(
                    "word {word:?} exceeds the cap and has no part-of-speech backoff"
                ))
            })?;
            backoff.insert(word.to_string(), pos.clone());
            // Fold the dropped word's occurrences into its label's count.
            let label_id = id_to_token.iter().position(|t| t == pos).expect("reserved");
            counts[label_id] += count;
        }
    }

    let token_to_id = id_to_token
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i as u32))
        .collect();

    Ok(Vocab {
        id_to_token,
        token_to_id,
        counts,
        backoff,
    })
}

/// Derive the majority part-of-speech label for every word in the corpus,
/// from the preterminal recorded over each word token. Ties break on the
/// lexicographically smaller label.
pub fn pos_map_from_seqs(seqs: &[TokenSeq]) -> BTreeMap<String, String> {
    let mut per_word: BTreeMap<&str, BTreeMap<&str, u64>> = BTreeMap::new();
    for seq in seqs {
        for idx in 0..seq.len() {
            if let Some(pos) = seq.pos_of_token(idx) {
                *per_word
                    .entry(seq.tokens[idx].as_str())
                    .or_default()
                    .entry(pos)
                    .or_default() += 1;
            }
        }
    }
    per_word
        .into_iter()
        .map(|(word, tally)| {
            let best = tally
                .into_iter()
                .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(a.0)))
                .expect("non-empty tally");
            (word.to_string(), best.0.to_string())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{linearize, parse_trees, Scenario};

    fn paren_corpus() -> Vec<TokenSeq> {
        let trees = parse_trees("(S (NP (DT a) (NN dog)) (VP (VBZ runs)))\n(NP (DT a))").unwrap();
        trees
            .iter()
            .map(|t| linearize(t, Scenario::Paren))
            .collect()
    }

    #[test]
    fn paren_vocab_is_two_plus_eos() {
        let v = build_vocab(&paren_corpus(), 10, &BTreeMap::new()).unwrap();
        assert_eq!(v.size(), 3);
        assert_eq!(v.size_without_reserved(), 2);
        assert_eq!(v.decode(0), EOS_TOKEN);
        assert!(v.contains("(") && v.contains(")"));
    }

    #[test]
    fn infrequent_word_backs_off_to_its_label() {
        // words scenario: a x100, dog x1; reserved = {<eos>, DT, NN} leaves one
        // slot under cap 4, so "dog" is dropped and encodes as "NN".
        let mut text = String::new();
        for _ in 0..100 {
            text.push_str("(S (DT a))\n");
        }
        text.push_str("(S (NN dog))\n");
        let trees = parse_trees(&text).unwrap();
        let seqs: Vec<TokenSeq> = trees.iter().map(|t| linearize(t, Scenario::Words)).collect();
        let pos = pos_map_from_seqs(&seqs);
        assert_eq!(pos["dog"], "NN");

        let v = build_vocab(&seqs, 4, &pos).unwrap();
        assert_eq!(v.size(), 4);
        assert!(v.contains("a"));
        assert!(!v.contains("dog"));
        assert_eq!(v.encode("dog").unwrap(), v.encode("NN").unwrap());
        // The label's count absorbs the dropped word's occurrences.
        assert_eq!(v.count(v.encode("NN").unwrap()), 1);
    }

    #[test]
    fn large_cap_keeps_every_word() {
        let trees = parse_trees("(S (DT the) (NN dog) (VBZ runs))").unwrap();
        let seqs: Vec<TokenSeq> = trees.iter().map(|t| linearize(t, Scenario::Words)).collect();
        let pos = pos_map_from_seqs(&seqs);
        let v = build_vocab(&seqs, 100, &pos).unwrap();
        for w in ["the", "dog", "runs"] {
            assert_eq!(v.decode(v.encode(w).unwrap()), w);
        }
        assert!(v.backoff().is_empty());
    }

    #[test]
    fn cap_below_reserved_tokens_errors() {
        let err = build_vocab(&paren_corpus(), 2, &BTreeMap::new()).unwrap_err();
        assert!(err.to_string().contains("reserved"));
    }

    #[test]
    fn tsv_round_trip() {
        let v = build_vocab(&paren_corpus(), 10, &BTreeMap::new()).unwrap();
        let tsv = v.to_tsv();
        let w = Vocab::from_tsv(&tsv).unwrap();
        assert_eq!(w.to_tsv(), tsv);
        assert_eq!(w.size(), v.size());
    }

    #[test]
    fn encode_is_total_after_backoff() {
        let mut text = String::new();
        for _ in 0..5 {
            text.push_str("(S (DT the) (NN dog))\n");
        }
        text.push_str("(S (DT the) (NN cat))\n");
        let trees = parse_trees(&text).unwrap();
        let seqs: Vec<TokenSeq> =
            trees.iter().map(|t| linearize(t, Scenario::TagW)).collect();
        let pos = pos_map_from_seqs(&seqs);
        // Reserved: eos + 6 brackets + DT + NN = 9; cap 10 keeps only "the".
        let v = build_vocab(&seqs, 10, &pos).unwrap();
        for seq in &seqs {
            assert!(v.encode_seq(seq).is_ok());
        }
    }
}
