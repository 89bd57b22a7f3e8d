//! Corpus handling: tree parsing, linearization scenarios, synthetic
//! generators, depth/phrase annotation, and vocabulary construction.

pub mod dyck;
pub mod linearize;
pub mod pcfg;
pub mod tree;
pub mod vocab;

pub use dyck::gen_dyck;
pub use linearize::linearize;
pub use pcfg::{gen_pcfg, PcfgGrammar};
pub use tree::{parse_trees, SyntaxTree, TreeNode};
pub use vocab::{build_vocab, pos_map_from_seqs, Vocab};

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// The end-of-sentence token appended to every linearized sequence.
pub const EOS_TOKEN: &str = "<eos>";

/// How a tree is turned into a token sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Bare `(` / `)` per node, words dropped.
    Paren,
    /// `(` / `)` per node, leaf words kept.
    ParenW,
    /// `(T` / `T)` per node, words dropped.
    Tag,
    /// `(T` / `T)` per node, leaf words kept.
    TagW,
    /// Leaf words only.
    Words,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::Paren,
        Scenario::ParenW,
        Scenario::Tag,
        Scenario::TagW,
        Scenario::Words,
    ];

    pub fn keeps_words(self) -> bool {
        matches!(self, Scenario::ParenW | Scenario::TagW | Scenario::Words)
    }

    pub fn has_brackets(self) -> bool {
        !matches!(self, Scenario::Words)
    }

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Paren => "paren",
            Scenario::ParenW => "paren_w",
            Scenario::Tag => "tag",
            Scenario::TagW => "tag_w",
            Scenario::Words => "words",
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "paren" => Ok(Scenario::Paren),
            "paren_w" | "parenw" | "paren+w" => Ok(Scenario::ParenW),
            "tag" => Ok(Scenario::Tag),
            "tag_w" | "tagw" | "tag+w" => Ok(Scenario::TagW),
            "words" => Ok(Scenario::Words),
            other => Err(Error::invalid(format!("unknown scenario {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum TokenClass {
    Bop,
    Eop,
    Eos,
    Word,
}

/// Classify a token by its surface shape: `(`-initial tokens open a phrase,
/// `)`-final tokens close one, [`EOS_TOKEN`] ends the sentence.
pub fn classify_token(token: &str) -> TokenClass {
    if token == EOS_TOKEN {
        TokenClass::Eos
    } else if token.starts_with('(') {
        TokenClass::Bop
    } else if token.ends_with(')') {
        TokenClass::Eop
    } else {
        TokenClass::Word
    }
}

/// A linearized sentence plus gold structural annotations.
///
/// `paths[t]` is the stack of open phrase labels after consuming token `t`
/// (label-table indices into `labels`). It is the provenance for every
/// depth/phrase annotation, and for the `Words` scenario it is the only
/// carrier of bracketing information, since the tokens have none.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenSeq {
    pub tokens: Vec<String>,
    pub classes: Vec<TokenClass>,
    pub labels: Vec<String>,
    pub paths: Vec<Vec<u16>>,
    pub depth_after: Vec<u32>,
    pub tag_depth: BTreeMap<String, Vec<u32>>,
    pub inside: BTreeMap<String, Vec<bool>>,
}

impl TokenSeq {
    pub(crate) fn from_parts(
        tokens: Vec<String>,
        classes: Vec<TokenClass>,
        labels: Vec<String>,
        paths: Vec<Vec<u16>>,
    ) -> Self {
        let depth_after = paths.iter().map(|p| p.len() as u32).collect();
        TokenSeq {
            tokens,
            classes,
            labels,
            paths,
            depth_after,
            tag_depth: BTreeMap::new(),
            inside: BTreeMap::new(),
        }
    }

    /// Reconstruct a sequence from bare tokens (no tree available).
    ///
    /// Bracket structure is recovered from token shapes; a closing token with
    /// no matching open is a malformed-sequence error. The sequence must not
    /// yet contain [`EOS_TOKEN`]; it is appended here.
    pub fn from_tokens<S: AsRef<str>>(tokens: &[S]) -> Result<Self> {
        let mut labels: Vec<String> = Vec::new();
        let mut label_ids: BTreeMap<String, u16> = BTreeMap::new();
        let mut intern = |name: &str, labels: &mut Vec<String>| -> u16 {
            *label_ids.entry(name.to_string()).or_insert_with(|| {
                labels.push(name.to_string());
                (labels.len() - 1) as u16
            })
        };

        let mut out_tokens = Vec::with_capacity(tokens.len() + 1);
        let mut classes = Vec::with_capacity(tokens.len() + 1);
        let mut paths = Vec::with_capacity(tokens.len() + 1);
        let mut stack: Vec<u16> = Vec::new();

        for (i, tok) in tokens.iter().enumerate() {
            let tok = tok.as_ref();
            if tok == EOS_TOKEN {
                return Err(Error::invalid(format!(
                    "token {i} is the reserved end-of-sentence token"
                )));
            }
            let class = classify_token(tok);
            match class {
                TokenClass::Bop => {
                    let label = tok.trim_start_matches('(');
                    stack.push(intern(label, &mut labels));
                }
                TokenClass::Eop => {
                    let label = tok.trim_end_matches(')');
                    let top = stack.pop().ok_or_else(|| {
                        Error::invalid(format!(
                            "malformed sequence: depth would go negative at token {i} ({tok:?})"
                        ))
                    })?;
                    // Bare parens carry no label; labeled closers must match.
                    if !label.is_empty() && labels[top as usize] != label {
                        return Err(Error::invalid(format!(
                            "malformed sequence: token {i} closes {:?} but {:?} is open",
                            label, labels[top as usize]
                        )));
                    }
                }
                TokenClass::Word | TokenClass::Eos => {}
            }
            out_tokens.push(tok.to_string());
            classes.push(class);
            paths.push(stack.clone());
        }

        out_tokens.push(EOS_TOKEN.to_string());
        classes.push(TokenClass::Eos);
        paths.push(stack.clone());

        Ok(TokenSeq::from_parts(out_tokens, classes, labels, paths))
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    fn label_id(&self, label: &str) -> Option<u16> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| i as u16)
    }

    /// Nesting depth restricted to one label, per token.
    pub fn tag_depth_of(&self, label: &str) -> Vec<u32> {
        match self.label_id(label) {
            None => vec![0; self.len()],
            Some(id) => self
                .paths
                .iter()
                .map(|p| p.iter().filter(|&&l| l == id).count() as u32)
                .collect(),
        }
    }

    /// The preterminal tag over a word token, if any.
    pub fn pos_of_token(&self, idx: usize) -> Option<&str> {
        if self.classes[idx] != TokenClass::Word {
            return None;
        }
        self.paths[idx]
            .last()
            .map(|&l| self.labels[l as usize].as_str())
    }
}

/// Fill `depth_after`, `tag_depth` and `inside` for the tracked labels.
///
/// Depth conventions: an opening token counts at its own position and a
/// closing token is already outside the phrase it closes, so the final
/// non-EOS token of a fully bracketed sequence sits at depth 0.
pub fn annotate(mut seq: TokenSeq, tracked_tags: &[String]) -> Result<TokenSeq> {
    // Validate the bracket balance recorded in the classes; a hand-built
    // sequence can be inconsistent even though tree-derived ones never are.
    let mut balance: i64 = 0;
    for (i, class) in seq.classes.iter().enumerate() {
        match class {
            TokenClass::Bop => balance += 1,
            TokenClass::Eop => {
                balance -= 1;
                if balance < 0 {
                    return Err(Error::invalid(format!(
                        "malformed sequence: depth would go negative at token {i}"
                    )));
                }
            }
            _ => {}
        }
    }

    seq.depth_after = seq.paths.iter().map(|p| p.len() as u32).collect();
    seq.tag_depth.clear();
    seq.inside.clear();
    for tag in tracked_tags {
        let depths = seq.tag_depth_of(tag);
        let inside = depths.iter().map(|&d| d > 0).collect();
        seq.tag_depth.insert(tag.clone(), depths);
        seq.inside.insert(tag.clone(), inside);
    }
    Ok(seq)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn running_balance_of_bare_parens() {
        let seq = TokenSeq::from_tokens(&["(", "(", ")", "(", ")", ")"]).unwrap();
        let seq = annotate(seq, &[]).unwrap();
        assert_eq!(seq.depth_after, vec![1, 2, 1, 2, 1, 0, 0]); // trailing EOS
        assert_eq!(seq.classes.last(), Some(&TokenClass::Eos));
    }

    #[test]
    fn tag_depth_and_inside_for_tracked_label() {
        let seq = TokenSeq::from_tokens(&["(NP", "(DT", "DT)", "NP)"]).unwrap();
        let seq = annotate(seq, &["NP".to_string()]).unwrap();
        // The closing token is already outside the phrase it closes.
        assert_eq!(seq.tag_depth["NP"], vec![1, 1, 1, 0, 0]);
        assert_eq!(seq.inside["NP"], vec![true, true, true, false, false]);
        assert_eq!(seq.depth_after, vec![1, 2, 1, 0, 0]);
    }

    #[test]
    fn negative_depth_is_rejected() {
        let err = TokenSeq::from_tokens(&["(", ")", ")"]).unwrap_err();
        assert!(err.to_string().contains("negative"));
    }

    #[test]
    fn mismatched_label_close_is_rejected() {
        assert!(TokenSeq::from_tokens(&["(NP", "VP)"]).is_err());
    }

    #[test]
    fn classify_by_shape() {
        assert_eq!(classify_token("("), TokenClass::Bop);
        assert_eq!(classify_token("(NP"), TokenClass::Bop);
        assert_eq!(classify_token(")"), TokenClass::Eop);
        assert_eq!(classify_token("NP)"), TokenClass::Eop);
        assert_eq!(classify_token("dog"), TokenClass::Word);
        assert_eq!(classify_token(EOS_TOKEN), TokenClass::Eos);
    }

    #[test]
    fn untracked_label_reads_as_zero_depth() {
        let seq = TokenSeq::from_tokens(&["(NP", "NP)"]).unwrap();
        assert_eq!(seq.tag_depth_of("VP"), vec![0, 0, 0]);
    }
}
