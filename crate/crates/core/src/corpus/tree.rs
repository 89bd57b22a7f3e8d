//! Bracketed constituency trees and a line-oriented reader for them.

use std::fmt;

use crate::error::{Error, Result};

/// A phrase-structure tree node. Leaves carry the surface word under a
/// preterminal tag, e.g. `(DT a)`; internal nodes carry one or more children.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxTree {
    pub tag: String,
    pub node: TreeNode,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeNode {
    Internal(Vec<SyntaxTree>),
    Leaf(String),
}

impl SyntaxTree {
    pub fn internal(tag: impl Into<String>, children: Vec<SyntaxTree>) -> Self {
        SyntaxTree {
            tag: tag.into(),
            node: TreeNode::Internal(children),
        }
    }

    pub fn leaf(tag: impl Into<String>, word: impl Into<String>) -> Self {
        SyntaxTree {
            tag: tag.into(),
            node: TreeNode::Leaf(word.into()),
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.node, TreeNode::Leaf(_))
    }

    pub fn children(&self) -> &[SyntaxTree] {
        match &self.node {
            TreeNode::Internal(c) => c,
            TreeNode::Leaf(_) => &[],
        }
    }

    pub fn word(&self) -> Option<&str> {
        match &self.node {
            TreeNode::Leaf(w) => Some(w),
            TreeNode::Internal(_) => None,
        }
    }

    /// Total node count, preterminal leaves included.
    pub fn node_count(&self) -> usize {
        1 + self.children().iter().map(|c| c.node_count()).sum::<usize>()
    }

    /// Number of leaf words.
    pub fn leaf_count(&self) -> usize {
        match &self.node {
            TreeNode::Leaf(_) => 1,
            TreeNode::Internal(c) => c.iter().map(|t| t.leaf_count()).sum(),
        }
    }

    /// Maximum phrase-nesting depth (root counts as 1).
    pub fn depth(&self) -> usize {
        1 + self
            .children()
            .iter()
            .map(|c| c.depth())
            .max()
            .unwrap_or(0)
    }

    /// Leaf words in order.
    pub fn words(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_words(&mut out);
        out
    }

    fn collect_words<'a>(&'a self, out: &mut Vec<&'a str>) {
        match &self.node {
            TreeNode::Leaf(w) => out.push(w),
            TreeNode::Internal(c) => c.iter().for_each(|t| t.collect_words(out)),
        }
    }

    /// (preterminal tag, word) pairs in order.
    pub fn tagged_words(&self) -> Vec<(&str, &str)> {
        let mut out = Vec::new();
        self.collect_tagged(&mut out);
        out
    }

    fn collect_tagged<'a>(&'a self, out: &mut Vec<(&'a str, &'a str)>) {
        match &self.node {
            TreeNode::Leaf(w) => out.push((&self.tag, w)),
            TreeNode::Internal(c) => c.iter().for_each(|t| t.collect_tagged(out)),
        }
    }
}

impl fmt::Display for SyntaxTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.node {
            TreeNode::Leaf(w) => write!(f, "({} {})", self.tag, w),
            TreeNode::Internal(children) => {
                write!(f, "({}", self.tag)?;
                for c in children {
                    write!(f, " {c}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Parse bracketed trees, one per line. Blank lines are skipped.
pub fn parse_trees(text: &str) -> Result<Vec<SyntaxTree>> {
    let mut trees = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        trees.push(parse_tree_line(line, line_no)?);
    }
    Ok(trees)
}

/// Parse a single bracketed tree from one line.
pub fn parse_tree_line(line: &str, line_no: usize) -> Result<SyntaxTree> {
    let toks = lex(line);
    let mut pos = 0;
    let tree = parse_node(&toks, &mut pos, line_no)?;
    if pos != toks.len() {
        return Err(Error::Parse {
            line: line_no,
            msg: format!("trailing input after tree: {:?}", toks[pos]),
        });
    }
    Ok(tree)
}

#[derive(Debug, Clone, PartialEq)]
enum Lexeme<'a> {
    Open,
    Close,
    Atom(&'a str),
}

fn lex(line: &str) -> Vec<Lexeme<'_>> {
    let mut out = Vec::new();
    let bytes = line.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'(' => {
                out.push(Lexeme::Open);
                i += 1;
            }
            b')' => {
                out.push(Lexeme::Close);
                i += 1;
            }
            c if c.is_ascii_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < bytes.len()
                    && bytes[i] != b'('
                    && bytes[i] != b')'
                    && !bytes[i].is_ascii_whitespace()
                {
                    i += 1;
                }
                out.push(Lexeme::Atom(&line[start..i]));
            }
        }
    }
    out
}

fn parse_node(toks: &[Lexeme<'_>], pos: &mut usize, line_no: usize) -> Result<SyntaxTree> {
    let err = |msg: String| Error::Parse { line: line_no, msg };
    match toks.get(*pos) {
        Some(Lexeme::Open) => *pos += 1,
        Some(other) => return Err(err(format!("expected '(' but found {other:?}"))),
        None => return Err(err("unbalanced parentheses: unexpected end of line".into())),
    }
    let tag = match toks.get(*pos) {
        Some(Lexeme::Atom(a)) => {
            *pos += 1;
            (*a).to_string()
        }
        Some(Lexeme::Close) => return Err(err("empty node".into())),
        Some(Lexeme::Open) => return Err(err("node is missing a tag".into())),
        None => return Err(err("unbalanced parentheses: unexpected end of line".into())),
    };

    let mut children = Vec::new();
    let mut word: Option<String> = None;
    loop {
        match toks.get(*pos) {
            Some(Lexeme::Close) => {
                *pos += 1;
                break;
            }
            Some(Lexeme::Open) => {
                if word.is_some() {
                    return Err(err(format!(
                        "node {tag:?} mixes a bare word with phrase children"
                    )));
                }
                children.push(parse_node(toks, pos, line_no)?);
            }
            Some(Lexeme::Atom(a)) => {
                if !children.is_empty() {
                    return Err(err(format!(
                        "node {tag:?} mixes a bare word with phrase children"
                    )));
                }
                if word.is_some() {
                    return Err(err(format!("leaf {tag:?} carries more than one word")));
                }
                word = Some((*a).to_string());
                *pos += 1;
            }
            None => {
                return Err(err("unbalanced parentheses: unexpected end of line".into()));
            }
        }
    }

    match (word, children.is_empty()) {
        (Some(w), true) => Ok(SyntaxTree::leaf(tag, w)),
        (None, false) => Ok(SyntaxTree::internal(tag, children)),
        (None, true) => Err(err(format!("empty node {tag:?}"))),
        (Some(_), false) => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_noun_phrase() {
        let trees = parse_trees("(NP (DT a) (NN dog))").unwrap();
        assert_eq!(trees.len(), 1);
        let t = &trees[0];
        assert_eq!(t.tag, "NP");
        assert_eq!(t.children().len(), 2);
        assert_eq!(t.children()[0], SyntaxTree::leaf("DT", "a"));
        assert_eq!(t.children()[1], SyntaxTree::leaf("NN", "dog"));
    }

    #[test]
    fn parses_nested_sentence() {
        let trees = parse_trees("(S (NP (DT a) (NN dog)) (VP (VBZ runs)))").unwrap();
        let t = &trees[0];
        assert_eq!(t.tag, "S");
        assert_eq!(t.children().len(), 2);
        assert_eq!(t.children()[1].tag, "VP");
    }

    #[test]
    fn unbalanced_line_reports_line_number() {
        let err = parse_trees("((NP (DT a))").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn empty_node_is_an_error() {
        assert!(parse_trees("(NP ())").is_err());
        assert!(parse_trees("()").is_err());
    }

    #[test]
    fn line_numbers_count_from_one() {
        let err = parse_trees("(NP (DT a))\n(NP (DT").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn display_round_trips() {
        let src = "(S (NP (DT a) (NN dog)) (VP (VBZ runs)))";
        let t = parse_tree_line(src, 1).unwrap();
        assert_eq!(t.to_string(), src);
        let reparsed = parse_tree_line(&t.to_string(), 1).unwrap();
        assert_eq!(reparsed, t);
    }

    #[test]
    fn whitespace_is_insignificant() {
        let a = parse_tree_line("(NP (DT a)   (NN  dog))", 1).unwrap();
        let b = parse_tree_line("(NP (DT a) (NN dog))", 1).unwrap();
        assert_eq!(a, b);
    }
}
