//! Tree-to-token conversion for the five corpus scenarios.

use std::collections::BTreeMap;

use super::tree::{SyntaxTree, TreeNode};
use super::{Scenario, TokenClass, TokenSeq, EOS_TOKEN};

/// Convert a tree into a token sequence under the given scenario.
///
/// Every tree node contributes an opening and a closing token in the
/// bracketed scenarios (`(` / `)` bare, or `(T` / `T)` tagged); word-bearing
/// scenarios keep the leaf words between the brackets of their preterminal.
/// `Words` emits the leaf words alone. The sequence always ends with
/// [`EOS_TOKEN`]. Structural annotations are taken from the tree for every
/// scenario, so `Words` sequences stay fully annotated despite having no
/// bracket tokens.
pub fn linearize(tree: &SyntaxTree, scenario: Scenario) -> TokenSeq {
    let mut b = Builder {
        scenario,
        tokens: Vec::new(),
        classes: Vec::new(),
        paths: Vec::new(),
        labels: Vec::new(),
        label_ids: BTreeMap::new(),
        stack: Vec::new(),
    };
    b.walk(tree);
    b.push(EOS_TOKEN.to_string(), TokenClass::Eos);
    TokenSeq::from_parts(b.tokens, b.classes, b.labels, b.paths)
}

struct Builder {
    scenario: Scenario,
    tokens: Vec<String>,
    classes: Vec<TokenClass>,
    paths: Vec<Vec<u16>>,
    labels: Vec<String>,
    label_ids: BTreeMap<String, u16>,
    stack: Vec<u16>,
}

impl Builder {
    fn intern(&mut self, label: &str) -> u16 {
        if let Some(&id) = self.label_ids.get(label) {
            return id;
        }
        let id = self.labels.len() as u16;
        self.labels.push(label.to_string());
        self.label_ids.insert(label.to_string(), id);
        id
    }

    fn push(&mut self, token: String, class: TokenClass) {
        self.tokens.push(token);
        self.classes.push(class);
        self.paths.push(self.stack.clone());
    }

    fn walk(&mut self, node: &SyntaxTree) {
        let label = self.intern(&node.tag);
        self.stack.push(label);

        match self.scenario {
            Scenario::Paren | Scenario::ParenW => self.push("(".to_string(), TokenClass::Bop),
            Scenario::Tag | Scenario::TagW => {
                self.push(format!("({}", node.tag), TokenClass::Bop)
            }
            Scenario::Words => {}
        }

        match &node.node {
            TreeNode::Leaf(word) => {
                if self.scenario.keeps_words() {
                    self.push(word.clone(), TokenClass::Word);
                }
            }
            TreeNode::Internal(children) => {
                for child in children {
                    self.walk(child);
                }
            }
        }

        self.stack.pop();
        match self.scenario {
            Scenario::Paren | Scenario::ParenW => self.push(")".to_string(), TokenClass::Eop),
            Scenario::Tag | Scenario::TagW => {
                self.push(format!("{})", node.tag), TokenClass::Eop)
            }
            Scenario::Words => {}
        }
    }
}
