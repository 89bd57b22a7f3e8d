//! Probabilistic context-free grammar loading and seeded tree sampling.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::tree::SyntaxTree;
use crate::error::{Error, Result};

const PROB_TOL: f64 = 1e-9;

/// A PCFG with phrase rules (`LHS -> RHS... : p`) and a lexicon
/// (`POS => word : p`). The first rule's LHS is the start symbol.
#[derive(Debug, Clone)]
pub struct PcfgGrammar {
    start: String,
    rules: BTreeMap<String, Vec<(Vec<String>, f64)>>,
    lexicon: BTreeMap<String, Vec<(String, f64)>>,
}

/// Limits applied while sampling trees.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct GenLimits {
    /// Reject trees whose bracketed linearization (with words) exceeds this
    /// many tokens.
    pub max_len: usize,
    /// Reject trees nested deeper than this, when set.
    pub max_depth: Option<usize>,
}

impl Default for GenLimits {
    fn default() -> Self {
        GenLimits {
            max_len: 120,
            max_depth: None,
        }
    }
}

impl PcfgGrammar {
    /// Parse the text grammar format and validate it: probabilities per LHS
    /// must sum to one, every symbol must be defined, and the expected tree
    /// size must be finite (subcritical branching).
    pub fn parse(text: &str) -> Result<PcfgGrammar> {
        let mut start: Option<String> = None;
        let mut rules: BTreeMap<String, Vec<(Vec<String>, f64)>> = BTreeMap::new();
        let mut lexicon: BTreeMap<String, Vec<(String, f64)>> = BTreeMap::new();

        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |msg: String| Error::Parse { line: line_no, msg };

            let (lhs, rest, lexical) = if let Some((l, r)) = line.split_once("=>") {
                (l.trim(), r.trim(), true)
            } else if let Some((l, r)) = line.split_once("->") {
                (l.trim(), r.trim(), false)
            } else {
                return Err(parse_err("expected '->' or '=>'".into()));
            };
            if lhs.is_empty() || lhs.contains(char::is_whitespace) {
                return Err(parse_err(format!("bad left-hand side {lhs:?}")));
            }
            let (rhs, prob) = rest
                .rsplit_once(':')
                .ok_or_else(|| parse_err("missing ': prob'".into()))?;
            let prob: f64 = prob
                .trim()
                .parse()
                .map_err(|_| parse_err(format!("bad probability {:?}", prob.trim())))?;
            if !(prob > 0.0 && prob.is_finite()) {
                return Err(parse_err(format!("probability must be positive, got {prob}")));
            }
            let symbols: Vec<String> = rhs.split_whitespace().map(str::to_string).collect();
            if symbols.is_empty() {
                return Err(parse_err("empty right-hand side".into()));
            }

            if lexical {
                if symbols.len() != 1 {
                    return Err(parse_err("lexical rules emit exactly one word".into()));
                }
                lexicon
                    .entry(lhs.to_string())
                    .or_default()
                    .push((symbols.into_iter().next().unwrap(), prob));
            } else {
                if start.is_none() {
                    start = Some(lhs.to_string());
                }
                rules.entry(lhs.to_string()).or_default().push((symbols, prob));
            }
        }

        let start = start.ok_or_else(|| Error::Grammar("no phrase rules found".into()))?;
        let grammar = PcfgGrammar {
            start,
            rules,
            lexicon,
        };
        grammar.validate()?;
        Ok(grammar)
    }

    pub fn start(&self) -> &str {
        &self.start
    }

    pub fn nonterminals(&self) -> Vec<&str> {
        self.rules.keys().map(String::as_str).collect()
    }

    pub fn preterminals(&self) -> Vec<&str> {
        self.lexicon.keys().map(String::as_str).collect()
    }

    fn validate(&self) -> Result<()> {
        for (lhs, alts) in &self.rules {
            let total: f64 = alts.iter().map(|(_, p)| p).sum();
            if (total - 1.0).abs() > PROB_TOL {
                return Err(Error::Grammar(format!(
                    "rule probabilities for {lhs:?} sum to {total}, expected 1"
                )));
            }
            if self.lexicon.contains_key(lhs) {
                return Err(Error::Grammar(format!(
                    "{lhs:?} has both phrase and lexical rules"
                )));
            }
            for (rhs, _) in alts {
                for sym in rhs {
                    if !self.rules.contains_key(sym) && !self.lexicon.contains_key(sym) {
                        return Err(Error::Grammar(format!(
                            "undefined symbol {sym:?} in a rule for {lhs:?}"
                        )));
                    }
                }
            }
        }
        for (pos, words) in &self.lexicon {
            let total: f64 = words.iter().map(|(_, p)| p).sum();
            if (total - 1.0).abs() > PROB_TOL {
                return Err(Error::Grammar(format!(
                    "lexical probabilities for {pos:?} sum to {total}, expected 1"
                )));
            }
        }
        if !self.rules.contains_key(&self.start) {
            return Err(Error::Grammar(format!(
                "start symbol {:?} has no rules",
                self.start
            )));
        }

        let radius = self.branching_radius();
        if !(radius < 1.0 - 1e-6) {
            return Err(Error::Grammar(format!(
                "grammar is not subcritical (branching spectral radius {radius:.4} >= 1); \
                 expected tree size is infinite"
            )));
        }
        Ok(())
    }

    /// Spectral radius of the mean branching matrix M, where M[a][b] is the
    /// expected number of nonterminal b produced by one expansion of a.
    fn branching_radius(&self) -> f64 {
        let nts: Vec<&String> = self.rules.keys().collect();
        let index: BTreeMap<&str, usize> = nts
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        let n = nts.len();
        let mut m = vec![vec![0.0f64; n]; n];
        for (lhs, alts) in &self.rules {
            let row = index[lhs.as_str()];
            for (rhs, p) in alts {
                for sym in rhs {
                    if let Some(&col) = index.get(sym.as_str()) {
                        m[row][col] += p;
                    }
                }
            }
        }
        // Power iteration on a non-negative matrix.
        let mut v = vec![1.0f64; n];
        let mut radius = 0.0;
        for _ in 0..500 {
            let mut next = vec![0.0f64; n];
            for i in 0..n {
                for j in 0..n {
                    next[j] += v[i] * m[i][j];
                }
            }
            let norm: f64 = next.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            let prev = radius;
            radius = norm;
            v = next.iter().map(|x| x / norm).collect();
            if (radius - prev).abs() < 1e-12 {
                break;
            }
        }
        radius
    }

    fn sample_tree(&self, rng: &mut ChaCha8Rng, node_budget: &mut usize) -> Option<SyntaxTree> {
        self.sample_symbol(&self.start, rng, node_budget)
    }

    fn sample_symbol(
        &self,
        sym: &str,
        rng: &mut ChaCha8Rng,
        node_budget: &mut usize,
    ) -> Option<SyntaxTree> {
        if *node_budget == 0 {
            return None;
        }
        *node_budget -= 1;
        if let Some(words) = self.lexicon.get(sym) {
            let word = pick(words, rng);
            return Some(SyntaxTree::leaf(sym, word.clone()));
        }
        let alts = &self.rules[sym];
        let rhs = pick(alts, rng);
        let mut children = Vec::with_capacity(rhs.len());
        for child_sym in rhs {
            children.push(self.sample_symbol(child_sym, rng, node_budget)?);
        }
        Some(SyntaxTree::internal(sym, children))
    }
}

fn pick<'a, T>(alts: &'a [(T, f64)], rng: &mut ChaCha8Rng) -> &'a T {
    let draw: f64 = rng.random();
    let mut acc = 0.0;
    for (item, p) in alts {
        acc += p;
        if draw < acc {
            return item;
        }
    }
    &alts.last().expect("non-empty alternatives").0
}

/// Sample `n` trees from the grammar, deterministically for a given seed.
///
/// Trees whose bracketed-with-words linearization exceeds `limits.max_len`
/// tokens (or whose nesting exceeds `limits.max_depth`) are rejected and
/// redrawn. A rejection rate above 99% aborts with an error suggesting the
/// grammar be fixed.
pub fn gen_pcfg(
    grammar: &PcfgGrammar,
    n: usize,
    seed: u64,
    limits: GenLimits,
) -> Result<Vec<SyntaxTree>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trees = Vec::with_capacity(n);
    let mut attempts: u64 = 0;
    let min_attempts_before_check = (100 * n as u64).max(1000);

    while trees.len() < n {
        attempts += 1;
        // Budget bounds runaway recursion; such draws count as rejections.
        let mut node_budget = limits.max_len.saturating_mul(4).max(64);
        let tree = grammar.sample_tree(&mut rng, &mut node_budget);
        let accepted = tree.and_then(|t| {
            let token_len = 2 * t.node_count() + t.leaf_count() + 1;
            if token_len > limits.max_len {
                return None;
            }
            if let Some(cap) = limits.max_depth {
                if t.depth() > cap {
                    return None;
                }
            }
            Some(t)
        });
        if let Some(t) = accepted {
            trees.push(t);
        } else if attempts >= min_attempts_before_check
            && (trees.len() as f64) < 0.01 * attempts as f64
        {
            return Err(Error::Grammar(format!(
                "rejection rate above 99% ({} accepted of {attempts} draws); \
                 loosen the length/depth limits or reduce the grammar's recursion",
                trees.len()
            )));
        }
    }
    Ok(trees)
}

/// The grammar shipped with the toolkit: a small English-like fragment with
/// NP/VP/PP/SBAR recursion over a ~50-word lexicon. Two surface forms are
/// deliberately ambiguous across parts of speech ("saw" NN/VBD, "that"
/// DT/CIN).
pub const DEFAULT_GRAMMAR: &str = r#"
# phrase rules
S -> NP VP : 1.0

NP -> DT NN : 0.36
NP -> DT JJ NN : 0.18
NP -> DT NNS : 0.12
NP -> CD NNS : 0.06
NP -> PRP : 0.16
NP -> NP PP : 0.12

VP -> VBZ NP : 0.30
VP -> VBD NP : 0.22
VP -> MD VB NP : 0.12
VP -> VBZ RB : 0.06
VP -> VBD : 0.08
VP -> VP PP : 0.10
VP -> VBZ SBAR : 0.07
VP -> VBD SBAR : 0.05

PP -> IN NP : 1.0
SBAR -> CIN S : 1.0

# lexicon
DT => the : 0.45
DT => a : 0.30
DT => this : 0.10
DT => every : 0.08
DT => that : 0.07

JJ => big : 0.22
JJ => small : 0.20
JJ => red : 0.18
JJ => old : 0.16
JJ => young : 0.14
JJ => quick : 0.10

NN => dog : 0.16
NN => cat : 0.14
NN => bird : 0.12
NN => house : 0.12
NN => tree : 0.10
NN => car : 0.10
NN => man : 0.10
NN => woman : 0.08
NN => child : 0.06
NN => saw : 0.02

NNS => dogs : 0.30
NNS => cats : 0.25
NNS => birds : 0.20
NNS => houses : 0.15
NNS => trees : 0.10

PRP => he : 0.30
PRP => she : 0.30
PRP => they : 0.22
PRP => it : 0.18

VBZ => runs : 0.22
VBZ => walks : 0.20
VBZ => sees : 0.20
VBZ => eats : 0.20
VBZ => barks : 0.18

VBD => saw : 0.25
VBD => ran : 0.22
VBD => walked : 0.20
VBD => ate : 0.18
VBD => slept : 0.15

MD => will : 0.50
MD => can : 0.30
MD => may : 0.20

VB => run : 0.25
VB => walk : 0.25
VB => see : 0.25
VB => eat : 0.25

IN => in : 0.30
IN => on : 0.25
IN => with : 0.25
IN => near : 0.20

CIN => that : 0.85
CIN => whether : 0.15

RB => quickly : 0.40
RB => slowly : 0.35
RB => today : 0.25

CD => two : 0.40
CD => three : 0.35
CD => four : 0.25
"#;

pub fn default_grammar() -> PcfgGrammar {
    PcfgGrammar::parse(DEFAULT_GRAMMAR).expect("shipped grammar is valid")
}
