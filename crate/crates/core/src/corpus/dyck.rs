//! Seeded generator for balanced bracket (Dyck) corpora.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{TokenClass, TokenSeq, EOS_TOKEN};
use crate::error::{Error, Result};

const MAX_TOKENS: usize = 120;

/// Generate `n` balanced sequences over `k` bracket pairs (`k` is 1 or 2).
///
/// Each sequence is a random walk over open/close moves chosen uniformly
/// among the legal ones: depth may never go negative or exceed `max_depth`,
/// and at depth zero the walk either opens again or stops. Closing brackets
/// always match the innermost open type, so every sequence is well nested.
pub fn gen_dyck(k: usize, n: usize, max_depth: usize, seed: u64) -> Result<Vec<TokenSeq>> {
    if !(k == 1 || k == 2) {
        return Err(Error::invalid(format!("dyck order must be 1 or 2, got {k}")));
    }
    if max_depth < 1 {
        return Err(Error::invalid("max_depth must be at least 1"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        if let Some(seq) = sample_walk(k, max_depth, &mut rng) {
            out.push(seq);
        }
    }
    Ok(out)
}

fn sample_walk(k: usize, max_depth: usize, rng: &mut ChaCha8Rng) -> Option<TokenSeq> {
    let labels: Vec<String> = (1..=k).map(|i| i.to_string()).collect();
    let open_tok = |t: usize| {
        if k == 1 {
            "(".to_string()
        } else {
            format!("({}", labels[t])
        }
    };
    let close_tok = |t: usize| {
        if k == 1 {
            ")".to_string()
        } else {
            format!("{})", labels[t])
        }
    };

    let mut tokens = Vec::new();
    let mut classes = Vec::new();
    let mut paths = Vec::new();
    let mut stack: Vec<u16> = Vec::new();

    loop {
        let depth = stack.len();
        let can_open = depth < max_depth;
        let can_close = depth > 0;
        let can_stop = depth == 0 && !tokens.is_empty();

        let mut moves = Vec::with_capacity(3);
        if can_open {
            moves.push(0u8);
        }
        if can_close {
            moves.push(1);
        }
        if can_stop {
            moves.push(2);
        }
        match moves[rng.random_range(0..moves.len())] {
            0 => {
                let t = if k == 1 { 0 } else { rng.random_range(0..k) };
                stack.push(t as u16);
                tokens.push(open_tok(t));
                classes.push(TokenClass::Bop);
                paths.push(stack.clone());
            }
            1 => {
                let t = stack.pop().expect("close requires an open bracket") as usize;
                tokens.push(close_tok(t));
                classes.push(TokenClass::Eop);
                paths.push(stack.clone());
            }
            _ => break,
        }
        if tokens.len() > MAX_TOKENS {
            return None; // redraw overly long walks
        }
    }

    tokens.push(EOS_TOKEN.to_string());
    classes.push(TokenClass::Eos);
    paths.push(Vec::new());
    Some(TokenSeq::from_parts(tokens, classes, labels, paths))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::annotate;

    /// Reference acceptor: a plain stack over the bracket tokens.
    fn accepts(seq: &TokenSeq, k: usize) -> bool {
        let mut stack: Vec<String> = Vec::new();
        for tok in &seq.tokens {
            if tok == EOS_TOKEN {
                continue;
            }
            if tok == "(" || tok.starts_with('(') {
                let label = tok.trim_start_matches('(').to_string();
                if k == 1 && !label.is_empty() {
                    return false;
                }
                stack.push(label);
            } else if tok == ")" || tok.ends_with(')') {
                let label = tok.trim_end_matches(')');
                match stack.pop() {
                    Some(top) if top == label => {}
                    _ => return false,
                }
            } else {
                return false;
            }
        }
        stack.is_empty()
    }

    #[test]
    fn dyck1_is_always_accepted_and_balanced() {
        let seqs = gen_dyck(1, 200, 8, 3).unwrap();
        for seq in &seqs {
            assert!(accepts(seq, 1));
            let seq = annotate(seq.clone(), &[]).unwrap();
            let n = seq.len();
            assert_eq!(seq.depth_after[n - 2], 0);
            assert!(seq.depth_after.iter().all(|&d| d <= 8));
        }
    }

    #[test]
    fn dyck2_is_well_nested() {
        let seqs = gen_dyck(2, 200, 6, 9).unwrap();
        let mut saw_both = false;
        for seq in &seqs {
            assert!(accepts(seq, 2));
            if seq.tokens.iter().any(|t| t == "(1") && seq.tokens.iter().any(|t| t == "(2") {
                saw_both = true;
            }
        }
        assert!(saw_both, "expected both bracket types to appear");
    }

    #[test]
    fn generation_is_deterministic() {
        let a = gen_dyck(2, 50, 6, 1234).unwrap();
        let b = gen_dyck(2, 50, 6, 1234).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_parameters_error() {
        assert!(gen_dyck(3, 1, 4, 0).is_err());
        assert!(gen_dyck(1, 1, 0, 0).is_err());
    }
}
