//! File formats: tree and token files, annotation sidecars, vocabularies,
//! gate-trace binaries, and run manifests.

pub mod trace_file;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{classify_token, parse_trees, SyntaxTree, TokenClass, TokenSeq, EOS_TOKEN};
use crate::error::{Error, Result};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}

pub fn read_tree_file(path: &Path) -> Result<Vec<SyntaxTree>> {
    let text = fs::read_to_string(path)?;
    parse_trees(&text)
}

pub fn write_tree_file(path: &Path, trees: &[SyntaxTree]) -> Result<()> {
    let mut out = String::new();
    for t in trees {
        out.push_str(&t.to_string());
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Write one sentence per line, space-separated, without the EOS token.
pub fn write_token_file(path: &Path, seqs: &[TokenSeq]) -> Result<()> {
    let mut out = String::new();
    for seq in seqs {
        let n = seq.len();
        let end = if seq.classes.last() == Some(&TokenClass::Eos) {
            n - 1
        } else {
            n
        };
        out.push_str(&seq.tokens[..end].join(" "));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Load a token file. Bracket structure is reconstructed from token shapes
/// and the EOS token is appended to every sentence.
pub fn read_token_file(path: &Path) -> Result<Vec<TokenSeq>> {
    let text = fs::read_to_string(path)?;
    let mut seqs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let seq = TokenSeq::from_tokens(&tokens).map_err(|e| Error::Parse {
            line: i + 1,
            msg: e.to_string(),
        })?;
        seqs.push(seq);
    }
    Ok(seqs)
}

/// One sidecar line per sentence: the label table and the per-token stack of
/// open phrase labels. Together with the token file this restores full
/// annotations, including for the Words scenario where the tokens alone
/// carry no bracketing.
#[derive(Debug, Serialize, Deserialize)]
struct AnnotationLine {
    labels: Vec<String>,
    paths: Vec<Vec<u16>>,
}

pub fn write_annotations(path: &Path, seqs: &[TokenSeq]) -> Result<()> {
    let mut out = String::new();
    for seq in seqs {
        let line = AnnotationLine {
            labels: seq.labels.clone(),
            paths: seq.paths.clone(),
        };
        out.push_str(&serde_json::to_string(&line)?);
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Load a token file together with its annotation sidecar.
pub fn read_token_file_with_annotations(
    tokens_path: &Path,
    annotations_path: &Path,
) -> Result<Vec<TokenSeq>> {
    let token_text = fs::read_to_string(tokens_path)?;
    let ann_text = fs::read_to_string(annotations_path)?;
    let token_lines: Vec<&str> = token_text.lines().filter(|l| !l.trim().is_empty()).collect();
    let ann_lines: Vec<&str> = ann_text.lines().filter(|l| !l.trim().is_empty()).collect();
    if token_lines.len() != ann_lines.len() {
        return Err(Error::invalid(format!(
            "{} token lines but {} annotation lines",
            token_lines.len(),
            ann_lines.len()
        )));
    }

    let mut seqs = Vec::with_capacity(token_lines.len());
    for (i, (tok_line, ann_line)) in token_lines.iter().zip(&ann_lines).enumerate() {
        let ann: AnnotationLine = serde_json::from_str(ann_line).map_err(|e| Error::Parse {
            line: i + 1,
            msg: format!("bad annotation line: {e}"),
        })?;
        let mut tokens: Vec<String> =
            tok_line.split_whitespace().map(str::to_string).collect();
        tokens.push(EOS_TOKEN.to_string());
        if tokens.len() != ann.paths.len() {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!(
                    "annotation has {} paths but the sentence has {} tokens (with EOS)",
                    ann.paths.len(),
                    tokens.len()
                ),
            });
        }
        let classes: Vec<TokenClass> = tokens.iter().map(|t| classify_token(t)).collect();
        for path in &ann.paths {
            if path.iter().any(|&l| l as usize >= ann.labels.len()) {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: "annotation path references an undefined label".into(),
                });
            }
        }
        seqs.push(TokenSeq::from_parts(tokens, classes, ann.labels, ann.paths));
    }
    Ok(seqs)
}

/// A manifest line recording one produced file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub sha256: String,
    pub config_sha256: String,
    pub seed: u64,
}

pub const MANIFEST_NAME: &str = "MANIFEST.ndjson";

/// Appends a digest line for every file an operation produces.
pub struct ManifestWriter {
    dir: PathBuf,
    config_sha256: String,
    seed: u64,
}

impl ManifestWriter {
    pub fn new(dir: &Path, config_sha256: impl Into<String>, seed: u64) -> Self {
        ManifestWriter {
            dir: dir.to_path_buf(),
            config_sha256: config_sha256.into(),
            seed,
        }
    }

    pub fn record(&self, file: &Path) -> Result<ManifestEntry> {
        let entry = ManifestEntry {
            file: file
                .strip_prefix(&self.dir)
                .unwrap_or(file)
                .to_string_lossy()
                .into_owned(),
            sha256: file_sha256(file)?,
            config_sha256: self.config_sha256.clone(),
            seed: self.seed,
        };
        let mut f = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.dir.join(MANIFEST_NAME))?;
        writeln!(f, "{}", serde_json::to_string(&entry)?)?;
        Ok(entry)
    }
}

pub fn read_manifest(dir: &Path) -> Result<Vec<ManifestEntry>> {
    let path = dir.join(MANIFEST_NAME);
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{annotate, linearize, Scenario};

    #[test]
    fn token_file_round_trip_restores_structure() {
        let dir = tempfile::tempdir().unwrap();
        let trees = parse_trees("(S (NP (DT a) (NN dog)) (VP (VBZ runs)))").unwrap();
        let seqs: Vec<TokenSeq> = trees.iter().map(|t| linearize(t, Scenario::TagW)).collect();
        let path = dir.path().join("tokens.txt");
        write_token_file(&path, &seqs).unwrap();
        let loaded = read_token_file(&path).unwrap();
        assert_eq!(loaded.len(), 1);
        assert_eq!(loaded[0].tokens, seqs[0].tokens);
        assert_eq!(loaded[0].depth_after, seqs[0].depth_after);
    }

    #[test]
    fn words_scenario_needs_the_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let trees = parse_trees("(S (NP (DT a) (NN dog)) (VP (VBZ runs)))").unwrap();
        let seqs: Vec<TokenSeq> = trees
            .iter()
            .map(|t| linearize(t, Scenario::Words))
            .collect();
        let tokens = dir.path().join("tokens.txt");
        let ann = dir.path().join("annotations.ndjson");
        write_token_file(&tokens, &seqs).unwrap();
        write_annotations(&ann, &seqs).unwrap();

        // Without the sidecar, words carry no structure.
        let bare = read_token_file(&tokens).unwrap();
        assert!(bare[0].depth_after.iter().all(|&d| d == 0));

        // With it, the original annotations are restored.
        let full = read_token_file_with_annotations(&tokens, &ann).unwrap();
        assert_eq!(full[0].depth_after, seqs[0].depth_after);
        assert_eq!(full[0].pos_of_token(2), Some("VBZ"));
        let annotated = annotate(full[0].clone(), &["NP".to_string()]).unwrap();
        assert_eq!(annotated.inside["NP"], vec![true, true, false, false]);
    }

    #[test]
    fn manifest_records_digests() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("x.txt");
        fs::write(&file, "hello").unwrap();
        let writer = ManifestWriter::new(dir.path(), "cfg", 7);
        writer.record(&file).unwrap();
        let entries = read_manifest(dir.path()).unwrap();
        assert_eq!(entries.len(), 1);
        assert_eq!(entries[0].file, "x.txt");
        assert_eq!(entries[0].sha256, sha256_hex(b"hello"));
        assert_eq!(entries[0].seed, 7);
    }
}
