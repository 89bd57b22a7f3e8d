//! Config-driven experiment pipeline: gen, convert, train, trace, probe,
//! report. Each stage reads and writes conventional file names inside the
//! run directory, so the stages chain from a single config.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{
    annotate, build_vocab, gen_dyck, gen_pcfg, linearize, pcfg, pos_map_from_seqs,
    PcfgGrammar, Scenario, TokenSeq, Vocab,
};
use crate::error::{Error, Result};
use crate::io::{self, trace_file, ManifestWriter};
use crate::lstm::{checkpoint, DropoutConfig, Trace};
use crate::probe::{
    holdout_rows_by_sentence, pca as pca_mod, regress, stats, ProbeDataset, VectorKind,
};
use crate::train::{self, TrainConfig};

pub const TREES_FILE: &str = "trees.txt";
pub const TOKENS_FILE: &str = "tokens.txt";
pub const ANNOTATIONS_FILE: &str = "annotations.ndjson";
pub const VOCAB_FILE: &str = "vocab.tsv";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const METRICS_FILE: &str = "metrics.ndjson";
pub const CONFUSION_FILE: &str = "confusion.csv";
pub const TRACE_FILE: &str = "trace.bin";
pub const TRACE_CSV_FILE: &str = "trace.csv";
pub const TRACED_TOKENS_FILE: &str = "traced_tokens.txt";
pub const TRACED_ANNOTATIONS_FILE: &str = "traced_annotations.ndjson";
pub const PROBES_DIR: &str = "probes";
pub const REPORT_FILE: &str = "report.json";

/// Corpus source: a seeded generator or user-supplied files.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CorpusSpec {
    Pcfg {
        n: usize,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        grammar: Option<PathBuf>,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        max_depth: Option<usize>,
    },
    Dyck {
        k: usize,
        n: usize,
        max_depth: usize,
    },
    Trees {
        path: PathBuf,
    },
    Tokens {
        path: PathBuf,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        annotations: Option<PathBuf>,
    },
}

/// One probe to run over the recorded traces.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProbeSpec {
    /// Per-dimension correlation of an internal vector with nesting depth.
    DepthCorr {
        #[serde(skip_serializing_if = "Option::is_none", default)]
        vector: Option<VectorKind>,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        tag: Option<String>,
    },
    /// Trajectories of the best counter dimension with step statistics.
    Mesh {
        #[serde(skip_serializing_if = "Option::is_none", default)]
        dim: Option<usize>,
    },
    /// Pooled histograms of f/u/c/h plus nearness-to-level mass fractions.
    Quantization {
        #[serde(skip_serializing_if = "Option::is_none", default)]
        bin_width: Option<f64>,
    },
    /// Per-dimension inside/outside histogram overlap for one phrase tag.
    Overlap {
        tag: String,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        vector: Option<VectorKind>,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        bin_width: Option<f64>,
    },
    /// Cosine neighbor lists over per-word averaged vectors.
    Neighbors {
        queries: Vec<String>,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        vector: Option<VectorKind>,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        ternarize: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        k: Option<usize>,
    },
    /// Least-squares depth regression on the context vector.
    OlsDepth {
        #[serde(skip_serializing_if = "Option::is_none", default)]
        tag: Option<String>,
    },
    /// Lasso depth regression ladder.
    LassoDepth {
        #[serde(skip_serializing_if = "Option::is_none", default)]
        tag: Option<String>,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        lambdas: Option<Vec<f64>>,
    },
    /// L1 logistic phrase-membership ladder.
    Logistic {
        tag: String,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        c_ladder: Option<Vec<f64>>,
    },
    /// PCA of one internal vector over all occurrences.
    Pca {
        #[serde(skip_serializing_if = "Option::is_none", default)]
        vector: Option<VectorKind>,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        k: Option<usize>,
    },
    /// Two-stage PCA over per-word averages, with part-of-speech profiles.
    RePca {
        #[serde(skip_serializing_if = "Option::is_none", default)]
        vector: Option<VectorKind>,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        k: Option<usize>,
    },
    /// 2-D projection of every occurrence of one (possibly ambiguous) word.
    ProjectWord {
        word: String,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        vector: Option<VectorKind>,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        k: Option<usize>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub scenario: Scenario,
    pub corpus: CorpusSpec,
    #[serde(default = "default_vocab_cap")]
    pub vocab_cap: usize,
    #[serde(default = "default_max_len")]
    pub max_len: usize,
    /// Phrase labels annotated for probes; empty means every label found.
    #[serde(default)]
    pub tracked_tags: Vec<String>,
    /// Fraction denominator for the evenly spaced test split (10 = 10%).
    #[serde(default = "default_test_every")]
    pub test_every: usize,
    /// Which sentences to trace: "test" (default) or "all".
    #[serde(default = "default_trace_split")]
    pub trace_split: String,
    pub train: TrainConfig,
    #[serde(default)]
    pub probes: Vec<ProbeSpec>,
}

fn default_vocab_cap() -> usize {
    10_000
}
fn default_max_len() -> usize {
    120
}
fn default_test_every() -> usize {
    10
}
fn default_trace_split() -> String {
    "test".to_string()
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.test_every < 2 {
            return Err(Error::invalid("test_every must be at least 2"));
        }
        if !matches!(self.trace_split.as_str(), "test" | "all") {
            return Err(Error::invalid("trace_split must be \"test\" or \"all\""));
        }
        match &self.corpus {
            CorpusSpec::Trees { path } | CorpusSpec::Tokens { path, .. } => {
                if !path.exists() {
                    return Err(Error::invalid(format!(
                        "corpus path {} does not exist",
                        path.display()
                    )));
                }
            }
            CorpusSpec::Pcfg { grammar, .. } => {
                if let Some(g) = grammar {
                    if !g.exists() {
                        return Err(Error::invalid(format!(
                            "grammar path {} does not exist",
                            g.display()
                        )));
                    }
                }
            }
            CorpusSpec::Dyck { .. } => {}
        }
        Ok(())
    }

    /// Digest of the canonical JSON form, used for provenance lines.
    pub fn sha256(&self) -> String {
        io::sha256_hex(serde_json::to_string(self).expect("config serializes").as_bytes())
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn manifest(&self) -> ManifestWriter {
        ManifestWriter::new(&self.out_dir, self.sha256(), self.seed)
    }
}

/// Generate the configured corpus into the run directory.
pub fn cmd_gen(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(&cfg.out_dir)?;
    let manifest = cfg.manifest();
    match &cfg.corpus {
        CorpusSpec::Pcfg {
            n,
            grammar,
            max_depth,
        } => {
            let grammar = match grammar {
                Some(path) => PcfgGrammar::parse(&fs::read_to_string(path)?)?,
                None => pcfg::default_grammar(),
            };
            let limits = pcfg::GenLimits {
                max_len: cfg.max_len,
                max_depth: *max_depth,
            };
            let trees = gen_pcfg(&grammar, *n, cfg.seed, limits)?;
            let path = cfg.path(TREES_FILE);
            io::write_tree_file(&path, &trees)?;
            manifest.record(&path)?;
            Ok(vec![path])
        }
        CorpusSpec::Dyck { k, n, max_depth } => {
            let seqs = gen_dyck(*k, *n, *max_depth, cfg.seed)?;
            let tokens = cfg.path(TOKENS_FILE);
            io::write_token_file(&tokens, &seqs)?;
            let ann = cfg.path(ANNOTATIONS_FILE);
            io::write_annotations(&ann, &seqs)?;
            manifest.record(&tokens)?;
            manifest.record(&ann)?;
            Ok(vec![tokens, ann])
        }
        _ => Err(Error::invalid(
            "corpus is file-based; there is nothing to generate",
        )),
    }
}

/// Linearize the tree corpus into tokens plus an annotation sidecar.
pub fn cmd_convert(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(&cfg.out_dir)?;
    let trees_path = match &cfg.corpus {
        CorpusSpec::Trees { path } => path.clone(),
        CorpusSpec::Pcfg { .. } => cfg.path(TREES_FILE),
        _ => {
            return Err(Error::invalid(
                "convert needs a tree corpus (generated or user-supplied)",
            ))
        }
    };
    let text = fs::read_to_string(&trees_path)?;

    // Collect every bad line rather than stopping at the first.
    let mut trees = Vec::new();
    let mut failures = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match crate::corpus::tree::parse_tree_line(line, i + 1) {
            Ok(t) => trees.push(t),
            Err(e) => failures.push(e.to_string()),
        }
    }
    if !failures.is_empty() {
        let shown = failures.iter().take(10).cloned().collect::<Vec<_>>().join("; ");
        return Err(Error::invalid(format!(
            "{} tree lines failed to parse: {shown}",
            failures.len()
        )));
    }

    let seqs: Vec<TokenSeq> = trees.iter().map(|t| linearize(t, cfg.scenario)).collect();
    let tokens = cfg.path(TOKENS_FILE);
    let ann = cfg.path(ANNOTATIONS_FILE);
    io::write_token_file(&tokens, &seqs)?;
    io::write_annotations(&ann, &seqs)?;
    let manifest = cfg.manifest();
    manifest.record(&tokens)?;
    manifest.record(&ann)?;
    Ok(vec![tokens, ann])
}

fn load_corpus(cfg: &ExperimentConfig) -> Result<Vec<TokenSeq>> {
    let (tokens_path, ann_path) = match &cfg.corpus {
        CorpusSpec::Tokens { path, annotations } => (path.clone(), annotations.clone()),
        _ => {
            let ann = cfg.path(ANNOTATIONS_FILE);
            (
                cfg.path(TOKENS_FILE),
                if ann.exists() { Some(ann) } else { None },
            )
        }
    };
    if !tokens_path.exists() {
        return Err(Error::invalid(format!(
            "token corpus {} not found; run gen/convert first",
            tokens_path.display()
        )));
    }
    match ann_path {
        Some(ann) => io::read_token_file_with_annotations(&tokens_path, &ann),
        None => io::read_token_file(&tokens_path),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainReport {
    pub best_epoch: Option<usize>,
    pub best_accuracy: Option<f64>,
    pub epochs_run: usize,
    pub diverged: bool,
    pub vocab_size: usize,
    pub vocab_size_without_reserved: usize,
}

/// Build the vocabulary, train, and write checkpoint/metrics/confusion.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<TrainReport> {
    fs::create_dir_all(&cfg.out_dir)?;
    let ckpt_path = cfg.path(CHECKPOINT_FILE);
    if ckpt_path.exists() {
        return Err(Error::invalid(format!(
            "{} already exists; runs cannot be resumed, use a fresh directory",
            ckpt_path.display()
        )));
    }

    let seqs = load_corpus(cfg)?;
    let pos_map = pos_map_from_seqs(&seqs);
    let vocab = build_vocab(&seqs, cfg.vocab_cap, &pos_map)?;
    let vocab_path = cfg.path(VOCAB_FILE);
    fs::write(&vocab_path, vocab.to_tsv())?;
    let vocab_digest = io::file_sha256(&vocab_path)?;

    let ids: Vec<Vec<u32>> = seqs
        .iter()
        .map(|s| vocab.encode_seq(s))
        .collect::<Result<_>>()?;
    let (train_idx, test_idx) = train::split_evenly(ids.len(), cfg.test_every);
    let train_ids: Vec<Vec<u32>> = train_idx.iter().map(|&i| ids[i].clone()).collect();
    let test_ids: Vec<Vec<u32>> = test_idx.iter().map(|&i| ids[i].clone()).collect();

    let outcome = train::train(&cfg.train, &train_ids, &test_ids, &vocab)?;

    let metrics_path = cfg.path(METRICS_FILE);
    let mut metrics_text = String::new();
    for m in &outcome.metrics {
        metrics_text.push_str(&serde_json::to_string(m)?);
        metrics_text.push('\n');
    }
    fs::write(&metrics_path, metrics_text)?;

    let mut header = checkpoint::CheckpointHeader::new(&outcome.params);
    header.scenario = Some(cfg.scenario.name().to_string());
    header.vocab_sha256 = Some(vocab_digest);
    header.train_config = Some(serde_json::to_value(&cfg.train)?);
    header.epoch = outcome.best_epoch;
    let best_metrics = outcome
        .best_epoch
        .and_then(|e| outcome.metrics.get(e));
    header.metrics = best_metrics
        .map(|m| {
            serde_json::to_value(serde_json::json!({
                "accuracy": m.accuracy,
                "train_loss": m.train_loss,
            }))
        })
        .transpose()?;
    checkpoint::save(&ckpt_path, &outcome.params, &header)?;

    let confusion_path = cfg.path(CONFUSION_FILE);
    if let Some(m) = best_metrics {
        fs::write(&confusion_path, m.confusion.to_csv())?;
    }

    let manifest = cfg.manifest();
    manifest.record(&vocab_path)?;
    manifest.record(&metrics_path)?;
    manifest.record(&ckpt_path)?;
    if confusion_path.exists() {
        manifest.record(&confusion_path)?;
    }

    Ok(TrainReport {
        best_epoch: outcome.best_epoch,
        best_accuracy: best_metrics.map(|m| m.accuracy),
        epochs_run: outcome.metrics.len(),
        diverged: outcome.diverged,
        vocab_size: vocab.size(),
        vocab_size_without_reserved: vocab.size_without_reserved(),
    })
}

/// Run the checkpoint over the traced split and record every gate vector.
pub fn cmd_trace(cfg: &ExperimentConfig, csv: bool) -> Result<Vec<PathBuf>> {
    let ckpt_path = cfg.path(CHECKPOINT_FILE);
    let (params, header) = checkpoint::load(&ckpt_path)?;

    let vocab_path = cfg.path(VOCAB_FILE);
    let vocab_digest = io::file_sha256(&vocab_path)?;
    if let Some(expected) = &header.vocab_sha256 {
        if expected != &vocab_digest {
            return Err(Error::DigestMismatch(format!(
                "checkpoint was trained with vocabulary {expected} but {} has digest {vocab_digest}",
                vocab_path.display()
            )));
        }
    }
    let vocab = Vocab::from_tsv(&fs::read_to_string(&vocab_path)?)?;

    let seqs = load_corpus(cfg)?;
    let (train_idx, test_idx) = train::split_evenly(seqs.len(), cfg.test_every);
    let selected: Vec<usize> = match cfg.trace_split.as_str() {
        "all" => (0..seqs.len()).collect(),
        _ => test_idx.clone(),
    };
    drop(train_idx);

    let mut traces: Vec<Trace> = Vec::with_capacity(selected.len());
    let mut traced_seqs: Vec<TokenSeq> = Vec::with_capacity(selected.len());
    for (new_id, &i) in selected.iter().enumerate() {
        let ids = vocab.encode_seq(&seqs[i])?;
        let (_, mut trace) = params.forward(&ids, &DropoutConfig::disabled())?;
        trace.sentence_id = new_id;
        traces.push(trace);
        traced_seqs.push(seqs[i].clone());
    }

    let trace_path = cfg.path(TRACE_FILE);
    let mut trace_header = trace_file::TraceHeader::new(params.state_dim, traces.len());
    trace_header.vocab_sha256 = Some(vocab_digest);
    trace_header.checkpoint_sha256 = Some(io::file_sha256(&ckpt_path)?);
    trace_file::write_traces(&trace_path, &traces, trace_header)?;

    let traced_tokens = cfg.path(TRACED_TOKENS_FILE);
    let traced_ann = cfg.path(TRACED_ANNOTATIONS_FILE);
    io::write_token_file(&traced_tokens, &traced_seqs)?;
    io::write_annotations(&traced_ann, &traced_seqs)?;

    let manifest = cfg.manifest();
    manifest.record(&trace_path)?;
    manifest.record(&traced_tokens)?;
    manifest.record(&traced_ann)?;
    let mut produced = vec![trace_path, traced_tokens, traced_ann];

    if csv {
        let csv_path = cfg.path(TRACE_CSV_FILE);
        fs::write(&csv_path, trace_file::traces_to_csv(&traces))?;
        manifest.record(&csv_path)?;
        produced.push(csv_path);
    }
    Ok(produced)
}

#[derive(Debug, Clone, Serialize)]
struct Provenance {
    config_sha256: String,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    checkpoint_sha256: Option<String>,
    trace_sha256: String,
}

/// Run the configured probes over the recorded traces.
pub fn cmd_probe(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    if cfg.probes.is_empty() {
        eprintln!("warning: no probes configured; nothing to do");
        return Ok(Vec::new());
    }
    let trace_path = cfg.path(TRACE_FILE);
    let (traces, trace_header) = trace_file::read_traces(&trace_path)?;
    let seqs = io::read_token_file_with_annotations(
        &cfg.path(TRACED_TOKENS_FILE),
        &cfg.path(TRACED_ANNOTATIONS_FILE),
    )?;
    let vocab = Vocab::from_tsv(&fs::read_to_string(cfg.path(VOCAB_FILE))?)?;

    let tracked: Vec<String> = if cfg.tracked_tags.is_empty() {
        let mut all: Vec<String> = seqs
            .iter()
            .flat_map(|s| s.labels.iter().cloned())
            .collect();
        all.sort();
        all.dedup();
        all
    } else {
        cfg.tracked_tags.clone()
    };
    let seqs: Vec<TokenSeq> = seqs
        .into_iter()
        .map(|s| annotate(s, &tracked))
        .collect::<Result<_>>()?;
    let dataset = ProbeDataset::build(&traces, &seqs, &tracked)?;

    let provenance = Provenance {
        config_sha256: cfg.sha256(),
        seed: cfg.seed,
        checkpoint_sha256: trace_header.checkpoint_sha256.clone(),
        trace_sha256: io::file_sha256(&trace_path)?,
    };

    let probes_dir = cfg.path(PROBES_DIR);
    fs::create_dir_all(&probes_dir)?;
    let manifest = cfg.manifest();
    let mut produced = Vec::new();
    let write_json = |name: &str, value: serde_json::Value| -> Result<PathBuf> {
        let path = probes_dir.join(name);
        let wrapped = serde_json::json!({
            "provenance": provenance,
            "result": value,
        });
        fs::write(&path, serde_json::to_string_pretty(&wrapped)?)?;
        manifest.record(&path)?;
        Ok(path)
    };
    let write_tsv = |name: &str, text: String| -> Result<PathBuf> {
        let path = probes_dir.join(name);
        fs::write(&path, text)?;
        cfg.manifest().record(&path)?;
        Ok(path)
    };

    for spec in &cfg.probes {
        match spec {
            ProbeSpec::DepthCorr { vector, tag } => {
                let kind = vector.unwrap_or(VectorKind::Context);
                let target = match tag {
                    Some(t) => stats::DepthTarget::Tag(t.clone()),
                    None => stats::DepthTarget::Overall,
                };
                let dc = stats::depth_correlation(&dataset, kind, &target)?;
                let name = match tag {
                    Some(t) => format!("depth_corr_{t}.json"),
                    None => "depth_corr.json".to_string(),
                };
                produced.push(write_json(&name, serde_json::to_value(&dc)?)?);
            }
            ProbeSpec::Mesh { dim } => {
                let dim = match dim {
                    Some(d) => *d,
                    None => {
                        stats::depth_correlation(
                            &dataset,
                            VectorKind::Context,
                            &stats::DepthTarget::Overall,
                        )?
                        .best_dim
                    }
                };
                let mesh = stats::mesh_export(&dataset, dim)?;
                produced.push(write_tsv("mesh.tsv", mesh.to_tsv())?);
                let summary = serde_json::json!({
                    "dim": mesh.dim,
                    "bop_step_mean": mesh.bop_step_mean,
                    "bop_step_std": mesh.bop_step_std,
                    "eop_step_mean": mesh.eop_step_mean,
                    "eop_step_std": mesh.eop_step_std,
                    "terminal_mean": mesh.terminal_mean,
                    "terminal_std": mesh.terminal_std,
                    "sentences": mesh.series.len(),
                });
                produced.push(write_json("mesh.json", summary)?);
            }
            ProbeSpec::Quantization { bin_width } => {
                let w = bin_width.unwrap_or(0.05);
                let mut summary = serde_json::Map::new();
                for (kind, label) in [
                    (VectorKind::Forget, "forget"),
                    (VectorKind::Update, "update"),
                    (VectorKind::Context, "context"),
                    (VectorKind::Output, "output"),
                ] {
                    let hist = stats::value_histogram(&dataset, kind, w)?;
                    produced.push(write_tsv(&format!("hist_{label}.tsv"), hist.to_tsv())?);
                    let values = dataset.vectors(kind);
                    let windows: Vec<serde_json::Value> = [-2.0f64, -1.0, 0.0, 1.0, 2.0]
                        .iter()
                        .map(|&c| {
                            serde_json::json!({
                                "center": c,
                                "mass": stats::window_mass(values.iter().copied(), c, 0.1),
                                "left_flank": stats::window_mass(values.iter().copied(), c - 0.2, 0.1),
                                "right_flank": stats::window_mass(values.iter().copied(), c + 0.2, 0.1),
                            })
                        })
                        .collect();
                    let near_binary = stats::fraction_near(values.iter().copied(), &[0.0, 1.0], 0.1);
                    let near_ternary =
                        stats::fraction_near(values.iter().copied(), &[-1.0, 0.0, 1.0], 0.1);
                    let entry = serde_json::json!({
                        "bin_width": w,
                        "samples": hist.total(),
                        "near_binary": near_binary,
                        "near_ternary": near_ternary,
                        "integer_window_mass": windows,
                    });
                    summary.insert(label.to_string(), entry);
                }
                produced.push(write_json("quantization.json", summary.into())?);
            }
            ProbeSpec::Overlap {
                tag,
                vector,
                bin_width,
            } => {
                let kind = vector.unwrap_or(VectorKind::Context);
                let w = bin_width.unwrap_or(0.1);
                let inside = dataset
                    .inside
                    .get(tag)
                    .ok_or_else(|| Error::Probe(format!("tag {tag:?} is not tracked")))?;
                let values = dataset.vectors(kind);
                let mut per_dim = Vec::with_capacity(dataset.state_dim);
                for dim in 0..dataset.state_dim {
                    let mut a = Vec::new();
                    let mut b = Vec::new();
                    for row in 0..dataset.len() {
                        if inside[row] {
                            a.push(values[[row, dim]]);
                        } else {
                            b.push(values[[row, dim]]);
                        }
                    }
                    per_dim.push(stats::overlap_ratio(&a, &b, w)?);
                }
                let (best_dim, best) = per_dim
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .map(|(i, v)| (i, *v))
                    .expect("state_dim > 0");
                let result = serde_json::json!({
                    "tag": tag,
                    "bin_width": w,
                    "min_overlap": best,
                    "best_dim": best_dim,
                    "per_dim": per_dim,
                });
                produced.push(write_json(&format!("overlap_{tag}.json"), result)?);
            }
            ProbeSpec::Neighbors {
                queries,
                vector,
                ternarize,
                k,
            } => {
                let kind = vector.unwrap_or(VectorKind::Update);
                let avg = stats::word_average_vectors(
                    &dataset,
                    kind,
                    *ternarize,
                    |id| vocab.decode(id).to_string(),
                    None,
                )?;
                let mut lists = Vec::new();
                let mut missing = Vec::new();
                for q in queries {
                    match stats::nearest_neighbors(&avg, q, k.unwrap_or(7)) {
                        Ok(nn) => lists.push(nn),
                        Err(_) => missing.push(q.clone()),
                    }
                }
                let label = match ternarize {
                    Some(_) => format!("{:?}_ternarized", kind).to_lowercase(),
                    None => format!("{kind:?}").to_lowercase(),
                };
                let result = serde_json::json!({
                    "vector": label,
                    "lists": lists,
                    "missing": missing,
                });
                produced.push(write_json(&format!("neighbors_{label}.json"), result)?);
            }
            ProbeSpec::OlsDepth { tag } => {
                let y = depth_target(&dataset, tag)?;
                let probe = regress::ols_holdout(
                    &dataset.context,
                    y,
                    &dataset.sentence,
                    Some(1e-8),
                )?;
                let single = stats::depth_correlation(
                    &dataset,
                    VectorKind::Context,
                    &match tag {
                        Some(t) => stats::DepthTarget::Tag(t.clone()),
                        None => stats::DepthTarget::Overall,
                    },
                )?;
                let name = match tag {
                    Some(t) => format!("ols_depth_{t}.json"),
                    None => "ols_depth.json".to_string(),
                };
                let result = serde_json::json!({
                    "target": tag,
                    "holdout_r": probe.metric,
                    "in_sample_r": probe.metric_in_sample,
                    "nnz": probe.nnz,
                    "jitter_applied": probe.jitter_applied,
                    "best_single_dim": single.best_dim,
                    "best_single_abs_r": single.rho.abs(),
                    "weights_sha256": io::sha256_hex(
                        serde_json::to_string(&probe.weights)?.as_bytes()
                    ),
                });
                produced.push(write_json(&name, result)?);
            }
            ProbeSpec::LassoDepth { tag, lambdas } => {
                let y = depth_target(&dataset, tag)?;
                // Default ladder is relative to the smallest all-zero penalty.
                let null = regress::lasso_null_threshold(&dataset.context, y);
                let ladder = lambdas
                    .clone()
                    .unwrap_or_else(|| vec![0.3 * null, 0.1 * null, 0.03 * null, 0.01 * null]);
                let mut rows = Vec::new();
                for &lambda in &ladder {
                    let probe = regress::lasso(&dataset.context, y, lambda)?;
                    rows.push(serde_json::json!({
                        "lambda": lambda,
                        "r": probe.metric,
                        "nnz": probe.nnz,
                        "ratio": probe.nnz as f64 / dataset.state_dim as f64,
                        "sweeps": probe.iterations,
                    }));
                }
                let name = match tag {
                    Some(t) => format!("lasso_depth_{t}.json"),
                    None => "lasso_depth.json".to_string(),
                };
                let result = serde_json::json!({
                    "target": tag,
                    "null_threshold": regress::lasso_null_threshold(&dataset.context, y),
                    "ladder": rows,
                });
                produced.push(write_json(&name, result)?);
            }
            ProbeSpec::Logistic { tag, c_ladder } => {
                let inside = dataset
                    .inside
                    .get(tag)
                    .ok_or_else(|| Error::Probe(format!("tag {tag:?} is not tracked")))?;
                let labels: Vec<bool> = inside.clone();
                let ladder = c_ladder
                    .clone()
                    .unwrap_or_else(|| regress::LOGISTIC_C_LADDER.to_vec());
                let chance = {
                    let pos = labels.iter().filter(|&&b| b).count() as f64;
                    let rate = pos / labels.len() as f64;
                    rate.max(1.0 - rate)
                };
                let mut rows = Vec::new();
                for &c in &ladder {
                    let probe = regress::l1_logistic_holdout(
                        &dataset.context,
                        &labels,
                        &dataset.sentence,
                        c,
                    )?;
                    rows.push(serde_json::json!({
                        "c": c,
                        "holdout_accuracy": probe.metric,
                        "in_sample_accuracy": probe.metric_in_sample,
                        "nnz": probe.nnz,
                        "ratio": probe.nnz as f64 / dataset.state_dim as f64,
                        "steps": probe.iterations,
                    }));
                }
                let result = serde_json::json!({
                    "tag": tag,
                    "chance": chance,
                    "ladder": rows,
                });
                produced.push(write_json(&format!("logistic_{tag}.json"), result)?);
            }
            ProbeSpec::Pca { vector, k } => {
                let kind = vector.unwrap_or(VectorKind::Update);
                let x = dataset.vectors(kind);
                let k = k.unwrap_or(50).min(dataset.state_dim).min(x.nrows() - 1);
                let model = pca_mod::pca(x, k)?;
                let label = format!("{kind:?}").to_lowercase();
                let result = serde_json::json!({
                    "vector": label,
                    "k": k,
                    "stds": model.stds,
                    "mean_sha256": io::sha256_hex(serde_json::to_string(&model.mean)?.as_bytes()),
                });
                produced.push(write_json(&format!("pca_{label}.json"), result)?);
            }
            ProbeSpec::RePca { vector, k } => {
                let kind = vector.unwrap_or(VectorKind::Update);
                let x = dataset.vectors(kind);
                let k = k.unwrap_or(50).min(dataset.state_dim).min(x.nrows() - 1);
                let two = pca_mod::re_pca(x, &dataset.token, k)?;
                let words: Vec<String> = two
                    .word_ids
                    .iter()
                    .map(|&id| vocab.decode(id).to_string())
                    .collect();
                // Majority gold part of speech per word, for the profiles.
                let mut pos_votes: BTreeMap<u32, BTreeMap<String, u64>> = BTreeMap::new();
                for row in 0..dataset.len() {
                    if let Some(pos) = &dataset.gold_pos[row] {
                        *pos_votes
                            .entry(dataset.token[row])
                            .or_default()
                            .entry(pos.clone())
                            .or_default() += 1;
                    }
                }
                let word_pos: Vec<String> = two
                    .word_ids
                    .iter()
                    .map(|id| {
                        pos_votes
                            .get(id)
                            .and_then(|votes| {
                                votes
                                    .iter()
                                    .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                                    .map(|(p, _)| p.clone())
                            })
                            .unwrap_or_else(|| "?".to_string())
                    })
                    .collect();
                let profile =
                    pca_mod::pos_component_profile(&two.coords, &word_pos, 5.min(k))?;
                let label = format!("{kind:?}").to_lowercase();

                let mut tsv = String::from("word\tpos\toccurrences");
                let k2 = two.stage2.k();
                for c in 0..k2 {
                    tsv.push_str(&format!("\tc{c}"));
                }
                tsv.push('\n');
                for (i, w) in words.iter().enumerate() {
                    tsv.push_str(&format!("{w}\t{}\t{}", word_pos[i], two.occurrences[i]));
                    for c in 0..k2 {
                        tsv.push_str(&format!("\t{}", two.coords[i][c]));
                    }
                    tsv.push('\n');
                }
                produced.push(write_tsv(&format!("re_pca_{label}_coords.tsv"), tsv)?);

                let result = serde_json::json!({
                    "vector": label,
                    "k": k,
                    "stage1_stds": two.stage1.stds,
                    "stage2_stds": two.stage2.stds,
                    "words": words,
                    "word_pos": word_pos,
                    "profile": profile,
                });
                produced.push(write_json(&format!("re_pca_{label}.json"), result)?);
            }
            ProbeSpec::ProjectWord { word, vector, k } => {
                let kind = vector.unwrap_or(VectorKind::Update);
                let x = dataset.vectors(kind);
                let rows: Vec<usize> = (0..dataset.len())
                    .filter(|&r| vocab.decode(dataset.token[r]) == word)
                    .collect();
                if rows.is_empty() {
                    return Err(Error::Probe(format!(
                        "word {word:?} does not occur in the traced corpus"
                    )));
                }
                let mut occ = ndarray::Array2::zeros((rows.len(), dataset.state_dim));
                let mut gold = Vec::with_capacity(rows.len());
                for (r, &row) in rows.iter().enumerate() {
                    occ.row_mut(r).assign(&x.row(row));
                    gold.push(
                        dataset.gold_pos[row]
                            .clone()
                            .unwrap_or_else(|| "?".to_string()),
                    );
                }
                let k = k.unwrap_or(10).min(dataset.state_dim).min(x.nrows() - 1).max(2);
                let model = pca_mod::pca(x, k)?;
                let points = pca_mod::project_occurrences(&model, &occ, &gold)?;
                let silhouette = {
                    let coords: Vec<(f64, f64)> =
                        points.iter().map(|(a, b, _)| (*a, *b)).collect();
                    let labels: Vec<String> = points.iter().map(|(_, _, l)| l.clone()).collect();
                    pca_mod::silhouette_two_class(&coords, &labels).ok()
                };

                let mut tsv = String::from("x\ty\tpos\n");
                for (a, b, pos) in &points {
                    tsv.push_str(&format!("{a}\t{b}\t{pos}\n"));
                }
                produced.push(write_tsv(&format!("occurrences_{word}.tsv"), tsv)?);
                let result = serde_json::json!({
                    "word": word,
                    "occurrences": points.len(),
                    "silhouette": silhouette,
                });
                produced.push(write_json(&format!("occurrences_{word}.json"), result)?);
            }
        }
    }
    Ok(produced)
}

fn depth_target<'a>(dataset: &'a ProbeDataset, tag: &Option<String>) -> Result<&'a [f64]> {
    match tag {
        None => Ok(&dataset.depth),
        Some(t) => dataset
            .tag_depth
            .get(t)
            .map(|v| v.as_slice())
            .ok_or_else(|| Error::Probe(format!("tag {t:?} is not tracked"))),
    }
}

/// Split rows by sentence and keep only the held-out side. Exposed for the
/// acceptance suite, which mirrors the probe pipeline's split.
pub fn holdout_rows(dataset: &ProbeDataset, every: usize) -> (Vec<usize>, Vec<usize>) {
    holdout_rows_by_sentence(&dataset.sentence, every)
}

/// Consolidate a run directory: list every artifact with its digest, embed
/// the probe results, and name the expected files that are missing.
pub fn cmd_report(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let mut expected: Vec<String> = Vec::new();
    match &cfg.corpus {
        CorpusSpec::Pcfg { .. } => {
            expected.push(TREES_FILE.into());
            expected.push(TOKENS_FILE.into());
            expected.push(ANNOTATIONS_FILE.into());
        }
        CorpusSpec::Dyck { .. } => {
            expected.push(TOKENS_FILE.into());
            expected.push(ANNOTATIONS_FILE.into());
        }
        CorpusSpec::Trees { .. } => {
            expected.push(TOKENS_FILE.into());
            expected.push(ANNOTATIONS_FILE.into());
        }
        CorpusSpec::Tokens { .. } => {}
    }
    expected.extend(
        [
            VOCAB_FILE,
            CHECKPOINT_FILE,
            METRICS_FILE,
            CONFUSION_FILE,
            TRACE_FILE,
        ]
        .map(String::from),
    );
    for spec in &cfg.probes {
        let name = match spec {
            ProbeSpec::DepthCorr { tag: Some(t), .. } => format!("depth_corr_{t}.json"),
            ProbeSpec::DepthCorr { .. } => "depth_corr.json".into(),
            ProbeSpec::Mesh { .. } => "mesh.json".into(),
            ProbeSpec::Quantization { .. } => "quantization.json".into(),
            ProbeSpec::Overlap { tag, .. } => format!("overlap_{tag}.json"),
            ProbeSpec::Neighbors { ternarize, vector, .. } => {
                let kind = vector.unwrap_or(VectorKind::Update);
                match ternarize {
                    Some(_) => format!("neighbors_{:?}_ternarized.json", kind).to_lowercase(),
                    None => format!("neighbors_{kind:?}.json").to_lowercase(),
                }
            }
            ProbeSpec::OlsDepth { tag: Some(t) } => format!("ols_depth_{t}.json"),
            ProbeSpec::OlsDepth { .. } => "ols_depth.json".into(),
            ProbeSpec::LassoDepth { tag: Some(t), .. } => format!("lasso_depth_{t}.json"),
            ProbeSpec::LassoDepth { .. } => "lasso_depth.json".into(),
            ProbeSpec::Logistic { tag, .. } => format!("logistic_{tag}.json"),
            ProbeSpec::Pca { vector, .. } => {
                format!("pca_{:?}.json", vector.unwrap_or(VectorKind::Update)).to_lowercase()
            }
            ProbeSpec::RePca { vector, .. } => {
                format!("re_pca_{:?}.json", vector.unwrap_or(VectorKind::Update)).to_lowercase()
            }
            ProbeSpec::ProjectWord { word, .. } => format!("occurrences_{word}.json"),
        };
        expected.push(format!("{PROBES_DIR}/{name}"));
    }

    let mut artifacts = Vec::new();
    let mut gaps = Vec::new();
    for name in &expected {
        let path = cfg.out_dir.join(name);
        if path.exists() {
            artifacts.push(serde_json::json!({
                "file": name,
                "sha256": io::file_sha256(&path)?,
            }));
        } else {
            gaps.push(name.clone());
        }
    }

    // Embed probe results for one-file consumption.
    let mut probe_results = serde_json::Map::new();
    let probes_dir = cfg.path(PROBES_DIR);
    if probes_dir.is_dir() {
        let mut entries: Vec<PathBuf> = fs::read_dir(&probes_dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().map(|e| e == "json").unwrap_or(false))
            .collect();
        entries.sort();
        for path in entries {
            let value: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path)?)?;
            let key = path.file_name().unwrap().to_string_lossy().into_owned();
            probe_results.insert(key, value);
        }
    }

    let report = serde_json::json!({
        "config_sha256": cfg.sha256(),
        "seed": cfg.seed,
        "scenario": cfg.scenario.name(),
        "artifacts": artifacts,
        "gaps": gaps,
        "probes": probe_results,
    });
    let path = cfg.path(REPORT_FILE);
    fs::write(&path, serde_json::to_string_pretty(&report)?)?;
    Ok(path)
}
