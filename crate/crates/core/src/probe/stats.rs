//! Distributional and geometric statistics of internal vectors: pooled
//! histograms, ternarization, per-word averages with cosine neighbors, depth
//! correlation, counter trajectories, and histogram overlap.

use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use super::{ProbeDataset, VectorKind};
use crate::corpus::TokenClass;
use crate::error::{Error, Result};

/// Uniform-width histogram with normalized probabilities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: f64,
    /// Left edge of the first bin; bin i covers `[lo + i*w, lo + (i+1)*w)`.
    pub lo: f64,
    pub counts: Vec<u64>,
    pub probs: Vec<f64>,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn edges(&self) -> Vec<f64> {
        (0..=self.counts.len())
            .map(|i| self.lo + i as f64 * self.bin_width)
            .collect()
    }

    /// Plot-ready TSV: bin center, count, probability.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("center\tcount\tprob\n");
        for (i, (&c, &p)) in self.counts.iter().zip(&self.probs).enumerate() {
            let center = self.lo + (i as f64 + 0.5) * self.bin_width;
            out.push_str(&format!("{center}\t{c}\t{p}\n"));
        }
        out
    }
}

fn histogram_of(values: impl Iterator<Item = f64> + Clone, bin_width: f64) -> Result<Histogram> {
    if bin_width <= 0.0 {
        return Err(Error::invalid("bin width must be positive"));
    }
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut n = 0u64;
    for v in values.clone() {
        min = min.min(v);
        max = max.max(v);
        n += 1;
    }
    if n == 0 {
        return Err(Error::Probe("cannot build a histogram of no samples".into()));
    }
    let lo = (min / bin_width).floor() * bin_width;
    let bins = (((max - lo) / bin_width).floor() as usize + 1).max(1);
    let mut counts = vec![0u64; bins];
    for v in values {
        let idx = (((v - lo) / bin_width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let probs = counts.iter().map(|&c| c as f64 / n as f64).collect();
    Ok(Histogram {
        bin_width,
        lo,
        counts,
        probs,
    })
}

/// Histogram of one internal vector pooled across every dimension and
/// timestep of the dataset.
pub fn value_histogram(ds: &ProbeDataset, kind: VectorKind, bin_width: f64) -> Result<Histogram> {
    if ds.is_empty() {
        return Err(Error::Probe("empty dataset".into()));
    }
    histogram_of(ds.vectors(kind).iter().copied(), bin_width)
}

/// Fraction of values within `tol` of any of the given centers.
pub fn fraction_near(values: impl Iterator<Item = f64>, centers: &[f64], tol: f64) -> f64 {
    let mut hit = 0u64;
    let mut n = 0u64;
    for v in values {
        n += 1;
        if centers.iter().any(|c| (v - c).abs() <= tol) {
            hit += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        hit as f64 / n as f64
    }
}

/// Fraction of values in `[center - half_width, center + half_width)`.
pub fn window_mass(values: impl Iterator<Item = f64>, center: f64, half_width: f64) -> f64 {
    let mut hit = 0u64;
    let mut n = 0u64;
    for v in values {
        n += 1;
        if v >= center - half_width && v < center + half_width {
            hit += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        hit as f64 / n as f64
    }
}

pub const TERNARIZE_DEFAULT_THRESHOLD: f64 = 0.9;

/// Hard quantization to {-1, 0, 1} by thresholds at +/-tau.
pub fn ternarize_value(x: f64, tau: f64) -> f64 {
    if x > tau {
        1.0
    } else if x < -tau {
        -1.0
    } else {
        0.0
    }
}

pub fn ternarize(values: &[f64], tau: f64) -> Vec<f64> {
    values.iter().map(|&x| ternarize_value(x, tau)).collect()
}

/// Per-word mean of one internal vector over all of the word's occurrences.
#[derive(Debug, Clone)]
pub struct WordAverages {
    pub words: Vec<String>,
    pub matrix: Array2<f64>,
    pub occurrences: Vec<u64>,
    /// Requested words that never occurred (excluded with a warning).
    pub missing: Vec<String>,
}

/// Average an internal vector per word over the dataset's word tokens.
///
/// With `ternarize_tau` set, each occurrence is quantized to {-1,0,1} before
/// averaging. `words` restricts and orders the rows; absent words are
/// reported in `missing` rather than failing the whole call. `decode` maps a
/// token id to its surface form.
pub fn word_average_vectors(
    ds: &ProbeDataset,
    kind: VectorKind,
    ternarize_tau: Option<f64>,
    decode: impl Fn(u32) -> String,
    words: Option<&[String]>,
) -> Result<WordAverages> {
    let vectors = ds.vectors(kind);
    let d = ds.state_dim;
    let mut sums: BTreeMap<String, (Vec<f64>, u64)> = BTreeMap::new();
    for row in 0..ds.len() {
        if ds.token_class[row] != TokenClass::Word {
            continue;
        }
        let word = decode(ds.token[row]);
        let entry = sums.entry(word).or_insert_with(|| (vec![0.0; d], 0));
        for i in 0..d {
            let v = vectors[[row, i]];
            entry.0[i] += match ternarize_tau {
                Some(tau) => ternarize_value(v, tau),
                None => v,
            };
        }
        entry.1 += 1;
    }

    let (selected, missing): (Vec<String>, Vec<String>) = match words {
        Some(list) => list
            .iter()
            .cloned()
            .partition(|w| sums.contains_key(w)),
        None => (sums.keys().cloned().collect(), Vec::new()),
    };
    if selected.is_empty() {
        return Err(Error::Probe("no word occurrences to average".into()));
    }

    let mut matrix = Array2::zeros((selected.len(), d));
    let mut occurrences = Vec::with_capacity(selected.len());
    for (r, w) in selected.iter().enumerate() {
        let (sum, n) = &sums[w];
        for i in 0..d {
            matrix[[r, i]] = sum[i] / *n as f64;
        }
        occurrences.push(*n);
    }
    Ok(WordAverages {
        words: selected,
        matrix,
        occurrences,
        missing,
    })
}

/// Ranked cosine neighbors of one word's average vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NeighborList {
    pub query: String,
    pub neighbors: Vec<(String, f64)>,
}

pub fn cosine(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    let na = a.dot(&a).sqrt();
    let nb = b.dot(&b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    a.dot(&b) / (na * nb)
}

/// Top-k cosine neighbors of `query` among the averaged rows, the query
/// itself excluded. Ties break on row order, so permuting the input rows
/// does not change the ranking.
pub fn nearest_neighbors(avg: &WordAverages, query: &str, k: usize) -> Result<NeighborList> {
    let q = avg
        .words
        .iter()
        .position(|w| w == query)
        .ok_or_else(|| Error::Probe(format!("query word {query:?} has no averaged vector")))?;
    let mut scored: Vec<(usize, f64)> = (0..avg.words.len())
        .filter(|&i| i != q)
        .map(|i| (i, cosine(avg.matrix.row(q), avg.matrix.row(i))))
        .collect();
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(avg.words[a.0].cmp(&avg.words[b.0]))
    });
    Ok(NeighborList {
        query: query.to_string(),
        neighbors: scored
            .into_iter()
            .take(k)
            .map(|(i, s)| (avg.words[i].clone(), s))
            .collect(),
    })
}

/// What depth signal a correlation probe targets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DepthTarget {
    Overall,
    Tag(String),
}

/// Per-dimension Pearson correlation of the context vector with depth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DepthCorrelation {
    pub per_dim_r: Vec<f64>,
    /// Dimension with the largest |r| (ties to the lowest index).
    pub best_dim: usize,
    /// Correlation at `best_dim`.
    pub rho: f64,
    /// Offset fitted by least squares for depth ~ |c_best| - alpha.
    pub alpha: f64,
    /// Dimensions with zero variance, whose r is defined as 0.
    pub constant_dims: Vec<usize>,
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    if vx == 0.0 || vy == 0.0 {
        0.0
    } else {
        cov / (vx * vy).sqrt()
    }
}

/// Correlate every context dimension with the nesting depth pooled over all
/// content positions, and fit the unit-slope offset for the best dimension.
pub fn depth_correlation(
    ds: &ProbeDataset,
    kind: VectorKind,
    target: &DepthTarget,
) -> Result<DepthCorrelation> {
    let depth: &[f64] = match target {
        DepthTarget::Overall => &ds.depth,
        DepthTarget::Tag(tag) => ds
            .tag_depth
            .get(tag)
            .ok_or_else(|| Error::Probe(format!("tag {tag:?} was not tracked when pooling")))?,
    };
    let mut distinct = depth.to_vec();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::Probe(
            "depth correlation needs at least two distinct depth values".into(),
        ));
    }

    let vectors = ds.vectors(kind);
    let d = ds.state_dim;
    let mut per_dim_r = Vec::with_capacity(d);
    let mut constant_dims = Vec::new();
    let mut column = vec![0.0f64; ds.len()];
    for i in 0..d {
        for row in 0..ds.len() {
            column[row] = vectors[[row, i]];
        }
        let variance = {
            let m = column.iter().sum::<f64>() / column.len() as f64;
            column.iter().map(|v| (v - m) * (v - m)).sum::<f64>()
        };
        if variance == 0.0 {
            constant_dims.push(i);
            per_dim_r.push(0.0);
        } else {
            per_dim_r.push(pearson(&column, depth));
        }
    }

    let mut best_dim = 0;
    for i in 1..d {
        if per_dim_r[i].abs() > per_dim_r[best_dim].abs() {
            best_dim = i;
        }
    }
    let rho = per_dim_r[best_dim];
    // depth ~ |c| - alpha with unit slope: alpha = mean(|c|) - mean(depth).
    let mean_abs = (0..ds.len())
        .map(|row| vectors[[row, best_dim]].abs())
        .sum::<f64>()
        / ds.len() as f64;
    let mean_depth = depth.iter().sum::<f64>() / depth.len() as f64;
    Ok(DepthCorrelation {
        per_dim_r,
        best_dim,
        rho,
        alpha: mean_abs - mean_depth,
        constant_dims,
    })
}

/// Per-sentence trajectory of one context dimension, with step statistics
/// split by token class and the terminal value of every sentence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeshData {
    pub dim: usize,
    pub series: Vec<Vec<f64>>,
    pub bop_step_mean: f64,
    pub bop_step_std: f64,
    pub eop_step_mean: f64,
    pub eop_step_std: f64,
    /// Value after the last content token of each sentence.
    pub terminal_values: Vec<f64>,
    pub terminal_mean: f64,
    pub terminal_std: f64,
}

impl MeshData {
    /// Long-format TSV: sentence, step, value.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("sentence\tstep\tvalue\n");
        for (s, series) in self.series.iter().enumerate() {
            for (t, v) in series.iter().enumerate() {
                out.push_str(&format!("{s}\t{t}\t{v}\n"));
            }
        }
        out
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64;
    (mean, var.sqrt())
}

/// Extract the per-sentence series of context dimension `dim`, with per-step
/// deltas conditioned on opening vs closing tokens.
pub fn mesh_export(ds: &ProbeDataset, dim: usize) -> Result<MeshData> {
    if dim >= ds.state_dim {
        return Err(Error::Probe(format!(
            "dimension {dim} out of range for state size {}",
            ds.state_dim
        )));
    }
    let mut series = Vec::with_capacity(ds.sentence_ranges.len());
    let mut bop_steps = Vec::new();
    let mut eop_steps = Vec::new();
    let mut terminal_values = Vec::new();
    for &(start, end) in &ds.sentence_ranges {
        let mut prev = 0.0;
        let mut s = Vec::with_capacity(end - start);
        for row in start..end {
            let v = ds.context[[row, dim]];
            match ds.token_class[row] {
                TokenClass::Bop => bop_steps.push(v - prev),
                TokenClass::Eop => eop_steps.push(v - prev),
                _ => {}
            }
            s.push(v);
            prev = v;
        }
        if let Some(&last) = s.last() {
            terminal_values.push(last);
        }
        series.push(s);
    }
    let (bop_step_mean, bop_step_std) = mean_std(&bop_steps);
    let (eop_step_mean, eop_step_std) = mean_std(&eop_steps);
    let (terminal_mean, terminal_std) = mean_std(&terminal_values);
    Ok(MeshData {
        dim,
        series,
        bop_step_mean,
        bop_step_std,
        eop_step_mean,
        eop_step_std,
        terminal_values,
        terminal_mean,
        terminal_std,
    })
}

/// Overlap of two normalized histograms over a shared uniform binning:
/// the sum over bins of the smaller probability. 0 means disjoint supports,
/// 1 identical distributions.
pub fn overlap_ratio(a: &[f64], b: &[f64], bin_width: f64) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Probe("overlap ratio needs two non-empty samples".into()));
    }
    if bin_width <= 0.0 {
        return Err(Error::invalid("bin width must be positive"));
    }
    let min = a.iter().chain(b).cloned().fold(f64::INFINITY, f64::min);
    let max = a.iter().chain(b).cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = (min / bin_width).floor() * bin_width;
    let bins = (((max - lo) / bin_width).floor() as usize + 1).max(1);
    let fill = |xs: &[f64]| {
        let mut h = vec![0.0f64; bins];
        for &x in xs {
            let idx = (((x - lo) / bin_width) as usize).min(bins - 1);
            h[idx] += 1.0 / xs.len() as f64;
        }
        h
    };
    let ha = fill(a);
    let hb = fill(b);
    Ok(ha.iter().zip(&hb).map(|(x, y)| x.min(*y)).sum())
}
