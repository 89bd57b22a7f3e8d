//! Principal component analysis by deflated power iteration, the two-stage
//! word-averaged variant, and per-part-of-speech component profiles.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITERS: usize = 100_000;

/// Fitted PCA: orthonormal components (rows) sorted by non-increasing
/// standard deviation along each component.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    pub components: Vec<Vec<f64>>,
    pub stds: Vec<f64>,
}

impl PcaModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    /// Project rows of x onto the components.
    pub fn project(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((x.nrows(), self.k()));
        for (r, row) in x.rows().into_iter().enumerate() {
            for (c, comp) in self.components.iter().enumerate() {
                let mut dot = 0.0;
                for j in 0..self.dim() {
                    dot += (row[j] - self.mean[j]) * comp[j];
                }
                out[[r, c]] = dot;
            }
        }
        out
    }

    /// Reconstruct from projections (exact when k = d).
    pub fn reconstruct(&self, proj: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((proj.nrows(), self.dim()));
        for r in 0..proj.nrows() {
            for j in 0..self.dim() {
                let mut v = self.mean[j];
                for c in 0..self.k() {
                    v += proj[[r, c]] * self.components[c][j];
                }
                out[[r, j]] = v;
            }
        }
        out
    }
}

/// Top-k PCA of the rows of x.
///
/// Eigenpairs of the sample covariance come from power iteration with
/// deflation (tolerance 1e-10); each component's sign is fixed so its
/// largest-magnitude entry is positive, making the model deterministic.
pub fn pca(x: &Array2<f64>, k: usize) -> Result<PcaModel> {
    let n = x.nrows();
    let d = x.ncols();
    if n < 2 {
        return Err(Error::Probe("PCA needs at least two samples".into()));
    }
    if k == 0 || k > d.min(n - 1) {
        return Err(Error::Probe(format!(
            "component count {k} must lie in 1..=min(samples-1, dim) = {}",
            d.min(n - 1)
        )));
    }

    let mean: Vec<f64> = (0..d).map(|j| x.column(j).sum() / n as f64).collect();
    let mut centered = x.clone();
    for j in 0..d {
        centered.column_mut(j).mapv_inplace(|v| v - mean[j]);
    }
    let mut cov = centered.t().dot(&centered) / (n as f64 - 1.0);
    let total_variance: f64 = (0..d).map(|j| cov[[j, j]]).sum();
    if total_variance <= 0.0 {
        return Err(Error::Probe("zero-variance data".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0x9ca0_55ed);
    let mut components: Vec<Array1<f64>> = Vec::with_capacity(k);
    let mut variances: Vec<f64> = Vec::with_capacity(k);
    for _ in 0..k {
        let mut v = Array1::from_shape_fn(d, |_| rng.random_range(-1.0..1.0f64));
        // Keep the iterate orthogonal to previously found components.
        for c in &components {
            let dot = v.dot(c);
            v = v - dot * c;
        }
        let mut norm = v.dot(&v).sqrt();
        if norm < 1e-30 {
            v = Array1::ones(d);
            norm = v.dot(&v).sqrt();
        }
        v /= norm;

        let mut eigenvalue = 0.0f64;
        for _ in 0..POWER_MAX_ITERS {
            let mut next = cov.dot(&v);
            for c in &components {
                let dot = next.dot(c);
                next = next - dot * c;
            }
            let norm = next.dot(&next).sqrt();
            if norm < 1e-30 {
                // The remaining spectrum is zero.
                eigenvalue = 0.0;
                break;
            }
            next /= norm;
            // Convergence on the eigenvector itself (a PSD covariance never
            // flips the iterate's sign).
            let drift = next
                .iter()
                .zip(v.iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            v = next;
            eigenvalue = v.dot(&cov.dot(&v));
            if drift <= POWER_TOL {
                break;
            }
        }

        // Deflate and store.
        let outer = outer_product(&v, &v);
        cov = cov - eigenvalue * outer;
        components.push(v);
        variances.push(eigenvalue.max(0.0));
    }

    // Order by variance (deflation can return near-ties out of order).
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| variances[b].partial_cmp(&variances[a]).unwrap());
    let mut out_components = Vec::with_capacity(k);
    let mut stds = Vec::with_capacity(k);
    for &i in &order {
        let mut comp = components[i].to_vec();
        fix_sign(&mut comp);
        out_components.push(comp);
        stds.push(variances[i].sqrt());
    }

    Ok(PcaModel {
        mean,
        components: out_components,
        stds,
    })
}

fn outer_product(a: &Array1<f64>, b: &Array1<f64>) -> Array2<f64> {
    let mut out = Array2::zeros((a.len(), b.len()));
    for i in 0..a.len() {
        for j in 0..b.len() {
            out[[i, j]] = a[i] * b[j];
        }
    }
    out
}

/// Deterministic sign: the entry of largest magnitude (lowest index on ties)
/// is made positive.
fn fix_sign(comp: &mut [f64]) {
    let mut best = 0;
    for i in 1..comp.len() {
        if comp[i].abs() > comp[best].abs() {
            best = i;
        }
    }
    if comp[best] < 0.0 {
        for v in comp.iter_mut() {
            *v = -*v;
        }
    }
}

/// Two-stage PCA that cancels word frequency: occurrences are projected by a
/// first PCA, projections are averaged per unique word, and a second PCA is
/// fitted on those averages.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RePca {
    pub stage1: PcaModel,
    pub stage2: PcaModel,
    /// Distinct word ids in ascending order, aligned with `coords` rows.
    pub word_ids: Vec<u32>,
    pub occurrences: Vec<u64>,
    /// Stage-2 coordinates of each unique word's averaged vector.
    pub coords: Vec<Vec<f64>>,
}

pub fn re_pca(x: &Array2<f64>, word_ids: &[u32], k: usize) -> Result<RePca> {
    if x.nrows() != word_ids.len() {
        return Err(Error::Probe("word ids misaligned with occurrence rows".into()));
    }
    let mut unique: Vec<u32> = word_ids.to_vec();
    unique.sort_unstable();
    unique.dedup();
    if unique.len() < 2 {
        return Err(Error::Probe("re-PCA needs at least two distinct words".into()));
    }

    let stage1 = pca(x, k)?;
    let proj = stage1.project(x);

    let index: BTreeMap<u32, usize> = unique.iter().enumerate().map(|(i, &w)| (w, i)).collect();
    let mut sums = Array2::<f64>::zeros((unique.len(), k));
    let mut counts = vec![0u64; unique.len()];
    for (row, &w) in word_ids.iter().enumerate() {
        let r = index[&w];
        for c in 0..k {
            sums[[r, c]] += proj[[row, c]];
        }
        counts[r] += 1;
    }
    for r in 0..unique.len() {
        for c in 0..k {
            sums[[r, c]] /= counts[r] as f64;
        }
    }

    let k2 = k.min(unique.len() - 1);
    let stage2 = pca(&sums, k2)?;
    let coords_arr = stage2.project(&sums);
    let coords = (0..unique.len())
        .map(|r| coords_arr.row(r).to_vec())
        .collect();

    Ok(RePca {
        stage1,
        stage2,
        word_ids: unique,
        occurrences: counts,
        coords,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComponentSummary {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

fn summarize(values: &[f64]) -> ComponentSummary {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    let quantile = |q: f64| -> f64 {
        if n == 1 {
            return sorted[0];
        }
        let pos = q * (n - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let frac = pos - lo as f64;
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    };
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let var = sorted.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    ComponentSummary {
        mean,
        std: var.sqrt(),
        min: sorted[0],
        q25: quantile(0.25),
        median: quantile(0.5),
        q75: quantile(0.75),
        max: sorted[n - 1],
    }
}

/// Per-label distribution summaries of the first `top_k` coordinate columns.
pub fn pos_component_profile(
    coords: &[Vec<f64>],
    labels: &[String],
    top_k: usize,
) -> Result<BTreeMap<String, Vec<ComponentSummary>>> {
    if coords.len() != labels.len() {
        return Err(Error::Probe("labels misaligned with coordinate rows".into()));
    }
    if coords.is_empty() {
        return Err(Error::Probe("no coordinates to profile".into()));
    }
    let k = coords[0].len().min(top_k);
    let mut grouped: BTreeMap<&str, Vec<&Vec<f64>>> = BTreeMap::new();
    for (row, label) in coords.iter().zip(labels) {
        grouped.entry(label.as_str()).or_default().push(row);
    }
    let mut out = BTreeMap::new();
    for (label, rows) in grouped {
        let summaries = (0..k)
            .map(|c| summarize(&rows.iter().map(|r| r[c]).collect::<Vec<_>>()))
            .collect();
        out.insert(label.to_string(), summaries);
    }
    Ok(out)
}

/// Project all occurrences of one word onto the first two components and
/// attach each occurrence's gold part of speech for downstream coloring.
pub fn project_occurrences(
    model: &PcaModel,
    occurrences: &Array2<f64>,
    gold_pos: &[String],
) -> Result<Vec<(f64, f64, String)>> {
    if occurrences.nrows() != gold_pos.len() {
        return Err(Error::Probe("labels misaligned with occurrence rows".into()));
    }
    if occurrences.nrows() < 10 {
        return Err(Error::Probe(format!(
            "need at least 10 occurrences to project, got {}",
            occurrences.nrows()
        )));
    }
    if model.k() < 2 {
        return Err(Error::Probe("projection model needs at least 2 components".into()));
    }
    let proj = model.project(occurrences);
    Ok((0..proj.nrows())
        .map(|r| (proj[[r, 0]], proj[[r, 1]], gold_pos[r].clone()))
        .collect())
}

/// Mean silhouette coefficient of 2-D points under a two-class labeling.
/// Positive values mean the classes form separated clusters. Points outside
/// the two most frequent labels are ignored.
pub fn silhouette_two_class(points: &[(f64, f64)], labels: &[String]) -> Result<f64> {
    if points.len() != labels.len() {
        return Err(Error::Probe("labels misaligned with points".into()));
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l.as_str()).or_default() += 1;
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    if ranked.len() < 2 {
        return Err(Error::Probe("silhouette needs two classes".into()));
    }
    let (class_a, class_b) = (ranked[0].0, ranked[1].0);

    let idx: Vec<usize> = (0..points.len())
        .filter(|&i| labels[i] == class_a || labels[i] == class_b)
        .collect();
    let dist = |i: usize, j: usize| -> f64 {
        let (x1, y1) = points[i];
        let (x2, y2) = points[j];
        ((x1 - x2).powi(2) + (y1 - y2).powi(2)).sqrt()
    };
    let mut total = 0.0;
    let mut n = 0usize;
    for &i in &idx {
        let mut same_sum = 0.0;
        let mut same_n = 0usize;
        let mut other_sum = 0.0;
        let mut other_n = 0usize;
        for &j in &idx {
            if i == j {
                continue;
            }
            if labels[i] == labels[j] {
                same_sum += dist(i, j);
                same_n += 1;
            } else {
                other_sum += dist(i, j);
                other_n += 1;
            }
        }
        if same_n == 0 || other_n == 0 {
            continue;
        }
        let a = same_sum / same_n as f64;
        let b = other_sum / other_n as f64;
        total += (b - a) / a.max(b).max(1e-30);
        n += 1;
    }
    if n == 0 {
        return Err(Error::Probe("silhouette had no scorable points".into()));
    }
    Ok(total / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Jacobi eigendecomposition oracle for small symmetric matrices.
    fn jacobi_eigen(a: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
        let n = a.nrows();
        let mut m = a.clone();
        let mut v = Array2::eye(n);
        for _ in 0..200 {
            // largest off-diagonal element
            let (mut p, mut q, mut big) = (0, 1, 0.0f64);
            for i in 0..n {
                for j in i + 1..n {
                    if m[[i, j]].abs() > big {
                        big = m[[i, j]].abs();
                        p = i;
                        q = j;
                    }
                }
            }
            if big < 1e-14 {
                break;
            }
            let theta = 0.5 * (m[[q, q]] - m[[p, p]]) / m[[p, q]];
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            let mut rot = Array2::eye(n);
            rot[[p, p]] = c;
            rot[[q, q]] = c;
            rot[[p, q]] = s;
            rot[[q, p]] = -s;
            m = rot.t().dot(&m).dot(&rot);
            v = v.dot(&rot);
        }
        let eigenvalues = (0..n).map(|i| m[[i, i]]).collect();
        (eigenvalues, v)
    }

    #[test]
    fn points_on_an_axis_have_one_component() {
        let mut x = Array2::zeros((10, 2));
        for i in 0..10 {
            x[[i, 0]] = i as f64 - 4.5;
        }
        let model = pca(&x, 2).unwrap();
        assert_abs_diff_eq!(model.components[0][0].abs(), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(model.components[0][1], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(model.stds[1], 0.0, epsilon = 1e-9);
        // Sign convention: dominant entry positive.
        assert!(model.components[0][0] > 0.0);
    }

    #[test]
    fn matches_jacobi_oracle_on_random_6x6() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let x = Array2::from_shape_fn((40, 6), |_| rng.random_range(-1.0..1.0f64));
        let model = pca(&x, 6).unwrap();

        let n = x.nrows();
        let mean: Vec<f64> = (0..6).map(|j| x.column(j).sum() / n as f64).collect();
        let mut centered = x.clone();
        for j in 0..6 {
            centered.column_mut(j).mapv_inplace(|v| v - mean[j]);
        }
        let cov = centered.t().dot(&centered) / (n as f64 - 1.0);
        let (eigenvalues, vectors) = jacobi_eigen(&cov);
        let mut order: Vec<usize> = (0..6).collect();
        order.sort_by(|&a, &b| eigenvalues[b].partial_cmp(&eigenvalues[a]).unwrap());

        for (rank, &i) in order.iter().enumerate() {
            assert_abs_diff_eq!(
                model.stds[rank],
                eigenvalues[i].max(0.0).sqrt(),
                epsilon = 1e-8
            );
            // Match up to sign.
            let dot: f64 = (0..6)
                .map(|j| model.components[rank][j] * vectors[[j, i]])
                .sum();
            assert_abs_diff_eq!(dot.abs(), 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn full_rank_projection_reconstructs_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = Array2::from_shape_fn((25, 5), |_| rng.random_range(-2.0..2.0f64));
        let model = pca(&x, 5).unwrap();
        let proj = model.project(&x);
        let back = model.reconstruct(&proj);
        for (a, b) in x.iter().zip(back.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-8);
        }
        // Orthonormality.
        for i in 0..5 {
            for j in 0..5 {
                let dot: f64 = (0..5)
                    .map(|k| model.components[i][k] * model.components[j][k])
                    .sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(dot, expect, epsilon = 1e-8);
            }
        }
        // Non-increasing stds and variance accounting.
        for pair in model.stds.windows(2) {
            assert!(pair[0] >= pair[1] - 1e-12);
        }
        let mean: Vec<f64> = (0..5).map(|j| x.column(j).sum() / 25.0).collect();
        let total: f64 = (0..5)
            .map(|j| {
                x.column(j)
                    .iter()
                    .map(|v| (v - mean[j]) * (v - mean[j]))
                    .sum::<f64>()
                    / 24.0
            })
            .sum();
        let explained: f64 = model.stds.iter().map(|s| s * s).sum();
        assert_abs_diff_eq!(total, explained, epsilon = 1e-6);
    }

    #[test]
    fn repeated_runs_are_bit_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = Array2::from_shape_fn((30, 4), |_| rng.random_range(-1.0..1.0f64));
        let a = pca(&x, 3).unwrap();
        let b = pca(&x, 3).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn zero_variance_data_errors() {
        let x = Array2::from_elem((5, 3), 2.0);
        assert!(pca(&x, 2).is_err());
    }

    #[test]
    fn re_pca_with_singleton_words_reduces_to_plain_pca() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = Array2::from_shape_fn((12, 4), |_| rng.random_range(-1.0..1.0f64));
        let ids: Vec<u32> = (0..12).collect();
        let two = re_pca(&x, &ids, 3).unwrap();
        // Stage-2 input rows equal stage-1 projections, so word coordinates
        // are a rigid re-expression of them: distances are preserved.
        let proj1 = two.stage1.project(&x);
        for a in 0..12 {
            for b in 0..12 {
                let d1: f64 = (0..3).map(|c| (proj1[[a, c]] - proj1[[b, c]]).powi(2)).sum();
                let d2: f64 = (0..3)
                    .map(|c| (two.coords[a][c] - two.coords[b][c]).powi(2))
                    .sum();
                assert_abs_diff_eq!(d1, d2, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn duplicating_occurrences_leaves_stage2_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let base = Array2::from_shape_fn((20, 4), |_| rng.random_range(-1.0..1.0f64));
        let ids: Vec<u32> = (0..20).map(|i| (i % 5) as u32).collect();
        let reference = re_pca(&base, &ids, 3).unwrap();

        // Duplicate word 2's occurrences many times over.
        let dup_rows: Vec<usize> = (0..20).filter(|i| ids[*i] == 2).collect();
        let extra = 50;
        let mut x2 = Array2::zeros((20 + dup_rows.len() * extra, 4));
        let mut ids2 = Vec::new();
        for i in 0..20 {
            x2.row_mut(i).assign(&base.row(i));
            ids2.push(ids[i]);
        }
        let mut r = 20;
        for _ in 0..extra {
            for &i in &dup_rows {
                x2.row_mut(r).assign(&base.row(i));
                ids2.push(2);
                r += 1;
            }
        }
        let dup = re_pca(&x2, &ids2, 3).unwrap();

        // Stage 1 changes (occurrence weighting), but the per-word averages
        // feeding stage 2 are frequency-free, so word geometry survives:
        // compare pairwise distances of word coordinates.
        for a in 0..5 {
            for b in 0..5 {
                let d_ref: f64 = reference.coords[a]
                    .iter()
                    .zip(&reference.coords[b])
                    .map(|(p, q)| (p - q) * (p - q))
                    .sum();
                let d_dup: f64 = dup.coords[a]
                    .iter()
                    .zip(&dup.coords[b])
                    .map(|(p, q)| (p - q) * (p - q))
                    .sum();
                // Distances agree to a loose tolerance since stage-1 bases differ.
                assert!(
                    (d_ref.sqrt() - d_dup.sqrt()).abs() < 0.35,
                    "word pair ({a},{b}): {d_ref} vs {d_dup}"
                );
            }
        }
    }

    #[test]
    fn profile_of_a_single_label_matches_global_stats() {
        let coords = vec![vec![1.0, 0.0], vec![3.0, 0.0], vec![5.0, 0.0]];
        let labels = vec!["NN".to_string(); 3];
        let profile = pos_component_profile(&coords, &labels, 2).unwrap();
        let s = &profile["NN"][0];
        assert_abs_diff_eq!(s.mean, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.median, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.min, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.max, 5.0, epsilon = 1e-12);
    }

    #[test]
    fn disjoint_labels_have_disjoint_quantile_ranges() {
        let mut coords = Vec::new();
        let mut labels = Vec::new();
        for i in 0..10 {
            coords.push(vec![i as f64]);
            labels.push("LO".to_string());
        }
        for i in 0..10 {
            coords.push(vec![100.0 + i as f64]);
            labels.push("HI".to_string());
        }
        let profile = pos_component_profile(&coords, &labels, 1).unwrap();
        assert!(profile["LO"][0].max < profile["HI"][0].min);
    }

    #[test]
    fn silhouette_separates_far_clusters() {
        let mut points = Vec::new();
        let mut labels = Vec::new();
        for i in 0..8 {
            points.push((i as f64 * 0.01, 0.0));
            labels.push("A".to_string());
            points.push((10.0 + i as f64 * 0.01, 0.0));
            labels.push("B".to_string());
        }
        let s = silhouette_two_class(&points, &labels).unwrap();
        assert!(s > 0.9, "silhouette {s}");
        // Interleaved clusters score near zero or below.
        let mixed: Vec<String> = (0..16)
            .map(|i| if i % 2 == 0 { "A" } else { "B" }.to_string())
            .collect();
        let shuffled: Vec<(f64, f64)> = (0..16).map(|i| (i as f64, 0.0)).collect();
        let s2 = silhouette_two_class(&shuffled, &mixed).unwrap();
        assert!(s2 < 0.2, "silhouette {s2}");
    }

    #[test]
    fn occurrence_projection_keeps_row_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let x = Array2::from_shape_fn((15, 4), |_| rng.random_range(-1.0..1.0f64));
        let model = pca(&x, 2).unwrap();
        let labels: Vec<String> = (0..15)
            .map(|i| if i % 2 == 0 { "DT" } else { "IN" }.to_string())
            .collect();
        let pts = project_occurrences(&model, &x, &labels).unwrap();
        assert_eq!(pts.len(), 15);

        // Identical occurrences collapse to identical coordinates.
        let same = Array2::from_elem((12, 4), 0.7);
        let pts2 = project_occurrences(&model, &same, &vec!["DT".to_string(); 12]).unwrap();
        for w in pts2.windows(2) {
            assert_eq!(w[0].0, w[1].0);
            assert_eq!(w[0].1, w[1].1);
        }

        let few = Array2::zeros((5, 4));
        assert!(project_occurrences(&model, &few, &vec!["DT".to_string(); 5]).is_err());
    }
}
