//! Linear subspace probes: ordinary least squares, Lasso by cyclic
//! coordinate descent, and L1-regularized logistic regression by proximal
//! gradient with backtracking.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::stats::pearson;
use crate::error::{Error, Result};

/// Weights below this magnitude count as zero for sparsity reporting.
pub const NNZ_EPS: f64 = 1e-8;

const CONVERGENCE_TOL: f64 = 1e-6;
const MAX_SWEEPS: usize = 10_000;

/// Default inverse-regularization ladder for the logistic probe.
pub const LOGISTIC_C_LADDER: [f64; 6] = [3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5];

/// A fitted linear probe in the original (unstandardized) coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearProbe {
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// Regularization constant: lambda for Lasso, C for logistic, 0 for OLS.
    pub strength: f64,
    /// Count of weights with |w| > 1e-8.
    pub nnz: usize,
    /// Fit quality: Pearson r of predictions (regression) or accuracy
    /// (classification) on the data this probe was scored against.
    pub metric: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub metric_in_sample: Option<f64>,
    pub iterations: usize,
    pub jitter_applied: bool,
    /// Objective value after each sweep / accepted proximal step.
    #[serde(skip)]
    pub objective_path: Vec<f64>,
}

impl LinearProbe {
    pub fn predict(&self, x: &Array2<f64>) -> Vec<f64> {
        let w = Array1::from(self.weights.clone());
        (x.dot(&w) + self.intercept).to_vec()
    }

    /// Class probabilities under the logistic link.
    pub fn predict_proba(&self, x: &Array2<f64>) -> Vec<f64> {
        self.predict(x)
            .into_iter()
            .map(|z| 1.0 / (1.0 + (-z).exp()))
            .collect()
    }

    fn count_nnz(weights: &[f64]) -> usize {
        weights.iter().filter(|w| w.abs() > NNZ_EPS).count()
    }
}

fn validate_xy(x: &Array2<f64>, y_len: usize) -> Result<()> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::Probe("empty design matrix".into()));
    }
    if x.nrows() != y_len {
        return Err(Error::Probe(format!(
            "{} rows in the design but {} targets",
            x.nrows(),
            y_len
        )));
    }
    Ok(())
}

/// Column means of a matrix.
fn column_means(x: &Array2<f64>) -> Vec<f64> {
    let n = x.nrows() as f64;
    (0..x.ncols()).map(|j| x.column(j).sum() / n).collect()
}

/// Solve A w = b for symmetric positive-definite A by Cholesky; None when a
/// pivot collapses (rank deficiency).
fn cholesky_solve(a: &Array2<f64>, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.nrows();
    let mut l = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[[i, j]];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                // A pivot collapsing far below its own diagonal scale marks
                // rank deficiency.
                if sum <= 1e-10 * a[[i, i]].abs().max(1e-30) {
                    return None;
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    // forward then back substitution
    let mut z = vec![0.0f64; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * n + k] * z[k];
        }
        z[i] = sum / l[i * n + i];
    }
    let mut w = vec![0.0f64; n];
    for i in (0..n).rev() {
        let mut sum = z[i];
        for k in i + 1..n {
            sum -= l[k * n + i] * w[k];
        }
        w[i] = sum / l[i * n + i];
    }
    Some(w)
}

/// Least-squares fit of y on X with an intercept.
///
/// A rank-deficient normal system is retried with `jitter` added to the
/// diagonal when one is supplied (the fit is flagged), and is an error
/// otherwise. The metric is the Pearson r between fitted and true targets.
pub fn ols(x: &Array2<f64>, y: &[f64], jitter: Option<f64>) -> Result<LinearProbe> {
    validate_xy(x, y.len())?;
    let n = x.nrows();
    let d = x.ncols();
    let mean_x = column_means(x);
    let mean_y = y.iter().sum::<f64>() / n as f64;

    let mut xc = x.clone();
    for j in 0..d {
        xc.column_mut(j).mapv_inplace(|v| v - mean_x[j]);
    }
    let gram = xc.t().dot(&xc);
    let rhs: Vec<f64> = (0..d)
        .map(|j| {
            xc.column(j)
                .iter()
                .zip(y)
                .map(|(&v, &t)| v * (t - mean_y))
                .sum()
        })
        .collect();

    let (weights, jitter_applied) = match cholesky_solve(&gram, &rhs) {
        Some(w) => (w, false),
        None => {
            let eps = jitter.ok_or_else(|| {
                Error::Probe(
                    "normal equations are rank deficient (collinear or constant columns); \
                     supply a ridge jitter to proceed"
                        .into(),
                )
            })?;
            let mut damped = gram;
            for j in 0..d {
                damped[[j, j]] += eps;
            }
            let w = cholesky_solve(&damped, &rhs).ok_or_else(|| {
                Error::Probe("normal equations remain singular even with jitter".into())
            })?;
            (w, true)
        }
    };

    let intercept = mean_y - weights.iter().zip(&mean_x).map(|(w, m)| w * m).sum::<f64>();
    let probe = LinearProbe {
        nnz: LinearProbe::count_nnz(&weights),
        weights,
        intercept,
        strength: 0.0,
        metric: 0.0,
        metric_in_sample: None,
        iterations: 1,
        jitter_applied,
        objective_path: Vec::new(),
    };
    let fitted = probe.predict(x);
    Ok(LinearProbe {
        metric: pearson(&fitted, y),
        ..probe
    })
}

struct Standardized {
    x: Array2<f64>,
    means: Vec<f64>,
    sds: Vec<f64>,
    /// Columns with non-zero variance; constant columns are frozen at 0.
    active: Vec<bool>,
}

fn standardize(x: &Array2<f64>) -> Standardized {
    let n = x.nrows() as f64;
    let means = column_means(x);
    let mut xs = x.clone();
    let mut sds = Vec::with_capacity(x.ncols());
    let mut active = Vec::with_capacity(x.ncols());
    for j in 0..x.ncols() {
        let mut col = xs.column_mut(j);
        col.mapv_inplace(|v| v - means[j]);
        let sd = (col.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
        if sd > 1e-12 {
            col.mapv_inplace(|v| v / sd);
            active.push(true);
        } else {
            col.fill(0.0);
            active.push(false);
        }
        sds.push(sd);
    }
    Standardized {
        x: xs,
        means,
        sds,
        active,
    }
}

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Lasso fit: minimize (1/2n)|y - Xw - w0|^2 + lambda |w|_1 by cyclic
/// coordinate descent on internally standardized columns, with weights
/// mapped back to the original scale.
pub fn lasso(x: &Array2<f64>, y: &[f64], lambda: f64) -> Result<LinearProbe> {
    validate_xy(x, y.len())?;
    if lambda < 0.0 {
        return Err(Error::invalid("lasso penalty must be non-negative"));
    }
    let n = x.nrows();
    let d = x.ncols();
    let std = standardize(x);
    let mean_y = y.iter().sum::<f64>() / n as f64;
    let yc: Vec<f64> = y.iter().map(|v| v - mean_y).collect();

    // Covariance-form coordinate descent: with G = X'X/n and c = X'y/n the
    // per-coordinate work is O(d) rather than O(n), and the iterates are
    // identical to the residual form.
    let gram = std.x.t().dot(&std.x) / n as f64;
    let yy: f64 = yc.iter().map(|v| v * v).sum();
    let cy: Vec<f64> = (0..d)
        .map(|j| {
            std.x
                .column(j)
                .iter()
                .zip(&yc)
                .map(|(&a, &t)| a * t)
                .sum::<f64>()
                / n as f64
        })
        .collect();

    let mut w = vec![0.0f64; d];
    let mut q = cy.clone(); // q_j = x_j . r / n, maintained incrementally
    // Residual norm and dual quantities from the quadratic identities:
    // r'r = y'y - 2n w.c + n w'Gw, and r'y = r'r + n w.q.
    let stats_of = |w: &[f64], q: &[f64]| -> (f64, f64, f64) {
        let mut w_gram_w = 0.0;
        for j in 0..d {
            if w[j] == 0.0 {
                continue;
            }
            let mut dot = 0.0;
            for k in 0..d {
                dot += gram[[j, k]] * w[k];
            }
            w_gram_w += w[j] * dot;
        }
        let w_dot_c: f64 = w.iter().zip(&cy).map(|(a, b)| a * b).sum();
        let rr = (yy - 2.0 * n as f64 * w_dot_c + n as f64 * w_gram_w).max(0.0);
        let xtr_inf = q.iter().map(|v| v.abs()).fold(0.0, f64::max) * n as f64;
        let r_dot_y = rr + n as f64 * w.iter().zip(q).map(|(a, b)| a * b).sum::<f64>();
        (rr, xtr_inf, r_dot_y)
    };

    let mut objective_path = Vec::new();
    let mut sweeps = 0;
    let mut converged = false;
    let mut last_gap = f64::INFINITY;
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        let mut max_update = 0.0f64;
        for j in 0..d {
            if !std.active[j] {
                continue;
            }
            // Unit-variance columns make the curvature x_j.x_j/n exactly 1.
            let rho = w[j] + q[j];
            let new_w = soft_threshold(rho, lambda);
            let delta = new_w - w[j];
            if delta != 0.0 {
                for k in 0..d {
                    q[k] -= gram[[k, j]] * delta;
                }
                w[j] = new_w;
            }
            max_update = max_update.max(delta.abs());
        }
        let (rr, xtr_inf, r_dot_y) = stats_of(&w, &q);
        let obj = rr / (2.0 * n as f64) + lambda * w.iter().map(|v| v.abs()).sum::<f64>();
        objective_path.push(obj);
        if max_update <= CONVERGENCE_TOL {
            converged = true;
            break;
        }
        if lambda > 0.0 {
            // Duality gap from the dual point theta = s*r, scaled into the
            // feasible set ||X' theta||_inf <= n*lambda.
            let lam_n = lambda * n as f64;
            let s = if xtr_inf > lam_n { lam_n / xtr_inf } else { 1.0 };
            let primal = 0.5 * rr + lam_n * w.iter().map(|v| v.abs()).sum::<f64>();
            let dual = s * r_dot_y - 0.5 * s * s * rr;
            last_gap = (primal - dual) / n as f64;
            if last_gap <= CONVERGENCE_TOL * obj.abs().max(1.0) {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        return Err(Error::Probe(format!(
            "lasso did not converge in {MAX_SWEEPS} sweeps; duality gap {last_gap:.3e}"
        )));
    }

    // Back to the original scale.
    let weights: Vec<f64> = (0..d)
        .map(|j| if std.active[j] { w[j] / std.sds[j] } else { 0.0 })
        .collect();
    let intercept = mean_y
        - weights
            .iter()
            .zip(&std.means)
            .map(|(w, m)| w * m)
            .sum::<f64>();
    let probe = LinearProbe {
        nnz: LinearProbe::count_nnz(&weights),
        weights,
        intercept,
        strength: lambda,
        metric: 0.0,
        metric_in_sample: None,
        iterations: sweeps,
        jitter_applied: false,
        objective_path,
    };
    let fitted = probe.predict(x);
    Ok(LinearProbe {
        metric: pearson(&fitted, y),
        ..probe
    })
}

/// The smallest penalty at which the Lasso solution is exactly zero,
/// computed on standardized columns: max_j |x_j . (y - mean(y))| / n.
pub fn lasso_null_threshold(x: &Array2<f64>, y: &[f64]) -> f64 {
    let n = x.nrows();
    let std = standardize(x);
    let mean_y = y.iter().sum::<f64>() / n as f64;
    (0..x.ncols())
        .map(|j| {
            std.x
                .column(j)
                .iter()
                .zip(y)
                .map(|(&a, &t)| a * (t - mean_y))
                .sum::<f64>()
                .abs()
                / n as f64
        })
        .fold(0.0, f64::max)
}

/// L1 logistic fit: minimize sum_i log(1 + exp(-s_i z_i)) + (1/C) |w|_1 with
/// z = Xw + b, by ISTA with backtracking. The intercept is unpenalized.
/// Labels are {0,1}; both classes must be present. The metric is in-sample
/// accuracy (see [`l1_logistic_holdout`] for the split variant).
pub fn l1_logistic(x: &Array2<f64>, labels: &[bool], c: f64) -> Result<LinearProbe> {
    validate_xy(x, labels.len())?;
    if c <= 0.0 {
        return Err(Error::invalid("C must be positive"));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    if pos == 0 || pos == labels.len() {
        return Err(Error::Probe(
            "logistic probe needs both classes in the training labels".into(),
        ));
    }

    let n = x.nrows();
    let d = x.ncols();
    let std = standardize(x);
    let signs: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();
    let penalty = 1.0 / c;

    let log_loss = |w: &Array1<f64>, b: f64| -> f64 {
        let z = std.x.dot(w) + b;
        z.iter()
            .zip(&signs)
            .map(|(&zi, &si)| {
                let m = -si * zi;
                // log(1+exp(m)) without overflow
                if m > 30.0 {
                    m
                } else {
                    m.exp().ln_1p()
                }
            })
            .sum()
    };
    let gradient = |w: &Array1<f64>, b: f64| -> (Array1<f64>, f64) {
        let z = std.x.dot(w) + b;
        let mut coef = Array1::zeros(n);
        for i in 0..n {
            // d/dz log(1+exp(-s z)) = -s * sigmoid(-s z)
            coef[i] = -signs[i] / (1.0 + (signs[i] * z[i]).exp());
        }
        let gw = std.x.t().dot(&coef);
        let gb = coef.sum();
        (gw, gb)
    };

    let mut w = Array1::<f64>::zeros(d);
    let mut b = 0.0f64;
    let mut g_val = log_loss(&w, b);
    let mut step = 4.0 / (n as f64).max(1.0); // from the 1/4 curvature bound of the logistic loss
    let mut objective_path = vec![g_val + penalty * w.iter().map(|v| v.abs()).sum::<f64>()];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < MAX_SWEEPS {
        iterations += 1;
        let (gw, gb) = gradient(&w, b);
        // Backtracking on the smooth part.
        let mut accepted = false;
        for _ in 0..60 {
            let mut w_new = Array1::zeros(d);
            for j in 0..d {
                if std.active[j] {
                    w_new[j] = soft_threshold(w[j] - step * gw[j], step * penalty);
                }
            }
            let b_new = b - step * gb;
            let g_new = log_loss(&w_new, b_new);
            let dw = &w_new - &w;
            let db = b_new - b;
            let quad = g_val
                + gw.dot(&dw)
                + gb * db
                + (dw.dot(&dw) + db * db) / (2.0 * step);
            if g_new <= quad + 1e-12 {
                let max_update = dw
                    .iter()
                    .map(|v| v.abs())
                    .fold(db.abs(), f64::max);
                w = w_new;
                b = b_new;
                g_val = g_new;
                objective_path.push(g_val + penalty * w.iter().map(|v| v.abs()).sum::<f64>());
                accepted = true;
                if max_update <= CONVERGENCE_TOL {
                    converged = true;
                }
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return Err(Error::numeric(None, "logistic line search failed"));
        }
        if converged {
            break;
        }
        step *= 1.5; // allow the step to grow back between iterations
    }
    if !converged {
        return Err(Error::Probe(format!(
            "logistic probe did not converge in {MAX_SWEEPS} proximal steps"
        )));
    }

    let weights: Vec<f64> = (0..d)
        .map(|j| if std.active[j] { w[j] / std.sds[j] } else { 0.0 })
        .collect();
    let intercept = b
        - weights
            .iter()
            .zip(&std.means)
            .map(|(w, m)| w * m)
            .sum::<f64>();
    let probe = LinearProbe {
        nnz: LinearProbe::count_nnz(&weights),
        weights,
        intercept,
        strength: c,
        metric: 0.0,
        metric_in_sample: None,
        iterations,
        jitter_applied: false,
        objective_path,
    };
    let acc = accuracy(&probe, x, labels);
    Ok(LinearProbe {
        metric: acc,
        metric_in_sample: Some(acc),
        ..probe
    })
}

pub fn accuracy(probe: &LinearProbe, x: &Array2<f64>, labels: &[bool]) -> f64 {
    let proba = probe.predict_proba(x);
    let correct = proba
        .iter()
        .zip(labels)
        .filter(|(&p, &l)| (p >= 0.5) == l)
        .count();
    correct as f64 / labels.len() as f64
}

fn take_rows(x: &Array2<f64>, rows: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros((rows.len(), x.ncols()));
    for (r, &i) in rows.iter().enumerate() {
        out.row_mut(r).assign(&x.row(i));
    }
    out
}

/// Fit the logistic probe on 80% of sentences and score it on the held-out
/// 20% (every fifth distinct sentence id). `metric` is held-out accuracy;
/// `metric_in_sample` the training accuracy.
pub fn l1_logistic_holdout(
    x: &Array2<f64>,
    labels: &[bool],
    sentence: &[u32],
    c: f64,
) -> Result<LinearProbe> {
    validate_xy(x, labels.len())?;
    if sentence.len() != labels.len() {
        return Err(Error::Probe("sentence ids misaligned with labels".into()));
    }
    let (train, test) = super::holdout_rows_by_sentence(sentence, 5);
    if train.is_empty() || test.is_empty() {
        return Err(Error::Probe("holdout split left an empty side".into()));
    }
    let x_train = take_rows(x, &train);
    let y_train: Vec<bool> = train.iter().map(|&i| labels[i]).collect();
    let x_test = take_rows(x, &test);
    let y_test: Vec<bool> = test.iter().map(|&i| labels[i]).collect();

    let mut probe = l1_logistic(&x_train, &y_train, c)?;
    probe.metric_in_sample = Some(accuracy(&probe, &x_train, &y_train));
    probe.metric = accuracy(&probe, &x_test, &y_test);
    Ok(probe)
}

/// OLS fit on 80% of sentences, scored by Pearson r on the held-out 20%.
pub fn ols_holdout(
    x: &Array2<f64>,
    y: &[f64],
    sentence: &[u32],
    jitter: Option<f64>,
) -> Result<LinearProbe> {
    validate_xy(x, y.len())?;
    let (train, test) = super::holdout_rows_by_sentence(sentence, 5);
    if train.is_empty() || test.is_empty() {
        return Err(Error::Probe("holdout split left an empty side".into()));
    }
    let x_train = take_rows(x, &train);
    let y_train: Vec<f64> = train.iter().map(|&i| y[i]).collect();
    let x_test = take_rows(x, &test);
    let y_test: Vec<f64> = test.iter().map(|&i| y[i]).collect();

    let mut probe = ols(&x_train, &y_train, jitter)?;
    probe.metric_in_sample = Some(probe.metric);
    let fitted = probe.predict(&x_test);
    probe.metric = pearson(&fitted, &y_test);
    Ok(probe)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_design(n: usize, d: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, d), |_| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn exact_linear_target_recovers_r_one() {
        let x = random_design(60, 4, 1);
        let y: Vec<f64> = (0..60)
            .map(|i| 2.0 * x[[i, 0]] - 0.5 * x[[i, 2]] + 3.0)
            .collect();
        let probe = ols(&x, &y, None).unwrap();
        assert_abs_diff_eq!(probe.metric, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(probe.weights[0], 2.0, epsilon = 1e-8);
        assert_abs_diff_eq!(probe.weights[1], 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(probe.intercept, 3.0, epsilon = 1e-8);
        assert!(!probe.jitter_applied);
    }

    #[test]
    fn orthogonal_centered_target_gives_zero_weights() {
        // Columns are +/-1 patterns; y is orthogonal to both and centered.
        let x = ndarray::array![[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]];
        let y = vec![1.0, -1.0, -1.0, 1.0];
        let probe = ols(&x, &y, None).unwrap();
        assert_abs_diff_eq!(probe.weights[0], 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(probe.weights[1], 0.0, epsilon = 1e-10);
    }

    #[test]
    fn rank_deficiency_errors_without_jitter_and_flags_with_it() {
        let mut x = random_design(30, 3, 2);
        for i in 0..30 {
            x[[i, 2]] = x[[i, 0]]; // duplicated column
        }
        let y: Vec<f64> = (0..30).map(|i| x[[i, 0]] + 0.1).collect();
        let err = ols(&x, &y, None).unwrap_err();
        assert!(err.to_string().contains("rank deficient"));
        let probe = ols(&x, &y, Some(1e-8)).unwrap();
        assert!(probe.jitter_applied);
        assert_abs_diff_eq!(probe.metric, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn lasso_at_zero_penalty_matches_ols() {
        let x = random_design(80, 5, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let y: Vec<f64> = (0..80)
            .map(|i| 1.5 * x[[i, 1]] - 0.7 * x[[i, 3]] + 0.05 * rng.random_range(-1.0..1.0))
            .collect();
        let reference = ols(&x, &y, None).unwrap();
        let sparse = lasso(&x, &y, 0.0).unwrap();
        for (a, b) in reference.weights.iter().zip(&sparse.weights) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-4);
        }
        assert_abs_diff_eq!(reference.intercept, sparse.intercept, epsilon = 1e-4);
    }

    #[test]
    fn lasso_null_threshold_zeroes_everything() {
        let x = random_design(50, 4, 4);
        let y: Vec<f64> = (0..50).map(|i| x[[i, 0]] * 0.8 + 0.3).collect();
        let lam = lasso_null_threshold(&x, &y);
        let probe = lasso(&x, &y, lam * 1.0001).unwrap();
        assert_eq!(probe.nnz, 0);
        assert!(probe.weights.iter().all(|&w| w == 0.0));
        // Just below the threshold something survives.
        let below = lasso(&x, &y, lam * 0.99).unwrap();
        assert!(below.nnz >= 1);
    }

    #[test]
    fn lasso_objective_is_monotone_and_matches_grid_oracle() {
        // Two features: x0 carries the signal, x1 is noise. A moderate
        // penalty keeps only x0. The oracle scans a fine weight grid on the
        // standardized problem.
        let n = 40;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut x = Array2::zeros((n, 2));
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let signal: f64 = rng.random_range(-1.0..1.0);
            let noise: f64 = rng.random_range(-1.0..1.0);
            x[[i, 0]] = signal;
            x[[i, 1]] = noise;
            y.push(signal);
        }
        let lambda = 0.2;
        let probe = lasso(&x, &y, lambda).unwrap();
        assert_eq!(probe.nnz, 1);
        assert!(probe.weights[0].abs() > NNZ_EPS);
        assert_eq!(probe.weights[1], 0.0);
        for pair in probe.objective_path.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12, "objective increased: {pair:?}");
        }

        // Grid-search oracle over standardized weights.
        let std = standardize(&x);
        let mean_y = y.iter().sum::<f64>() / n as f64;
        let objective = |w0: f64, w1: f64| -> f64 {
            let mut sse = 0.0;
            for i in 0..n {
                let pred = std.x[[i, 0]] * w0 + std.x[[i, 1]] * w1;
                let r = (y[i] - mean_y) - pred;
                sse += r * r;
            }
            sse / (2.0 * n as f64) + lambda * (w0.abs() + w1.abs())
        };
        let mut best = (0.0, 0.0, f64::INFINITY);
        let mut w0 = -1.5;
        while w0 <= 1.5 {
            let mut w1 = -0.5;
            while w1 <= 0.5 {
                let o = objective(w0, w1);
                if o < best.2 {
                    best = (w0, w1, o);
                }
                w1 += 0.001;
            }
            w0 += 0.001;
        }
        let w0_fit = probe.weights[0] * std.sds[0];
        assert_abs_diff_eq!(w0_fit, best.0, epsilon = 2e-3);
        assert_abs_diff_eq!(probe.weights[1], best.1, epsilon = 2e-3);
    }

    fn separable_data() -> (Array2<f64>, Vec<bool>) {
        let mut x = Array2::zeros((40, 2));
        let mut labels = Vec::new();
        for i in 0..40 {
            let side = i % 2 == 0;
            let base = if side { 1.0 } else { -1.0 };
            x[[i, 0]] = base + 0.1 * ((i as f64 * 0.37).sin());
            x[[i, 1]] = 0.5 * ((i as f64 * 0.73).cos());
            labels.push(side);
        }
        (x, labels)
    }

    #[test]
    fn separable_data_reaches_full_accuracy() {
        let (x, labels) = separable_data();
        let probe = l1_logistic(&x, &labels, 1e3).unwrap();
        assert_abs_diff_eq!(probe.metric, 1.0, epsilon = 1e-12);
        for pair in probe.objective_path.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-9, "objective increased: {pair:?}");
        }
    }

    #[test]
    fn vanishing_c_shrinks_to_majority_class() {
        let mut x = Array2::zeros((30, 2));
        let mut labels = Vec::new();
        for i in 0..30 {
            x[[i, 0]] = (i as f64 * 0.91).sin();
            x[[i, 1]] = (i as f64 * 0.53).cos();
            labels.push(i % 3 == 0); // minority positives
        }
        let probe = l1_logistic(&x, &labels, 1e-9).unwrap();
        assert!(probe.weights.iter().all(|w| w.abs() < 1e-6));
        let majority = 20.0 / 30.0;
        assert_abs_diff_eq!(probe.metric, majority, epsilon = 1e-12);
        assert_eq!(probe.nnz, 0);
    }

    #[test]
    fn single_class_labels_error() {
        let x = random_design(10, 2, 5);
        let labels = vec![true; 10];
        assert!(l1_logistic(&x, &labels, 1.0).is_err());
    }

    #[test]
    fn ladder_endpoints_are_monotone_in_nnz() {
        let x = random_design(200, 8, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let labels: Vec<bool> = (0..200)
            .map(|i| {
                let z = 2.0 * x[[i, 0]] - 1.0 * x[[i, 3]] + 0.3 * rng.random_range(-1.0..1.0);
                z > 0.0
            })
            .collect();
        let strong = l1_logistic(&x, &labels, LOGISTIC_C_LADDER[5]).unwrap();
        let weak = l1_logistic(&x, &labels, LOGISTIC_C_LADDER[0]).unwrap();
        assert!(
            strong.nnz <= weak.nnz,
            "nnz at C=1e-5 ({}) must not exceed nnz at C=3e-3 ({})",
            strong.nnz,
            weak.nnz
        );
    }

    #[test]
    fn holdout_split_reports_both_metrics() {
        let (x, labels) = separable_data();
        let sentence: Vec<u32> = (0..40).map(|i| (i / 4) as u32).collect();
        let probe = l1_logistic_holdout(&x, &labels, &sentence, 1e3).unwrap();
        assert_abs_diff_eq!(probe.metric, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(probe.metric_in_sample.unwrap(), 1.0, epsilon = 1e-12);
    }
}
