//! Window-quality evaluators: the ridge regression solver and one-vs-rest
//! classifier, the gradient-matching alternatives, and the neural-collapse
//! clusterability metric.

use crate::dataset::{FeatureMatrix, LabelVector, ScoredDataset, SubsetIndices};
use crate::windows::WindowSpec;
use crate::{Error, Result};
use nalgebra::{Cholesky, DMatrix, DVector};

/// One-vs-rest ridge solution for one window: column c classifies class c.
#[derive(Debug, Clone)]
pub struct RegressionSolution {
    /// (d+1) x C weight matrix.
    pub weights: DMatrix<f64>,
    pub lambda: f64,
    pub window: Option<WindowSpec>,
}

fn check_finite(x: &DMatrix<f64>, what: &str) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical(format!("non-finite input in {what}")));
    }
    Ok(())
}

/// Shared per-window factorization, reusable across the C one-vs-rest
/// targets: the Gram (dual, m x m) or covariance (primal, (d+1) x (d+1))
/// matrix is class-independent.
pub struct RidgeFactorization {
    columns: DMatrix<f64>,
    chol: Cholesky<f64, nalgebra::Dyn>,
    primal: bool,
}

impl RidgeFactorization {
    /// Factorizes lambda*I + X Xᵀ (primal, when d+1 <= m) or
    /// lambda*I + Xᵀ X (dual otherwise) once.
    pub fn new(columns: DMatrix<f64>, lambda: f64) -> Result<Self> {
        if lambda <= 0.0 {
            return Err(Error::numerical(format!("lambda must be positive, got {lambda}")));
        }
        check_finite(&columns, "ridge design matrix")?;
        let (d1, m) = columns.shape();
        let primal = d1 <= m;
        let sys = if primal {
            let mut a = &columns * columns.transpose();
            for i in 0..d1 {
                a[(i, i)] += lambda;
            }
            a
        } else {
            let mut a = columns.transpose() * &columns;
            for i in 0..m {
                a[(i, i)] += lambda;
            }
            a
        };
        let chol = Cholesky::new(sys).ok_or_else(|| {
            Error::numerical("Cholesky factorization failed on ridge system")
        })?;
        Ok(RidgeFactorization { columns, chol, primal })
    }

    /// Solves for one target vector y over the window columns.
    pub fn solve(&self, y: &DVector<f64>) -> DVector<f64> {
        if self.primal {
            // (lambda I + X Xᵀ)⁻¹ X y
            self.chol.solve(&(&self.columns * y))
        } else {
            // X (lambda I + Xᵀ X)⁻¹ y
            &self.columns * self.chol.solve(y)
        }
    }
}

/// Minimizes ||y - Xᵀw||² + lambda ||w||². `columns` is (d+1) x m with
/// samples as columns; the primal or dual form is picked by dimension.
pub fn solve_ridge(columns: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("non-finite target in ridge solve"));
    }
    Ok(RidgeFactorization::new(columns.clone(), lambda)?.solve(y))
}

/// Primal form (lambda I_{d+1} + X Xᵀ)⁻¹ X y, regardless of shape.
/// Exposed for the primal-dual equality check.
pub fn solve_ridge_primal(
    columns: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
) -> Result<DVector<f64>> {
    check_finite(columns, "ridge design matrix")?;
    let d1 = columns.nrows();
    let mut a = columns * columns.transpose();
    for i in 0..d1 {
        a[(i, i)] += lambda;
    }
    let chol = Cholesky::new(a)
        .ok_or_else(|| Error::numerical("Cholesky factorization failed (primal)"))?;
    Ok(chol.solve(&(columns * y)))
}

/// Dual form X (lambda I_m + Xᵀ X)⁻¹ y, regardless of shape.
pub fn solve_ridge_dual(
    columns: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
) -> Result<DVector<f64>> {
    check_finite(columns, "ridge design matrix")?;
    let m = columns.ncols();
    let mut a = columns.transpose() * columns;
    for i in 0..m {
        a[(i, i)] += lambda;
    }
    let chol = Cholesky::new(a)
        .ok_or_else(|| Error::numerical("Cholesky factorization failed (dual)"))?;
    Ok(columns * chol.solve(y))
}

/// Fits C binary {0,1} one-vs-rest ridge regressions on the subset,
/// sharing one factorization across classes.
pub fn fit_one_vs_rest(
    ds: &ScoredDataset,
    subset: &SubsetIndices,
    lambda: f64,
) -> Result<RegressionSolution> {
    let c_count = ds.labels().num_classes() as usize;
    if c_count < 2 {
        return Err(Error::validation("one-vs-rest needs at least 2 classes"));
    }
    let columns = ds.features().columns_for(subset.indices());
    let fact = RidgeFactorization::new(columns, lambda)?;
    let d1 = ds.features().d_plus_1();
    let mut weights = DMatrix::zeros(d1, c_count);
    for c in 0..c_count {
        let y = DVector::from_iterator(
            subset.m(),
            subset
                .indices()
                .iter()
                .map(|&i| if ds.labels().labels()[i] as usize == c { 1.0 } else { 0.0 }),
        );
        let w = fact.solve(&y);
        weights.set_column(c, &w);
    }
    Ok(RegressionSolution { weights, lambda, window: None })
}

/// Fraction of eval samples whose argmax_c wᵀf matches the label. Argmax
/// ties break toward the lowest class index.
pub fn proxy_accuracy(
    sol: &RegressionSolution,
    ds: &ScoredDataset,
    eval_indices: &[usize],
) -> Result<f64> {
    if eval_indices.is_empty() {
        return Err(Error::validation("empty evaluation set"));
    }
    let c_count = sol.weights.ncols();
    let d1 = sol.weights.nrows();
    let mut correct = 0usize;
    for &i in eval_indices {
        if i >= ds.n() {
            return Err(Error::validation(format!("eval index {i} out of range")));
        }
        let f = ds.features().row(i);
        let mut best_c = 0usize;
        let mut best_v = f64::NEG_INFINITY;
        for c in 0..c_count {
            let mut v = 0.0;
            for r in 0..d1 {
                v += sol.weights[(r, c)] * f[r];
            }
            if v > best_v {
                best_v = v;
                best_c = c;
            }
        }
        if best_c == ds.labels().labels()[i] as usize {
            correct += 1;
        }
    }
    Ok(correct as f64 / eval_indices.len() as f64)
}

/// Externally supplied per-sample surrogate gradients, one row per sample.
#[derive(Debug, Clone)]
pub struct GradientBundle {
    rows: Vec<Vec<f64>>,
}

impl GradientBundle {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::validation("gradient bundle must be non-empty"));
        }
        let p = rows[0].len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != p {
                return Err(Error::validation(format!("ragged gradient row {i}")));
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::validation(format!("non-finite gradient in row {i}")));
            }
        }
        Ok(GradientBundle { rows })
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    fn mean_of(&self, indices: &[usize]) -> Result<Vec<f64>> {
        if indices.is_empty() {
            return Err(Error::validation("empty index set for gradient mean"));
        }
        let p = self.rows[0].len();
        let mut mean = vec![0.0; p];
        for &i in indices {
            if i >= self.rows.len() {
                return Err(Error::validation(format!("gradient index {i} out of range")));
            }
            for (k, &v) in self.rows[i].iter().enumerate() {
                mean[k] += v;
            }
        }
        for v in &mut mean {
            *v /= indices.len() as f64;
        }
        Ok(mean)
    }
}

/// l2 distance between the mean gradient of the full set and the subset.
pub fn gradient_difference(
    g: &GradientBundle,
    full: &[usize],
    subset: &[usize],
) -> Result<f64> {
    let mv = g.mean_of(full)?;
    let ms = g.mean_of(subset)?;
    Ok(mv
        .iter()
        .zip(&ms)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

/// Cosine similarity between the two mean gradients.
pub fn gradient_similarity(
    g: &GradientBundle,
    full: &[usize],
    subset: &[usize],
) -> Result<f64> {
    let mv = g.mean_of(full)?;
    let ms = g.mean_of(subset)?;
    let nv = mv.iter().map(|v| v * v).sum::<f64>().sqrt();
    let ns = ms.iter().map(|v| v * v).sum::<f64>().sqrt();
    if nv == 0.0 || ns == 0.0 {
        return Err(Error::numerical(
            "cosine similarity undefined for zero mean gradient",
        ));
    }
    let dot: f64 = mv.iter().zip(&ms).map(|(a, b)| a * b).sum();
    Ok(dot / (nv * ns))
}

/// tr(Sigma_W Sigma_B†): within-class over inter-class feature
/// variability. Lower means better class clustering. Features here carry
/// no bias column. A single class yields Sigma_B = 0; the metric is
/// defined as 0 in that case.
pub fn neural_collapse_metric(
    features: &[Vec<f64>],
    labels: &LabelVector,
) -> Result<f64> {
    if features.is_empty() || features.len() != labels.len() {
        return Err(Error::validation(
            "feature/label count mismatch in neural-collapse metric",
        ));
    }
    let d = features[0].len();
    let k_count = labels.num_classes() as usize;
    let mut class_members: Vec<Vec<usize>> = vec![Vec::new(); k_count];
    for (i, &l) in labels.labels().iter().enumerate() {
        class_members[l as usize].push(i);
    }
    if class_members.iter().any(|m| m.is_empty()) {
        return Err(Error::validation("every class needs at least one sample"));
    }

    let mut class_means = vec![vec![0.0; d]; k_count];
    for (k, members) in class_members.iter().enumerate() {
        for &i in members {
            for (j, &v) in features[i].iter().enumerate() {
                class_means[k][j] += v;
            }
        }
        for v in &mut class_means[k] {
            *v /= members.len() as f64;
        }
    }
    let mut global_mean = vec![0.0; d];
    for k in 0..k_count {
        for j in 0..d {
            global_mean[j] += class_means[k][j] / k_count as f64;
        }
    }

    // Sigma_W = (1/K) sum_k (1/n_k) sum_i (f - mu_k)(f - mu_k)ᵀ
    let mut sigma_w = DMatrix::zeros(d, d);
    for (k, members) in class_members.iter().enumerate() {
        let scale = 1.0 / (k_count as f64 * members.len() as f64);
        for &i in members {
            let diff =
                DVector::from_iterator(d, (0..d).map(|j| features[i][j] - class_means[k][j]));
            sigma_w += scale * &diff * diff.transpose();
        }
    }
    // Sigma_B = (1/K) sum_k (mu_k - mu_G)(mu_k - mu_G)ᵀ
    let mut sigma_b = DMatrix::zeros(d, d);
    for k in 0..k_count {
        let diff =
            DVector::from_iterator(d, (0..d).map(|j| class_means[k][j] - global_mean[j]));
        sigma_b += (1.0 / k_count as f64) * &diff * diff.transpose();
    }

    let pinv = pseudo_inverse(&sigma_b);
    Ok((sigma_w * pinv).trace())
}

/// Moore-Penrose pseudo-inverse via SVD; singular values below
/// max_sigma * 1e-10 are treated as zero.
pub fn pseudo_inverse(a: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = a.clone().svd(true, true);
    let max_sigma = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cutoff = max_sigma * 1e-10;
    let u = svd.u.as_ref().unwrap();
    let vt = svd.v_t.as_ref().unwrap();
    let mut sigma_inv = DMatrix::zeros(vt.nrows(), u.ncols());
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff {
            sigma_inv[(i, i)] = 1.0 / s;
        }
    }
    vt.transpose() * sigma_inv * u.transpose()
}

/// Extracts the bias-free rows of a FeatureMatrix for the collapse metric.
pub fn strip_bias(features: &FeatureMatrix) -> Vec<Vec<f64>> {
    (0..features.n())
        .map(|i| {
            let row = features.row(i);
            row[..row.len() - 1].to_vec()
        })
        .collect()
}
