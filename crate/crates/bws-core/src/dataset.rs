//! Core domain types: features, labels, difficulty scores, and the
//! score-sorted dataset shared by every other module.

use crate::{Error, Result};
use nalgebra::DMatrix;

/// Row-major n x (d+1) feature matrix, double precision, with the bias
/// coordinate (a trailing 1) appended to every row.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n: usize,
    d_plus_1: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    /// Build from rows that do NOT carry the bias column; a trailing 1 is
    /// appended to each row.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::validation("feature matrix needs at least one row"));
        }
        let d = rows[0].len();
        if d == 0 {
            return Err(Error::validation("feature rows must be non-empty"));
        }
        let mut data = Vec::with_capacity(rows.len() * (d + 1));
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::validation(format!(
                    "ragged feature row {i}: expected {d} values, got {}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::validation(format!(
                        "non-finite feature at row {i}, column {j}"
                    )));
                }
                data.push(v);
            }
            data.push(1.0);
        }
        Ok(FeatureMatrix {
            n: rows.len(),
            d_plus_1: d + 1,
            data,
        })
    }

    /// Build from a flat row-major buffer that already includes the bias
    /// column.
    pub fn from_flat_with_bias(n: usize, d_plus_1: usize, data: Vec<f64>) -> Result<Self> {
        if n < 1 || d_plus_1 < 2 {
            return Err(Error::validation(format!(
                "feature matrix must have n >= 1 and d+1 >= 2, got n={n}, d+1={d_plus_1}"
            )));
        }
        if data.len() != n * d_plus_1 {
            return Err(Error::validation(format!(
                "feature buffer length {} does not match n*(d+1) = {}",
                data.len(),
                n * d_plus_1
            )));
        }
        let fm = FeatureMatrix { n, d_plus_1, data };
        for i in 0..n {
            let row = fm.row(i);
            if row[d_plus_1 - 1] != 1.0 {
                return Err(Error::validation(format!(
                    "bias coordinate of row {i} is {}, expected 1",
                    row[d_plus_1 - 1]
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::validation(format!(
                        "non-finite feature at row {i}, column {j}"
                    )));
                }
            }
        }
        Ok(fm)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d_plus_1(&self) -> usize {
        self.d_plus_1
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d_plus_1..(i + 1) * self.d_plus_1]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// (d+1) x m matrix whose columns are the selected sample rows,
    /// the X_S layout the ridge solver works in.
    pub fn columns_for(&self, indices: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(self.d_plus_1, indices.len(), |r, c| {
            self.row(indices[c])[r]
        })
    }
}

/// Per-sample class labels in `[0, C)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelVector {
    labels: Vec<u32>,
    num_classes: u32,
}

impl LabelVector {
    pub fn new(labels: Vec<u32>, num_classes: u32) -> Result<Self> {
        if num_classes == 0 {
            return Err(Error::validation("num_classes must be positive"));
        }
        for (i, &l) in labels.iter().enumerate() {
            if l >= num_classes {
                return Err(Error::validation(format!(
                    "label {l} at index {i} out of range [0, {num_classes})"
                )));
            }
        }
        Ok(LabelVector {
            labels,
            num_classes,
        })
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn num_classes(&self) -> u32 {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Per-sample difficulty scores; higher means harder.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    scores: Vec<f64>,
}

impl ScoreVector {
    pub fn new(scores: Vec<f64>) -> Result<Self> {
        for (i, &s) in scores.iter().enumerate() {
            if !s.is_finite() {
                return Err(Error::validation(format!(
                    "non-finite score at index {i}"
                )));
            }
        }
        Ok(ScoreVector { scores })
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Descending-stable sort permutation: `perm[i]` is the original index of
/// the i-th hardest sample. Equal scores keep ascending original index.
pub fn sort_by_score(scores: &ScoreVector) -> Result<Vec<usize>> {
    for (i, &s) in scores.scores().iter().enumerate() {
        if s.is_nan() {
            return Err(Error::validation(format!("NaN score at index {i}")));
        }
    }
    let mut perm: Vec<usize> = (0..scores.len()).collect();
    // stable sort + descending comparator preserves ascending-index ties
    perm.sort_by(|&a, &b| scores.scores()[b].partial_cmp(&scores.scores()[a]).unwrap());
    Ok(perm)
}

/// Immutable bundle of features, labels, scores, and the descending-score
/// sort permutation.
#[derive(Debug, Clone)]
pub struct ScoredDataset {
    features: FeatureMatrix,
    labels: LabelVector,
    scores: ScoreVector,
    order: Vec<usize>,
}

impl ScoredDataset {
    pub fn new(features: FeatureMatrix, labels: LabelVector, scores: ScoreVector) -> Result<Self> {
        if labels.len() != features.n() {
            return Err(Error::validation(format!(
                "label count {} does not match sample count {}",
                labels.len(),
                features.n()
            )));
        }
        if scores.len() != features.n() {
            return Err(Error::validation(format!(
                "score count {} does not match sample count {}",
                scores.len(),
                features.n()
            )));
        }
        let order = sort_by_score(&scores)?;
        Ok(ScoredDataset {
            features,
            labels,
            scores,
            order,
        })
    }

    pub fn n(&self) -> usize {
        self.features.n()
    }

    pub fn features(&self) -> &FeatureMatrix {
        &self.features
    }

    pub fn labels(&self) -> &LabelVector {
        &self.labels
    }

    pub fn scores(&self) -> &ScoreVector {
        &self.scores
    }

    /// The sort permutation: `order()[k]` is the original index of the
    /// k-th hardest sample.
    pub fn order(&self) -> &[usize] {
        &self.order
    }
}

/// One detected dataset inconsistency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    LengthMismatch { what: &'static str, expected: usize, got: usize },
    NonFinite { row: usize, column: usize },
    Bias { row: usize },
    LabelRange { index: usize, label: u32 },
    OrderInvalid,
}

/// Re-checks every ScoredDataset invariant; violations are the return
/// value, not errors.
pub fn validate_dataset(ds: &ScoredDataset) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = ds.features.n();
    let d1 = ds.features.d_plus_1();
    if ds.labels.len() != n {
        out.push(Violation::LengthMismatch {
            what: "labels",
            expected: n,
            got: ds.labels.len(),
        });
    }
    if ds.scores.len() != n {
        out.push(Violation::LengthMismatch {
            what: "scores",
            expected: n,
            got: ds.scores.len(),
        });
    }
    for i in 0..n {
        let row = ds.features.row(i);
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                out.push(Violation::NonFinite { row: i, column: j });
            }
        }
        if row[d1 - 1] != 1.0 {
            out.push(Violation::Bias { row: i });
        }
    }
    for (i, &l) in ds.labels.labels().iter().enumerate() {
        if l >= ds.labels.num_classes() {
            out.push(Violation::LabelRange { index: i, label: l });
        }
    }
    // order must be a bijection with non-increasing scores
    let mut seen = vec![false; n];
    let mut order_ok = ds.order.len() == n;
    for &i in &ds.order {
        if i >= n || seen[i] {
            order_ok = false;
            break;
        }
        seen[i] = true;
    }
    if order_ok {
        for w in ds.order.windows(2) {
            if ds.scores.scores()[w[0]] < ds.scores.scores()[w[1]] {
                order_ok = false;
                break;
            }
        }
    }
    if !order_ok {
        out.push(Violation::OrderInvalid);
    }
    out
}

/// A concrete subset: unique original-dataset indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetIndices {
    indices: Vec<usize>,
}

impl SubsetIndices {
    pub fn new(indices: Vec<usize>, n: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::validation("subset must be non-empty"));
        }
        let mut seen = vec![false; n];
        for &i in &indices {
            if i >= n {
                return Err(Error::validation(format!(
                    "subset index {i} out of range [0, {n})"
                )));
            }
            if seen[i] {
                return Err(Error::validation(format!("duplicate subset index {i}")));
            }
            seen[i] = true;
        }
        Ok(SubsetIndices { indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn m(&self) -> usize {
        self.indices.len()
    }
}
