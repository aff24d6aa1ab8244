//! Column softmax over scores, top-k masking and value aggregation.

use crate::costmodel::Ledger;
use crate::error::{Error, Result};
use crate::kernel::{gemm, LeftLayout};
use crate::matrix::{Matrix, ValueSet};
use crate::scalar::Scalar;
use crate::similarity::{ScoreMatrix, SimilarityMeasure};

/// Default number of scores kept per query column.
pub const DEFAULT_TOPK: usize = 20;

/// Softmax temperature; scores are divided by it before exponentiation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Temperature(f64);

impl Temperature {
    pub fn new(value: f64) -> Result<Self> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::arg(format!("temperature must be positive and finite, got {value}")));
        }
        Ok(Temperature(value))
    }

    /// 0.01 for cosine, whose scores live in [-1, 1]; 1 otherwise.
    pub fn default_for(measure: SimilarityMeasure) -> Self {
        match measure {
            SimilarityMeasure::Cosine => Temperature(0.01),
            _ => Temperature(1.0),
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for Temperature {
    fn default() -> Self {
        Temperature(1.0)
    }
}

/// Column-stochastic weights: column `j` is the distribution of query node
/// `j` over memory nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix<T> {
    pub matrix: Matrix<T>,
    pub k_used: Option<usize>,
}

impl<T: Scalar> AffinityMatrix<T> {
    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.matrix.get(i, j)
    }

    /// Wrap weights that are already normalized (e.g. loaded from disk).
    /// Columns must be nonnegative and sum to one within `tolerance`.
    pub fn from_weights(matrix: Matrix<T>, tolerance: f64) -> Result<Self> {
        let mut sums = vec![0.0f64; matrix.cols()];
        for i in 0..matrix.rows() {
            for (j, (s, &w)) in sums.iter_mut().zip(matrix.row(i)).enumerate() {
                let w = w.widen();
                if !(w >= 0.0 && w <= 1.0 + tolerance) {
                    return Err(Error::Degenerate { column: j, reason: format!("weight {w} outside [0, 1]") });
                }
                *s += w;
            }
        }
        if let Some(j) = sums.iter().position(|s| (s - 1.0).abs() > tolerance) {
            return Err(Error::Degenerate { column: j, reason: format!("column sums to {}", sums[j]) });
        }
        Ok(AffinityMatrix { matrix, k_used: None })
    }

    /// Number of strictly positive weights in each column.
    pub fn nonzeros_per_column(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.cols()];
        for i in 0..self.rows() {
            for (c, &w) in counts.iter_mut().zip(self.matrix.row(i)) {
                if w > T::zero() {
                    *c += 1;
                }
            }
        }
        counts
    }
}

/// `W[i][j] = exp(S[i][j]/τ) / Σ_n exp(S[n][j]/τ)`, stabilized by
/// subtracting each column's maximum. Masked (`-∞`) scores get weight 0;
/// any other weight that underflows is stored as the smallest positive
/// normal value, so the support of a column is exactly its unmasked entries.
pub fn normalize_affinity<T: Scalar>(scores: &ScoreMatrix<T>, temperature: Temperature) -> Result<AffinityMatrix<T>> {
    let s = &scores.matrix;
    let (rows, cols) = (s.rows(), s.cols());
    let tau = temperature.value();

    let mut col_max = vec![f64::NEG_INFINITY; cols];
    for i in 0..rows {
        for (m, &x) in col_max.iter_mut().zip(s.row(i)) {
            let x = x.widen();
            if x > *m {
                *m = x;
            }
        }
    }
    if let Some(column) = col_max.iter().position(|m| !m.is_finite()) {
        return Err(Error::Degenerate { column, reason: "no finite score in column".into() });
    }

    let mut out = Matrix::zeros(rows, cols)?;
    let mut sums = vec![0.0f64; cols];
    for i in 0..rows {
        let src = s.row(i);
        let dst = out.row_mut(i);
        for j in 0..cols {
            let x = src[j].widen();
            let e = if x == f64::NEG_INFINITY { 0.0 } else { ((x - col_max[j]) / tau).exp() };
            sums[j] += e;
            dst[j] = T::narrow(e);
        }
    }
    // sums[j] ≥ 1: the column maximum contributes exp(0)
    let inv: Vec<f64> = sums.iter().map(|s| 1.0 / s).collect();
    let floor = T::min_positive_value();
    for i in 0..rows {
        let src = s.row(i);
        for ((w, r), x) in out.row_mut(i).iter_mut().zip(&inv).zip(src) {
            *w = T::narrow(w.widen() * r);
            if *w == T::zero() && *x != T::neg_infinity() {
                *w = floor;
            }
        }
    }
    Ok(AffinityMatrix { matrix: out, k_used: scores.topk })
}

/// Keep the `k` largest scores of each column and mask the rest with `-∞`.
/// Equal scores favour the lower memory index.
pub fn topk_filter<T: Scalar>(scores: &ScoreMatrix<T>, k: usize) -> Result<ScoreMatrix<T>> {
    if k == 0 {
        return Err(Error::arg("top-k needs k ≥ 1"));
    }
    let s = &scores.matrix;
    let (rows, cols) = (s.rows(), s.cols());
    if k >= rows {
        return Ok(ScoreMatrix { topk: Some(k), ..scores.clone() });
    }

    // per column, the best k so far in descending order; rows are visited
    // in increasing index so a later equal score never displaces an earlier one
    let mut kept: Vec<(T, u32)> = vec![(T::neg_infinity(), 0); cols * k];
    let mut len = vec![0usize; cols];
    let mut floor = vec![T::neg_infinity(); cols];
    for i in 0..rows {
        for (j, &x) in s.row(i).iter().enumerate() {
            if len[j] == k && !(x > floor[j]) {
                continue;
            }
            let list = &mut kept[j * k..(j + 1) * k];
            let n = len[j];
            // a full list drops its last entry
            let mut pos = n.min(k - 1);
            if n < k {
                len[j] += 1;
            }
            while pos > 0 && !(list[pos - 1].0 >= x) {
                list[pos] = list[pos - 1];
                pos -= 1;
            }
            list[pos] = (x, i as u32);
            if len[j] == k {
                floor[j] = list[k - 1].0;
            }
        }
    }

    let mut out = Matrix::new(rows, cols, T::neg_infinity())?;
    for j in 0..cols {
        for &(x, i) in &kept[j * k..j * k + len[j]] {
            out.set(i as usize, j, x);
        }
    }
    Ok(ScoreMatrix { matrix: out, topk: Some(k), ..scores.clone() })
}

/// Optional top-k, then column softmax.
pub fn affinity<T: Scalar>(
    scores: &ScoreMatrix<T>,
    topk: Option<usize>,
    temperature: Temperature,
) -> Result<AffinityMatrix<T>> {
    match topk {
        Some(k) => normalize_affinity(&topk_filter(scores, k)?, temperature),
        None => normalize_affinity(scores, temperature),
    }
}

/// `v^Q = v^M · W`: each query column is the weighted sum of memory value columns.
pub fn readout_single<T: Scalar>(values: &ValueSet<T>, weights: &AffinityMatrix<T>) -> Result<ValueSet<T>> {
    if values.count() != weights.rows() {
        return Err(Error::dim(format!(
            "{} memory value columns against an affinity with {} memory rows",
            values.count(),
            weights.rows()
        )));
    }
    let w = &weights.matrix;
    let (cv, rows, cols) = (values.channels(), w.rows(), w.cols());
    let nnz = w.as_slice().iter().filter(|&&x| x != T::zero()).count();

    let data = if nnz * 8 <= rows * cols {
        sparse_readout(values.matrix(), w, nnz)
    } else {
        gemm(values.matrix().as_slice(), LeftLayout::RowMajor, w.as_slice(), cv, rows, cols)
    };
    Ok(ValueSet::new(Matrix::from_vec(cv, cols, data)?))
}

fn sparse_readout<T: Scalar>(values: &Matrix<T>, w: &Matrix<T>, nnz: usize) -> Vec<T> {
    let (rows, cols) = (w.rows(), w.cols());
    let mut row_start = Vec::with_capacity(rows + 1);
    let mut entries: Vec<(u32, f64)> = Vec::with_capacity(nnz);
    for i in 0..rows {
        row_start.push(entries.len());
        for (j, &x) in w.row(i).iter().enumerate() {
            if x != T::zero() {
                entries.push((j as u32, x.widen()));
            }
        }
    }
    row_start.push(entries.len());

    let mut out = Vec::with_capacity(values.rows() * cols);
    let mut acc = vec![0.0f64; cols];
    for c in 0..values.rows() {
        acc.iter_mut().for_each(|a| *a = 0.0);
        for (i, &v) in values.row(c).iter().enumerate() {
            let v = v.widen();
            for &(j, wt) in &entries[row_start[i]..row_start[i + 1]] {
                acc[j as usize] += v * wt;
            }
        }
        out.extend(acc.iter().map(|&a| T::narrow(a)));
    }
    out
}

/// Read out every object's values through one shared affinity. The ledger,
/// when given, records a single affinity regardless of the object count.
pub fn readout_multi<T: Scalar>(
    values_per_object: &[ValueSet<T>],
    weights: &AffinityMatrix<T>,
    ledger: Option<&mut Ledger>,
) -> Result<Vec<ValueSet<T>>> {
    if values_per_object.is_empty() {
        return Err(Error::arg("readout needs at least one object"));
    }
    let out = values_per_object.iter().map(|v| readout_single(v, weights)).collect::<Result<Vec<_>>>()?;
    if let Some(l) = ledger {
        l.record_affinity();
    }
    Ok(out)
}
