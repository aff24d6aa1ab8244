//! Pairwise similarity between memory keys and query keys.
//!
//! All measures produce a `THW×HW` score matrix whose entry `(i, j)` is the
//! similarity of memory node `i` to query node `j`. The decomposed L2 path
//! expands `-‖a-b‖² = 2a·b - ‖a‖² - ‖b‖²` so it costs one matrix product
//! plus a memory-norm vector, and may omit the query-norm term because a
//! per-column constant cancels in the column softmax.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kernel::{gemm_with, LeftLayout};
use crate::matrix::{transpose_multiply, KeySet, Matrix};
use crate::scalar::Scalar;

/// Columns with a 2-norm at or below this are rejected by [`SimilarityMeasure::Cosine`].
pub const COSINE_NORM_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SimilarityMeasure {
    DotProduct,
    Cosine,
    /// Negative squared Euclidean distance, evaluated pair by pair.
    L2Naive,
    /// Negative squared Euclidean distance via one matrix product.
    L2Decomposed,
}

impl SimilarityMeasure {
    pub const ALL: [SimilarityMeasure; 4] = [
        SimilarityMeasure::DotProduct,
        SimilarityMeasure::Cosine,
        SimilarityMeasure::L2Naive,
        SimilarityMeasure::L2Decomposed,
    ];

    /// Short name used on the command line and in CSV output.
    pub fn name(self) -> &'static str {
        match self {
            SimilarityMeasure::DotProduct => "dot",
            SimilarityMeasure::Cosine => "cos",
            SimilarityMeasure::L2Naive => "l2",
            SimilarityMeasure::L2Decomposed => "l2fast",
        }
    }

    pub fn is_l2(self) -> bool {
        matches!(self, SimilarityMeasure::L2Naive | SimilarityMeasure::L2Decomposed)
    }
}

impl fmt::Display for SimilarityMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SimilarityMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dot" => Ok(SimilarityMeasure::DotProduct),
            "cos" | "cosine" => Ok(SimilarityMeasure::Cosine),
            "l2" => Ok(SimilarityMeasure::L2Naive),
            "l2fast" => Ok(SimilarityMeasure::L2Decomposed),
            other => Err(Error::arg(format!("unknown measure {other:?} (dot, cos, l2, l2fast)"))),
        }
    }
}

/// Raw similarities, memory nodes down the rows and query nodes across.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix<T> {
    pub matrix: Matrix<T>,
    pub measure: SimilarityMeasure,
    /// Divided by `√C^k`.
    pub scaled: bool,
    /// The `‖k^Q_j‖²` term was left out (decomposed L2 only).
    pub query_norm_dropped: bool,
    /// Set by [`crate::readout::topk_filter`].
    pub topk: Option<usize>,
}

impl<T: Scalar> ScoreMatrix<T> {
    fn unscaled(matrix: Matrix<T>, measure: SimilarityMeasure) -> Self {
        ScoreMatrix { matrix, measure, scaled: false, query_norm_dropped: false, topk: None }
    }

    /// Wrap externally produced scores.
    pub fn from_matrix(matrix: Matrix<T>, measure: SimilarityMeasure, scaled: bool) -> Self {
        ScoreMatrix { matrix, measure, scaled, query_norm_dropped: false, topk: None }
    }

    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.matrix.get(i, j)
    }
}

fn check_channels<T: Scalar>(mem: &KeySet<T>, query: &KeySet<T>) -> Result<()> {
    if mem.channels() != query.channels() {
        return Err(Error::dim(format!(
            "memory keys have {} channels, query keys {}",
            mem.channels(),
            query.channels()
        )));
    }
    Ok(())
}

/// Similarity of every memory node against every query node, computed from
/// the definition of `measure`.
pub fn pairwise_scores<T: Scalar>(
    mem: &KeySet<T>,
    query: &KeySet<T>,
    measure: SimilarityMeasure,
) -> Result<ScoreMatrix<T>> {
    check_channels(mem, query)?;
    let matrix = match measure {
        SimilarityMeasure::DotProduct => transpose_multiply(mem.matrix(), query.matrix())?,
        SimilarityMeasure::Cosine => {
            let m = normalize_columns(mem.matrix(), "memory")?;
            let q = normalize_columns(query.matrix(), "query")?;
            transpose_multiply(&m, &q)?
        }
        SimilarityMeasure::L2Naive => l2_naive(mem.matrix(), query.matrix()),
        SimilarityMeasure::L2Decomposed => {
            return l2_scores_fast(mem, query, true);
        }
    };
    Ok(ScoreMatrix::unscaled(matrix, measure))
}

/// `2·k^M_i·k^Q_j − ‖k^M_i‖² [− ‖k^Q_j‖²]` from one matrix product.
pub fn l2_scores_fast<T: Scalar>(
    mem: &KeySet<T>,
    query: &KeySet<T>,
    include_query_norm: bool,
) -> Result<ScoreMatrix<T>> {
    check_channels(mem, query)?;
    let mem_sq = mem.matrix().column_sq_norms();
    let query_sq = if include_query_norm { query.matrix().column_sq_norms() } else { vec![0.0; query.count()] };
    let (ck, m, n) = (mem.channels(), mem.count(), query.count());
    let data =
        gemm_with(mem.matrix().as_slice(), LeftLayout::Transposed, query.matrix().as_slice(), m, ck, n, |i, j, ab| {
            T::narrow(2.0 * ab - mem_sq[i] - query_sq[j])
        });
    Ok(ScoreMatrix {
        matrix: Matrix::from_vec(m, n, data)?,
        measure: SimilarityMeasure::L2Decomposed,
        scaled: false,
        query_norm_dropped: !include_query_norm,
        topk: None,
    })
}

/// The scores the readout pipeline uses for `measure`: decomposed L2 drops
/// the query norm, everything else follows its definition.
pub fn readout_scores<T: Scalar>(
    mem: &KeySet<T>,
    query: &KeySet<T>,
    measure: SimilarityMeasure,
) -> Result<ScoreMatrix<T>> {
    match measure {
        SimilarityMeasure::L2Decomposed => l2_scores_fast(mem, query, false),
        other => pairwise_scores(mem, query, other),
    }
}

/// Divide every score by `√key_dim`.
pub fn scale_scores<T: Scalar>(scores: &ScoreMatrix<T>, key_dim: usize) -> Result<ScoreMatrix<T>> {
    if scores.scaled {
        return Err(Error::State("scores are already scaled by √C^k".into()));
    }
    if key_dim == 0 {
        return Err(Error::dim("key dimension must be positive"));
    }
    let root = (key_dim as f64).sqrt();
    let matrix = scores.matrix.map(|x| T::narrow(x.widen() / root));
    Ok(ScoreMatrix { matrix, scaled: true, ..scores.clone() })
}

fn normalize_columns<T: Scalar>(m: &Matrix<T>, side: &str) -> Result<Matrix<T>> {
    let norms: Vec<f64> = m.column_sq_norms().into_iter().map(f64::sqrt).collect();
    if let Some(column) = norms.iter().position(|&n| !(n > COSINE_NORM_EPS)) {
        return Err(Error::Degenerate {
            column,
            reason: format!("{side} key has norm {} under cosine similarity", norms[column]),
        });
    }
    let mut out = m.clone();
    for i in 0..out.rows() {
        for (x, n) in out.row_mut(i).iter_mut().zip(&norms) {
            *x = T::narrow(x.widen() / n);
        }
    }
    Ok(out)
}

fn l2_naive<T: Scalar>(mem: &Matrix<T>, query: &Matrix<T>) -> Matrix<T> {
    // node-major copies so each pair walks two contiguous vectors
    let mt = mem.transpose().cast::<f64>();
    let qt = query.transpose().cast::<f64>();
    let ck = mem.rows();
    Matrix::from_fn(mem.cols(), query.cols(), |i, j| {
        let a = mt.row(i);
        let b = qt.row(j);
        let mut acc = 0.0f64;
        for c in 0..ck {
            let d = a[c] - b[c];
            acc += d * d;
        }
        T::narrow(-acc)
    })
    .expect("shape preserved")
}
