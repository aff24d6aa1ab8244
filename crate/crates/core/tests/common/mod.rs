//! Brute-force reference implementations. Nothing here calls into the
//! kernels it is used to check.
#![allow(dead_code)]

use memread::{KeySet, Matrix, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix<f32> {
    Matrix::from_fn(rows, cols, |_, _| r.random_range(-1.0f32..1.0)).unwrap()
}

pub fn random_keys(r: &mut ChaCha8Rng, channels: usize, count: usize) -> KeySet<f32> {
    KeySet::new(random_matrix(r, channels, count))
}

/// `out[i][j] = Σ_c a[c][i]·b[c][j]`, one triple loop in f64.
pub fn triple_loop(a: &Matrix<f32>, b: &Matrix<f32>) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; b.cols()]; a.cols()];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            for c in 0..a.rows() {
                *cell += a.get(c, i) as f64 * b.get(c, j) as f64;
            }
        }
    }
    out
}

/// `-‖m_i − q_j‖²` straight from the definition.
pub fn naive_l2(mem: &KeySet<f32>, query: &KeySet<f32>) -> Vec<Vec<f64>> {
    let (a, b) = (mem.matrix(), query.matrix());
    (0..a.cols())
        .map(|i| {
            (0..b.cols())
                .map(|j| -(0..a.rows()).map(|c| (a.get(c, i) as f64 - b.get(c, j) as f64).powi(2)).sum::<f64>())
                .collect()
        })
        .collect()
}

/// Column softmax of a dense table (rows = memory, cols = query).
pub fn naive_softmax(scores: &[Vec<f64>], tau: f64) -> Vec<Vec<f64>> {
    let rows = scores.len();
    let cols = scores[0].len();
    let mut out = vec![vec![0.0; cols]; rows];
    for j in 0..cols {
        let max = (0..rows).map(|i| scores[i][j]).fold(f64::NEG_INFINITY, f64::max);
        let denom: f64 = (0..rows).map(|i| ((scores[i][j] - max) / tau).exp()).sum();
        for i in 0..rows {
            out[i][j] = ((scores[i][j] - max) / tau).exp() / denom;
        }
    }
    out
}

pub fn to_table<T: Scalar>(m: &Matrix<T>) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).iter().map(|x| x.widen()).collect()).collect()
}

/// `out[c][j] = Σ_i v[c][i]·w[i][j]`, double loop per output cell.
pub fn naive_readout(values: &Matrix<f32>, weights: &Matrix<f32>) -> Vec<Vec<f64>> {
    (0..values.rows())
        .map(|c| {
            (0..weights.cols())
                .map(|j| (0..values.cols()).map(|i| values.get(c, i) as f64 * weights.get(i, j) as f64).sum())
                .collect()
        })
        .collect()
}

pub fn max_abs_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| {
            assert_eq!(x.len(), y.len());
            x.iter().zip(y).map(|(p, q)| (p - q).abs())
        })
        .fold(0.0, f64::max)
}

/// `Σ_i Σ_j |x_i − x_j| / (2 n² mean)`.
pub fn gini_double_sum(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let mut s = 0.0;
    for a in x {
        for b in x {
            s += (a - b).abs();
        }
    }
    s / (2.0 * n * n * mean)
}

/// Index of the nearest point (squared distance, lowest index on ties).
pub fn nearest(points: &[[f64; 2]], q: [f64; 2]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, p) in points.iter().enumerate() {
        let d = (p[0] - q[0]) * (p[0] - q[0]) + (p[1] - q[1]) * (p[1] - q[1]);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// Hull vertices by brute force: an ordered pair (a, b) is a hull edge when
/// every other point lies strictly left of a→b; its endpoints are vertices.
pub fn hull_vertices(points: &[[f64; 2]]) -> Vec<bool> {
    let n = points.len();
    let mut vertex = vec![false; n];
    if n <= 2 {
        return vec![true; n];
    }
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let (pa, pb) = (points[a], points[b]);
            let edge = (0..n).filter(|&c| c != a && c != b).all(|c| {
                let pc = points[c];
                (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pb[1] - pa[1]) * (pc[0] - pa[0]) > 0.0
            });
            if edge {
                vertex[a] = true;
                vertex[b] = true;
            }
        }
    }
    vertex
}

pub fn random_points(r: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<[f64; 2]> {
    (0..n).map(|_| [r.random_range(lo..hi), r.random_range(lo..hi)]).collect()
}
