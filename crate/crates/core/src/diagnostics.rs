//! How evenly memory nodes share the readout.
//!
//! Two views: lifetime statistics of affinity weights (per-node maximum
//! contribution, threshold coverage, Gini coefficient) and brute-force
//! geometry of 2D memory points over a grid of query positions (argmax
//! regions, nodes that never win, soft contribution fields).

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::matrix::{KeySet, Matrix};
use crate::readout::{affinity, AffinityMatrix, Temperature};
use crate::scalar::Scalar;
use crate::similarity::{readout_scores, scale_scores, SimilarityMeasure, COSINE_NORM_EPS};

/// Per-node maximum affinity weight over a sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ContributionRecord {
    pub lifetime_max: Vec<f64>,
}

impl ContributionRecord {
    pub fn node_count(&self) -> usize {
        self.lifetime_max.len()
    }
}

/// Row `i` of the `s`-th matrix is node `node_ids[s][i]`. A node's record
/// is its largest weight for any query of any matrix; nodes that never
/// appear stay at 0.
pub fn lifetime_max_contribution<T: Scalar>(
    affinities: &[AffinityMatrix<T>],
    node_ids: &[Vec<usize>],
) -> Result<ContributionRecord> {
    if affinities.len() != node_ids.len() {
        return Err(Error::Alignment(format!("{} affinity matrices but {} id maps", affinities.len(), node_ids.len())));
    }
    for (s, (w, ids)) in affinities.iter().zip(node_ids).enumerate() {
        if ids.len() != w.rows() {
            return Err(Error::Alignment(format!(
                "matrix {s} has {} memory rows but {} node ids",
                w.rows(),
                ids.len()
            )));
        }
        let mut seen = HashSet::with_capacity(ids.len());
        if let Some(dup) = ids.iter().find(|id| !seen.insert(**id)) {
            return Err(Error::Alignment(format!("node {dup} appears twice in matrix {s}")));
        }
    }
    let nodes = node_ids.iter().flatten().max().map_or(0, |m| m + 1);
    let mut best = vec![0.0f64; nodes];
    for (w, ids) in affinities.iter().zip(node_ids) {
        for (i, &id) in ids.iter().enumerate() {
            let row_max = w.matrix.row(i).iter().fold(0.0f64, |m, x| m.max(x.widen()));
            if row_max > best[id] {
                best[id] = row_max;
            }
        }
    }
    Ok(ContributionRecord { lifetime_max: best })
}

/// Ids `0..rows` for a matrix whose rows are already persistent node ids.
pub fn identity_alignment(rows: usize) -> Vec<usize> {
    (0..rows).collect()
}

/// Nodes whose lifetime maximum exceeds each threshold (strictly).
pub fn coverage_curve(record: &ContributionRecord, thresholds: &[f64]) -> Result<Vec<usize>> {
    if thresholds.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::arg("thresholds must be ascending"));
    }
    Ok(thresholds.iter().map(|&t| record.lifetime_max.iter().filter(|&&m| m > t).count()).collect())
}

/// Population Gini coefficient `Σ_i Σ_j |x_i − x_j| / (2 n² mean)`, in `[0, 1)`.
pub fn gini(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::arg("gini of an empty vector"));
    }
    if let Some(bad) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(Error::arg(format!("gini needs finite nonnegative values, got {bad}")));
    }
    let total: f64 = values.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateValues("gini of an all-zero vector".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    // with ascending order, Σ_i Σ_j |x_i − x_j| = 2 Σ_i (2i − n + 1) x_i
    let weighted: f64 = sorted.iter().enumerate().map(|(i, &x)| (2.0 * i as f64 - n + 1.0) * x).sum();
    Ok(weighted / (n * total))
}

/// Square sampling grid over a rectangle; cells are evaluated at their centres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub resolution: usize,
}

/// Default cells per axis.
pub const DEFAULT_RESOLUTION: usize = 256;

impl GridSpec {
    pub fn new(x_range: (f64, f64), y_range: (f64, f64), resolution: usize) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::arg(format!("grid resolution must be at least 2, got {resolution}")));
        }
        if !(x_range.0 < x_range.1 && y_range.0 < y_range.1)
            || ![x_range.0, x_range.1, y_range.0, y_range.1].iter().all(|v| v.is_finite())
        {
            return Err(Error::arg(format!("degenerate grid ranges {x_range:?} × {y_range:?}")));
        }
        Ok(GridSpec { x_range, y_range, resolution })
    }

    /// Bounding box of `points` padded by `margin` on every side.
    pub fn covering<T: Scalar>(points: &[[T; 2]], margin: f64, resolution: usize) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::arg("cannot cover an empty point set"));
        }
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in points {
            for a in 0..2 {
                lo[a] = lo[a].min(p[a].widen());
                hi[a] = hi[a].max(p[a].widen());
            }
        }
        GridSpec::new((lo[0] - margin, hi[0] + margin), (lo[1] - margin, hi[1] + margin), resolution)
    }

    pub fn cell_count(&self) -> usize {
        self.resolution * self.resolution
    }

    /// Centre of cell `(ix, iy)`.
    pub fn center(&self, ix: usize, iy: usize) -> [f64; 2] {
        let r = self.resolution as f64;
        let (x0, x1) = self.x_range;
        let (y0, y1) = self.y_range;
        [x0 + (ix as f64 + 0.5) * (x1 - x0) / r, y0 + (iy as f64 + 0.5) * (y1 - y0) / r]
    }

    /// Cell centres in row order: `y` outer, `x` inner.
    pub fn centers(&self) -> Vec<[f64; 2]> {
        let mut out = Vec::with_capacity(self.cell_count());
        for iy in 0..self.resolution {
            for ix in 0..self.resolution {
                out.push(self.center(ix, iy));
            }
        }
        out
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x_range.0 && p[0] <= self.x_range.1 && p[1] >= self.y_range.0 && p[1] <= self.y_range.1
    }
}

/// Winning memory point per grid cell, in [`GridSpec::centers`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelGrid {
    pub grid: GridSpec,
    pub labels: Vec<usize>,
}

/// Softmax weight of each memory point at each cell; `weights[cell * nodes + node]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContributionField {
    pub grid: GridSpec,
    pub node_count: usize,
    pub weights: Vec<f64>,
}

impl ContributionField {
    pub fn weight(&self, cell: usize, node: usize) -> f64 {
        self.weights[cell * self.node_count + node]
    }
}

/// 2D memory points prepared for repeated scoring.
struct PlanarMemory {
    points: Vec<[f64; 2]>,
    measure: SimilarityMeasure,
}

impl PlanarMemory {
    fn new<T: Scalar>(points: &[[T; 2]], measure: SimilarityMeasure) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::arg("need at least one memory point"));
        }
        let pts: Vec<[f64; 2]> = points.iter().map(|p| [p[0].widen(), p[1].widen()]).collect();
        let mut seen = HashSet::with_capacity(pts.len());
        for (i, p) in pts.iter().enumerate() {
            if !seen.insert((p[0].to_bits(), p[1].to_bits())) {
                return Err(Error::arg(format!("memory point {i} duplicates an earlier point {p:?}")));
            }
        }
        let points = if measure == SimilarityMeasure::Cosine {
            pts.iter()
                .enumerate()
                .map(|(i, p)| {
                    let n = p[0].hypot(p[1]);
                    if !(n > COSINE_NORM_EPS) {
                        Err(Error::Degenerate { column: i, reason: "zero-norm point under cosine".into() })
                    } else {
                        Ok([p[0] / n, p[1] / n])
                    }
                })
                .collect::<Result<_>>()?
        } else {
            pts
        };
        Ok(PlanarMemory { points, measure })
    }

    fn score(&self, node: usize, q: [f64; 2]) -> f64 {
        let p = self.points[node];
        match self.measure {
            SimilarityMeasure::DotProduct => p[0] * q[0] + p[1] * q[1],
            SimilarityMeasure::Cosine => {
                // a zero query has no direction: every point scores 0
                let n = q[0].hypot(q[1]);
                if n > COSINE_NORM_EPS {
                    (p[0] * q[0] + p[1] * q[1]) / n
                } else {
                    0.0
                }
            }
            SimilarityMeasure::L2Naive | SimilarityMeasure::L2Decomposed => {
                let dx = p[0] - q[0];
                let dy = p[1] - q[1];
                -(dx * dx + dy * dy)
            }
        }
    }

    fn argmax(&self, q: [f64; 2]) -> usize {
        let mut best = 0;
        let mut best_score = self.score(0, q);
        for i in 1..self.points.len() {
            let s = self.score(i, q);
            if s > best_score {
                best = i;
                best_score = s;
            }
        }
        best
    }
}

/// Index of the most similar memory point at every cell centre; ties go to
/// the lowest index.
pub fn argmax_labels<T: Scalar>(points: &[[T; 2]], grid: &GridSpec, measure: SimilarityMeasure) -> Result<LabelGrid> {
    let mem = PlanarMemory::new(points, measure)?;
    let labels = grid.centers().into_iter().map(|q| mem.argmax(q)).collect();
    Ok(LabelGrid { grid: *grid, labels })
}

/// Memory points that win no grid cell. The grid must contain every point.
pub fn dominated_nodes<T: Scalar>(
    points: &[[T; 2]],
    grid: &GridSpec,
    measure: SimilarityMeasure,
) -> Result<Vec<usize>> {
    if let Some(i) = points.iter().position(|p| !grid.contains([p[0].widen(), p[1].widen()])) {
        return Err(Error::arg(format!("memory point {i} lies outside the grid")));
    }
    let labels = argmax_labels(points, grid, measure)?;
    let mut wins = vec![false; points.len()];
    for &l in &labels.labels {
        wins[l] = true;
    }
    Ok((0..points.len()).filter(|&i| !wins[i]).collect())
}

/// Softmax weight of every memory point at every cell centre.
pub fn contribution_field<T: Scalar>(
    points: &[[T; 2]],
    grid: &GridSpec,
    measure: SimilarityMeasure,
    temperature: Temperature,
) -> Result<ContributionField> {
    let mem = PlanarMemory::new(points, measure)?;
    let n = points.len();
    let tau = temperature.value();
    let mut weights = Vec::with_capacity(grid.cell_count() * n);
    let mut scores = vec![0.0f64; n];
    for q in grid.centers() {
        for (i, s) in scores.iter_mut().enumerate() {
            *s = mem.score(i, q) / tau;
        }
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let start = weights.len();
        let mut sum = 0.0;
        for &s in &scores {
            let e = (s - max).exp();
            sum += e;
            weights.push(e);
        }
        weights[start..].iter_mut().for_each(|w| *w /= sum);
    }
    Ok(ContributionField { grid: *grid, node_count: n, weights })
}

/// Treat 2D points as memory keys, read them out for one query per cell of
/// `query_grid` through the full scoring pipeline (√C^k scaling except for
/// cosine, optional top-k, column softmax), and return each point's largest
/// weight over all queries.
pub fn planar_readout_contributions<T: Scalar>(
    points: &[[T; 2]],
    query_grid: &GridSpec,
    measure: SimilarityMeasure,
    topk: Option<usize>,
    temperature: Temperature,
) -> Result<ContributionRecord> {
    if points.is_empty() {
        return Err(Error::arg("need at least one memory point"));
    }
    let mem = KeySet::new(Matrix::from_fn(2, points.len(), |c, j| points[j][c])?);
    let centers = query_grid.centers();
    let query = KeySet::new(Matrix::from_fn(2, centers.len(), |c, j| T::narrow(centers[j][c]))?);
    let mut scores = readout_scores(&mem, &query, measure)?;
    if measure != SimilarityMeasure::Cosine {
        scores = scale_scores(&scores, 2)?;
    }
    let w = affinity(&scores, topk, temperature)?;
    lifetime_max_contribution(&[w], &[identity_alignment(points.len())])
}
