//! Seeded synthetic keys, values and 2D scenes.
//!
//! Every generator draws from `ChaCha8Rng::seed_from_u64(seed)` (rand_chacha
//! 0.9) with normal variates from `rand_distr::StandardNormal` (0.5). The
//! draw order documented on each function is part of the output contract:
//! golden files in the test suite pin the streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::{KeySet, Matrix, ShapeSpec, ValueSet};
use crate::scalar::Scalar;

/// Identifier of the random stream, recorded next to generated data.
pub const RNG_ALGORITHM: &str = "chacha8/seed_from_u64/v1";

/// Cluster centres of [`outlier_scene`].
pub const OUTLIER_SCENE_CENTERS: [[f64; 2]; 3] = [[1.0, 1.0], [-1.0, 1.0], [0.0, -1.0]];
pub const OUTLIER_SCENE_POINTS_PER_CLUSTER: usize = 30;
pub const OUTLIER_SCENE_SPREAD: f64 = 0.15;
pub const OUTLIER_SCENE_OUTLIER: [f64; 2] = [4.0, 4.0];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneSpec {
    pub cluster_count: usize,
    pub points_per_cluster: usize,
    pub cluster_spread: f64,
    /// Distance of the single outlier from the origin; 0 disables it.
    pub outlier_magnitude: f64,
    pub seed: u64,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if self.cluster_count == 0 || self.points_per_cluster == 0 {
            return Err(Error::arg("scene needs at least one cluster of one point"));
        }
        if !(self.cluster_spread > 0.0 && self.cluster_spread.is_finite()) {
            return Err(Error::arg(format!("cluster spread must be positive, got {}", self.cluster_spread)));
        }
        if !(self.outlier_magnitude >= 0.0 && self.outlier_magnitude.is_finite()) {
            return Err(Error::arg("outlier magnitude must be finite and nonnegative"));
        }
        Ok(())
    }
}

/// Cluster centres of [`gaussian_mixture`]: the first `2·cluster_count`
/// draws of the stream, uniform in `[-2, 2)²`.
pub fn mixture_centers(spec: &SceneSpec) -> Result<Vec<[f64; 2]>> {
    spec.validate()?;
    let mut r = rng(spec.seed);
    Ok(draw_centers(&mut r, spec.cluster_count))
}

fn draw_centers(r: &mut ChaCha8Rng, count: usize) -> Vec<[f64; 2]> {
    (0..count).map(|_| [r.random_range(-2.0..2.0), r.random_range(-2.0..2.0)]).collect()
}

fn cluster_points(r: &mut ChaCha8Rng, centers: &[[f64; 2]], per_cluster: usize, spread: f64) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(centers.len() * per_cluster);
    for c in centers {
        for _ in 0..per_cluster {
            let dx = normal(r);
            let dy = normal(r);
            out.push([c[0] + spread * dx, c[1] + spread * dy]);
        }
    }
    out
}

/// Isotropic Gaussian clusters, cluster by cluster, then the outlier (if
/// enabled) at a uniformly random angle.
pub fn gaussian_mixture<T: Scalar>(spec: &SceneSpec) -> Result<Vec<[T; 2]>> {
    spec.validate()?;
    let mut r = rng(spec.seed);
    let centers = draw_centers(&mut r, spec.cluster_count);
    let mut points = cluster_points(&mut r, &centers, spec.points_per_cluster, spec.cluster_spread);
    if spec.outlier_magnitude > 0.0 {
        let angle: f64 = r.random_range(0.0..std::f64::consts::TAU);
        points.push([spec.outlier_magnitude * angle.cos(), spec.outlier_magnitude * angle.sin()]);
    }
    Ok(narrow_points(&points))
}

/// Three tight clusters around [`OUTLIER_SCENE_CENTERS`] plus one far
/// outlier at [`OUTLIER_SCENE_OUTLIER`]; 91 points, outlier last.
pub fn outlier_scene<T: Scalar>(seed: u64) -> Vec<[T; 2]> {
    let mut r = rng(seed);
    let mut points =
        cluster_points(&mut r, &OUTLIER_SCENE_CENTERS, OUTLIER_SCENE_POINTS_PER_CLUSTER, OUTLIER_SCENE_SPREAD);
    points.push(OUTLIER_SCENE_OUTLIER);
    narrow_points(&points)
}

fn narrow_points<T: Scalar>(points: &[[f64; 2]]) -> Vec<[T; 2]> {
    points.iter().map(|p| [T::narrow(p[0]), T::narrow(p[1])]).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftSpec {
    pub length: usize,
    pub shape: ShapeSpec,
    pub drift_rate: f64,
    pub noise_scale: f64,
    pub seed: u64,
}

impl DriftSpec {
    pub fn validate(&self) -> Result<()> {
        self.shape.validate()?;
        if self.length < 2 {
            return Err(Error::arg("a drifting sequence needs at least 2 frames"));
        }
        if !(self.drift_rate >= 0.0 && self.drift_rate.is_finite()) {
            return Err(Error::arg("drift rate must be finite and nonnegative"));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::arg("noise scale must be finite and nonnegative"));
        }
        Ok(())
    }
}

/// Per-frame query keys (`C^k×HW`). Frame 0 is standard normal, drawn
/// row-major. Each later frame moves every column by `drift_rate` along a
/// fresh random unit direction, then adds `noise_scale`-scaled normal noise
/// to every entry (directions for all columns first, then the noise).
pub fn drifting_key_sequence<T: Scalar>(spec: &DriftSpec) -> Result<Vec<KeySet<T>>> {
    spec.validate()?;
    let ck = spec.shape.key_dim;
    let n = spec.shape.hw();
    let mut r = rng(spec.seed);
    let mut state: Vec<f64> = (0..ck * n).map(|_| normal(&mut r)).collect();
    let mut frames = Vec::with_capacity(spec.length);
    frames.push(to_keys::<T>(&state, ck, n)?);

    let mut dir = vec![0.0f64; ck];
    for _ in 1..spec.length {
        for j in 0..n {
            unit_direction(&mut r, &mut dir);
            for c in 0..ck {
                state[c * n + j] += spec.drift_rate * dir[c];
            }
        }
        for x in state.iter_mut() {
            *x += spec.noise_scale * normal(&mut r);
        }
        frames.push(to_keys::<T>(&state, ck, n)?);
    }
    Ok(frames)
}

fn unit_direction(r: &mut ChaCha8Rng, out: &mut [f64]) {
    loop {
        for x in out.iter_mut() {
            *x = normal(r);
        }
        let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            out.iter_mut().for_each(|x| *x /= norm);
            return;
        }
    }
}

fn to_keys<T: Scalar>(state: &[f64], ck: usize, n: usize) -> Result<KeySet<T>> {
    Matrix::from_vec(ck, n, state.iter().map(|&x| T::narrow(x)).collect()).map(KeySet::new)
}

/// `rows×cols` matrix of uniform entries in `[lo, hi)`, row-major draws.
pub fn uniform_matrix<T: Scalar>(rows: usize, cols: usize, lo: f64, hi: f64, seed: u64) -> Result<Matrix<T>> {
    if !(lo < hi) {
        return Err(Error::arg(format!("empty range [{lo}, {hi})")));
    }
    let mut r = rng(seed);
    Matrix::from_fn(rows, cols, |_, _| T::narrow(r.random_range(lo..hi)))
}

/// Random memory key (`C^k×THW`), query key (`C^k×HW`) and `objects`
/// value sets (`C^v×THW`) for `shape`, entries uniform in `[-1, 1)`.
/// Streams: `seed`, `seed+1`, then `seed+2+o` per object.
/// Memory keys, query keys and one value set per object.
pub type Problem<T> = (KeySet<T>, KeySet<T>, Vec<ValueSet<T>>);

pub fn random_problem<T: Scalar>(shape: &ShapeSpec, objects: usize, seed: u64) -> Result<Problem<T>> {
    shape.validate()?;
    let mem = KeySet::new(uniform_matrix(shape.key_dim, shape.thw(), -1.0, 1.0, seed)?);
    let query = KeySet::new(uniform_matrix(shape.key_dim, shape.hw(), -1.0, 1.0, seed.wrapping_add(1))?);
    let values = (0..objects as u64)
        .map(|o| uniform_matrix(shape.value_dim, shape.thw(), -1.0, 1.0, seed.wrapping_add(2 + o)).map(ValueSet::new))
        .collect::<Result<Vec<_>>>()?;
    Ok((mem, query, values))
}
