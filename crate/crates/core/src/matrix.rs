//! Dense row-major matrices and the key/value containers built on them.

use crate::error::{Error, Result};
use crate::kernel::{gemm, LeftLayout};
use crate::scalar::Scalar;

/// Largest `H·W` a [`ShapeSpec`] accepts.
pub const MAX_SPATIAL_CELLS: usize = 1 << 20;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    /// A `rows×cols` matrix with every entry equal to `fill`.
    pub fn new(rows: usize, cols: usize, fill: T) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::dim(format!("matrix dimensions must be positive, got {rows}×{cols}")));
        }
        Ok(Matrix { rows, cols, data: vec![fill; rows * cols] })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, T::zero())
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::dim(format!("matrix dimensions must be positive, got {rows}×{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::dim(format!("{rows}×{cols} matrix needs {} values, got {}", rows * cols, data.len())));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Build from nested rows; every row must have the same length.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::dim("ragged rows"));
        }
        Self::from_vec(rows.len(), cols, rows.concat())
    }

    /// Build from column vectors (each inner vec is one column).
    pub fn from_columns(columns: &[Vec<T>]) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::dim("ragged columns"));
        }
        Self::from_fn(rows, columns.len(), |i, j| columns[j][i])
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::from_vec(rows, cols, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: T) {
        self.data[i * self.cols + j] = value;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn transpose(&self) -> Self {
        let mut data = vec![T::zero(); self.data.len()];
        const B: usize = 32;
        for i0 in (0..self.rows).step_by(B) {
            for j0 in (0..self.cols).step_by(B) {
                for i in i0..(i0 + B).min(self.rows) {
                    for j in j0..(j0 + B).min(self.cols) {
                        data[j * self.rows + i] = self.data[i * self.cols + j];
                    }
                }
            }
        }
        Matrix { rows: self.cols, cols: self.rows, data }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    /// Convert element type through `f64`.
    pub fn cast<U: Scalar>(&self) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| U::narrow(x.widen())).collect() }
    }

    /// Concatenate matrices with equal row counts side by side.
    pub fn hstack(parts: &[&Matrix<T>]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::arg("nothing to concatenate"))?;
        let rows = first.rows;
        if let Some(bad) = parts.iter().find(|p| p.rows != rows) {
            return Err(Error::dim(format!("cannot stack {} rows beside {rows}", bad.rows)));
        }
        let cols: usize = parts.iter().map(|p| p.cols).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for p in parts {
                data.extend_from_slice(p.row(i));
            }
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Squared 2-norm of every column, accumulated in `f64`.
    pub fn column_sq_norms(&self) -> Vec<f64> {
        let mut out = vec![0.0f64; self.cols];
        for i in 0..self.rows {
            for (acc, &x) in out.iter_mut().zip(self.row(i)) {
                let x = x.widen();
                *acc += x * x;
            }
        }
        out
    }

    /// `A·B` for `A: m×k`, `B: k×n`.
    pub fn matmul(&self, other: &Matrix<T>) -> Result<Matrix<T>> {
        if self.cols != other.rows {
            return Err(Error::dim(format!(
                "cannot multiply {}×{} by {}×{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = gemm(&self.data, LeftLayout::RowMajor, &other.data, self.rows, self.cols, other.cols);
        Ok(Matrix { rows: self.rows, cols: other.cols, data })
    }
}

/// `out[i][j] = Σ_c a[c][i]·b[c][j]` for column-feature matrices `a: C×M`, `b: C×N`.
pub fn transpose_multiply<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    if a.rows != b.rows {
        return Err(Error::dim(format!("feature rows differ: {}×{} against {}×{}", a.rows, a.cols, b.rows, b.cols)));
    }
    let data = gemm(&a.data, LeftLayout::Transposed, &b.data, a.cols, a.rows, b.cols);
    Ok(Matrix { rows: a.cols, cols: b.cols, data })
}

/// Feature-map geometry: key and value channels, memory frames and the
/// stride-16 spatial grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ShapeSpec {
    pub key_dim: usize,
    pub value_dim: usize,
    pub frames_in_memory: usize,
    pub height: usize,
    pub width: usize,
}

impl ShapeSpec {
    pub fn new(key_dim: usize, value_dim: usize, frames_in_memory: usize, height: usize, width: usize) -> Result<Self> {
        let s = ShapeSpec { key_dim, value_dim, frames_in_memory, height, width };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.key_dim == 0 || self.value_dim == 0 || self.frames_in_memory == 0 || self.height == 0 || self.width == 0
        {
            return Err(Error::dim(format!("all shape fields must be positive: {self:?}")));
        }
        if self.height.saturating_mul(self.width) > MAX_SPATIAL_CELLS {
            return Err(Error::dim(format!("H·W = {}×{} exceeds {MAX_SPATIAL_CELLS}", self.height, self.width)));
        }
        Ok(())
    }

    /// Query nodes per frame, `H·W`.
    pub fn hw(&self) -> usize {
        self.height * self.width
    }

    /// Memory nodes, `T·H·W`.
    pub fn thw(&self) -> usize {
        self.frames_in_memory * self.hw()
    }

    pub fn with_frames(&self, frames: usize) -> Self {
        ShapeSpec { frames_in_memory: frames, ..*self }
    }
}

macro_rules! feature_set {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name<T> {
            matrix: Matrix<T>,
        }

        impl<T: Scalar> $name<T> {
            /// Wrap a `channels×count` matrix; each column is one node.
            pub fn new(matrix: Matrix<T>) -> Self {
                $name { matrix }
            }

            pub fn from_columns(columns: &[Vec<T>]) -> Result<Self> {
                Matrix::from_columns(columns).map(Self::new)
            }

            #[inline]
            pub fn channels(&self) -> usize {
                self.matrix.rows()
            }

            #[inline]
            pub fn count(&self) -> usize {
                self.matrix.cols()
            }

            pub fn matrix(&self) -> &Matrix<T> {
                &self.matrix
            }

            pub fn into_matrix(self) -> Matrix<T> {
                self.matrix
            }

            pub fn column(&self, j: usize) -> Vec<T> {
                self.matrix.column(j)
            }

            /// Concatenate node sets along the node axis.
            pub fn concat(parts: &[&$name<T>]) -> Result<Self> {
                let mats: Vec<&Matrix<T>> = parts.iter().map(|p| &p.matrix).collect();
                Matrix::hstack(&mats).map(Self::new)
            }
        }
    };
}

feature_set!(
    /// Key features, one `C^k`-dimensional column per node.
    KeySet
);
feature_set!(
    /// Value features, one `C^v`-dimensional column per node.
    ValueSet
);

impl<T: Scalar> KeySet<T> {
    /// Check this set against `shape` as a memory key (`T·H·W` nodes).
    pub fn check_memory(&self, shape: &ShapeSpec) -> Result<()> {
        self.check(shape.key_dim, shape.thw(), "memory key")
    }

    /// Check this set against `shape` as a query key (`H·W` nodes).
    pub fn check_query(&self, shape: &ShapeSpec) -> Result<()> {
        self.check(shape.key_dim, shape.hw(), "query key")
    }

    fn check(&self, channels: usize, count: usize, what: &str) -> Result<()> {
        if self.channels() != channels || self.count() != count {
            return Err(Error::dim(format!(
                "{what} is {}×{}, expected {channels}×{count}",
                self.channels(),
                self.count()
            )));
        }
        Ok(())
    }
}

impl<T: Scalar> ValueSet<T> {
    pub fn check_shape(&self, shape: &ShapeSpec, count: usize) -> Result<()> {
        if self.channels() != shape.value_dim || self.count() != count {
            return Err(Error::dim(format!(
                "value set is {}×{}, expected {}×{count}",
                self.channels(),
                self.count(),
                shape.value_dim
            )));
        }
        Ok(())
    }
}
