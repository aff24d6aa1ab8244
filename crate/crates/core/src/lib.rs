//! Kernels and analysis tools for affinity-based memory readout.
//!
//! A query frame reads from a memory of past frames by scoring every
//! memory key against every query key, normalizing each query column with
//! a softmax and aggregating memory values with the resulting weights:
//!
//! ```
//! use memread::{readout, similarity, synth, ShapeSpec, SimilarityMeasure};
//!
//! let shape = ShapeSpec::new(8, 4, 2, 3, 3).unwrap();
//! let (mem, query, values) = synth::random_problem::<f32>(&shape, 2, 7).unwrap();
//! let scores = similarity::readout_scores(&mem, &query, SimilarityMeasure::L2Decomposed).unwrap();
//! let scores = similarity::scale_scores(&scores, shape.key_dim).unwrap();
//! let w = readout::affinity(&scores, Some(5), readout::Temperature::default()).unwrap();
//! let per_object = readout::readout_multi(&values, &w, None).unwrap();
//! assert_eq!(per_object[1].count(), shape.hw());
//! ```
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`);
//! reductions accumulate in `f64` either way. The aliases below fix the
//! element type to `f32`, which is what the `STF1` file format stores.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod costmodel;
pub mod diagnostics;
pub mod error;
pub mod io;
mod kernel;
pub mod matrix;
pub mod membank;
pub mod readout;
pub mod scalar;
pub mod similarity;
pub mod synth;

pub use costmodel::{FlopEstimate, Ledger};
pub use error::{Error, Result};
pub use matrix::{transpose_multiply, KeySet, Matrix, ShapeSpec, ValueSet};
pub use membank::{Architecture, CostReport, MemoryBank, SchedulePolicy};
pub use readout::{AffinityMatrix, Temperature};
pub use scalar::Scalar;
pub use similarity::{ScoreMatrix, SimilarityMeasure};

pub type Matrix32 = Matrix<f32>;
pub type Matrix64 = Matrix<f64>;
pub type KeySet32 = KeySet<f32>;
pub type ValueSet32 = ValueSet<f32>;
pub type ScoreMatrix32 = ScoreMatrix<f32>;
pub type AffinityMatrix32 = AffinityMatrix<f32>;
pub type MemoryBank32 = MemoryBank<f32>;
