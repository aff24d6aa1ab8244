//! Analytic FLOP and key-storage accounting, and the runtime [`Ledger`].
//!
//! One multiply-add counts as two FLOPs. Key storage assumes 32-bit floats.

use crate::matrix::ShapeSpec;
use crate::similarity::SimilarityMeasure;

/// Bytes per stored key element.
pub const KEY_ELEMENT_BYTES: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlopEstimate {
    pub measure: SimilarityMeasure,
    pub key_dim: usize,
    pub shape: ShapeSpec,
    pub flops: u64,
}

impl FlopEstimate {
    pub fn new(measure: SimilarityMeasure, key_dim: usize, shape: ShapeSpec) -> Self {
        FlopEstimate { measure, key_dim, shape, flops: similarity_flops(measure, key_dim, &shape) }
    }
}

/// FLOPs to score `memory_nodes` against `query_nodes` with `key_dim` channels.
pub fn pairwise_flops(measure: SimilarityMeasure, key_dim: usize, memory_nodes: usize, query_nodes: usize) -> u64 {
    let (ck, m, n) = (key_dim as u64, memory_nodes as u64, query_nodes as u64);
    let product = 2 * ck * m * n;
    match measure {
        SimilarityMeasure::DotProduct => product,
        // norms (square, add) plus one division per element, both sides
        SimilarityMeasure::Cosine => product + 3 * ck * (m + n),
        // subtract, square, add for every pair and channel
        SimilarityMeasure::L2Naive => 3 * ck * m * n,
        // memory-norm vector, then 2·ab − ‖a‖² per entry
        SimilarityMeasure::L2Decomposed => product + 2 * ck * m + 2 * m * n,
    }
}

/// FLOPs for one `THW×HW` score matrix of `shape` at `key_dim` channels.
pub fn similarity_flops(measure: SimilarityMeasure, key_dim: usize, shape: &ShapeSpec) -> u64 {
    pairwise_flops(measure, key_dim, shape.thw(), shape.hw())
}

/// Bytes of memory keys: `C^k·T·H·W·4`.
pub fn key_storage_bytes(key_dim: usize, shape: &ShapeSpec) -> u64 {
    key_dim as u64 * shape.thw() as u64 * KEY_ELEMENT_BYTES
}

/// Running counters of a readout pipeline. Counts only grow.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Ledger {
    pub affinity_count: u64,
    pub similarity_flops: u64,
    pub key_bytes: u64,
    pub key_encoder_calls: u64,
    pub value_encoder_calls: u64,
}

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record_affinity(&mut self) {
        self.affinity_count += 1;
    }

    pub fn record_similarity(
        &mut self,
        measure: SimilarityMeasure,
        key_dim: usize,
        memory_nodes: usize,
        query_nodes: usize,
    ) {
        self.similarity_flops += pairwise_flops(measure, key_dim, memory_nodes, query_nodes);
    }

    pub fn record_key_bytes(&mut self, bytes: u64) {
        self.key_bytes += bytes;
    }

    pub fn record_key_encode(&mut self) {
        self.key_encoder_calls += 1;
    }

    pub fn record_value_encodes(&mut self, objects: usize) {
        self.value_encoder_calls += objects as u64;
    }
}
