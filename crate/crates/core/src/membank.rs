//! Memory bank construction and scheduling.
//!
//! Keys are computed once per frame: a query frame's key is reused as a
//! memory key when the frame is memorized, so only values are encoded on
//! insertion. Values are per object; the affinity is shared by all objects.

use std::fmt;
use std::str::FromStr;

use crate::costmodel::{Ledger, KEY_ELEMENT_BYTES};
use crate::error::{Error, Result};
use crate::matrix::{KeySet, ShapeSpec, ValueSet};
use crate::readout::{affinity, readout_multi, Temperature};
use crate::scalar::Scalar;
use crate::similarity::{readout_scores, scale_scores, SimilarityMeasure};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchedulePolicy {
    pub every_nth: usize,
    /// Add the immediately preceding frame as short-lived memory for each query.
    pub include_temporary_last: bool,
}

impl SchedulePolicy {
    pub fn new(every_nth: usize, include_temporary_last: bool) -> Result<Self> {
        if every_nth == 0 {
            return Err(Error::arg("memorization interval must be at least 1"));
        }
        Ok(SchedulePolicy { every_nth, include_temporary_last })
    }
}

impl Default for SchedulePolicy {
    fn default() -> Self {
        SchedulePolicy { every_nth: 5, include_temporary_last: false }
    }
}

/// True for frames the policy stores in memory. Frame 0 is always stored.
pub fn decide_memorize(frame_index: usize, policy: &SchedulePolicy) -> bool {
    frame_index.is_multiple_of(policy.every_nth)
}

/// Whether `frame` enters memory in a video of `video_length` frames. The
/// final frame is never stored since no query follows it; frame 0 always is.
pub fn memorized_in_video(frame: usize, video_length: usize, policy: &SchedulePolicy) -> bool {
    frame == 0 || (frame + 1 < video_length && decide_memorize(frame, policy))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryFrame<T> {
    pub frame_index: usize,
    pub key: KeySet<T>,
    pub values: Vec<ValueSet<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryBank<T> {
    shape: ShapeSpec,
    object_count: usize,
    frames: Vec<MemoryFrame<T>>,
}

impl<T: Scalar> MemoryBank<T> {
    /// An empty bank. `shape.frames_in_memory` is ignored; the bank's own
    /// frame count takes its place.
    pub fn new(shape: ShapeSpec, object_count: usize) -> Result<Self> {
        shape.validate()?;
        if object_count == 0 {
            return Err(Error::arg("a memory bank needs at least one object"));
        }
        Ok(MemoryBank { shape, object_count, frames: Vec::new() })
    }

    pub fn object_count(&self) -> usize {
        self.object_count
    }

    /// Stored frames, `T`.
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frames(&self) -> &[MemoryFrame<T>] {
        &self.frames
    }

    /// Shape with `frames_in_memory` set to the current `T` (at least 1).
    pub fn shape(&self) -> ShapeSpec {
        self.shape.with_frames(self.frames.len().max(1))
    }

    pub fn last_index(&self) -> Option<usize> {
        self.frames.last().map(|f| f.frame_index)
    }

    /// Store a frame's (reused) key and freshly encoded per-object values.
    pub fn append_memory(&mut self, frame_index: usize, key: KeySet<T>, values: Vec<ValueSet<T>>) -> Result<()> {
        if let Some(last) = self.last_index() {
            if frame_index <= last {
                return Err(Error::Ordering { index: frame_index, last });
            }
        }
        self.check_frame(&key, &values)?;
        self.frames.push(MemoryFrame { frame_index, key, values });
        Ok(())
    }

    fn check_frame(&self, key: &KeySet<T>, values: &[ValueSet<T>]) -> Result<()> {
        key.check_query(&self.shape)?;
        if values.len() != self.object_count {
            return Err(Error::dim(format!(
                "frame carries {} value sets, bank holds {} objects",
                values.len(),
                self.object_count
            )));
        }
        for v in values {
            v.check_shape(&self.shape, self.shape.hw())?;
        }
        Ok(())
    }

    /// Memory key `C^k×THW` and per-object values `C^v×THW`, frames in
    /// order with the temporary frame (if any) last.
    pub fn bank_matrices(
        &self,
        temporary: Option<(&KeySet<T>, &[ValueSet<T>])>,
    ) -> Result<(KeySet<T>, Vec<ValueSet<T>>)> {
        if self.frames.is_empty() && temporary.is_none() {
            return Err(Error::EmptyMemory);
        }
        if let Some((k, v)) = temporary {
            self.check_frame(k, v)?;
        }
        let mut keys: Vec<&KeySet<T>> = self.frames.iter().map(|f| &f.key).collect();
        if let Some((k, _)) = temporary {
            keys.push(k);
        }
        let key = KeySet::concat(&keys)?;
        let values = (0..self.object_count)
            .map(|o| {
                let mut parts: Vec<&ValueSet<T>> = self.frames.iter().map(|f| &f.values[o]).collect();
                if let Some((_, v)) = temporary {
                    parts.push(&v[o]);
                }
                ValueSet::concat(&parts)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((key, values))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Architecture {
    /// Per-object memory encoding and per-object affinity.
    Stm,
    /// Shared key encoder and one affinity for all objects.
    Stcn,
}

impl Architecture {
    pub fn name(self) -> &'static str {
        match self {
            Architecture::Stm => "stm",
            Architecture::Stcn => "stcn",
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stm" => Ok(Architecture::Stm),
            "stcn" => Ok(Architecture::Stcn),
            other => Err(Error::arg(format!("unknown architecture {other:?} (stm, stcn)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CostReport {
    pub architecture: Architecture,
    pub key_encoder_calls: u64,
    pub value_encoder_calls: u64,
    pub affinity_computations: u64,
}

/// Encoder and affinity invocation counts for processing a whole video.
///
/// Queries are frames `1..L`. Under STCN the key encoder runs once per
/// frame and one affinity serves all objects; under STM the memory encoder
/// runs per object and so does the affinity. STM keys come out of the
/// memory encoder, so its key encoder count is the query encoder alone.
pub fn simulate_costs(
    video_length: usize,
    object_count: usize,
    policy: &SchedulePolicy,
    architecture: Architecture,
) -> Result<CostReport> {
    if video_length == 0 || object_count == 0 {
        return Err(Error::arg("video length and object count must be at least 1"));
    }
    let (l, m) = (video_length as u64, object_count as u64);
    let queries = l - 1;
    let stored = (0..video_length).filter(|&f| memorized_in_video(f, video_length, policy)).count() as u64;
    let temporary = if policy.include_temporary_last { queries } else { 0 };
    let value_encoder_calls = m * (stored + temporary);
    Ok(match architecture {
        Architecture::Stcn => {
            CostReport { architecture, key_encoder_calls: l, value_encoder_calls, affinity_computations: queries }
        }
        Architecture::Stm => CostReport {
            architecture,
            key_encoder_calls: queries,
            value_encoder_calls,
            affinity_computations: m * queries,
        },
    })
}

/// Settings for [`run_sequence`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceConfig {
    pub policy: SchedulePolicy,
    pub measure: SimilarityMeasure,
    pub scale: bool,
    pub topk: Option<usize>,
    pub temperature: Temperature,
}

impl Default for SequenceConfig {
    fn default() -> Self {
        SequenceConfig {
            policy: SchedulePolicy::default(),
            measure: SimilarityMeasure::L2Decomposed,
            scale: true,
            topk: Some(crate::readout::DEFAULT_TOPK),
            temperature: Temperature::default(),
        }
    }
}

/// Drive a video frame by frame: frame 0 seeds the memory, every later
/// frame is read out against the bank and then stored if the policy says so.
///
/// `keys[f]` is frame `f`'s key (`C^k×HW`) and `values[f]` its per-object
/// values. Returns the per-object readouts of frames `1..L`.
pub fn run_sequence<T: Scalar>(
    shape: ShapeSpec,
    keys: &[KeySet<T>],
    values: &[Vec<ValueSet<T>>],
    config: &SequenceConfig,
    ledger: &mut Ledger,
) -> Result<Vec<Vec<ValueSet<T>>>> {
    if keys.is_empty() || keys.len() != values.len() {
        return Err(Error::arg(format!("{} key frames against {} value frames", keys.len(), values.len())));
    }
    let video_length = keys.len();
    let objects = values[0].len();
    let mut bank = MemoryBank::new(shape, objects)?;
    let key_bytes = (shape.key_dim * shape.hw()) as u64 * KEY_ELEMENT_BYTES;

    ledger.record_key_encode();
    ledger.record_value_encodes(objects);
    bank.append_memory(0, keys[0].clone(), values[0].clone())?;
    ledger.record_key_bytes(key_bytes);

    let mut readouts = Vec::with_capacity(video_length.saturating_sub(1));
    for f in 1..video_length {
        ledger.record_key_encode();
        let query = &keys[f];
        let temporary = if config.policy.include_temporary_last {
            ledger.record_value_encodes(objects);
            Some((&keys[f - 1], values[f - 1].as_slice()))
        } else {
            None
        };
        let (mem_key, mem_values) = bank.bank_matrices(temporary)?;
        let mut scores = readout_scores(&mem_key, query, config.measure)?;
        ledger.record_similarity(config.measure, shape.key_dim, mem_key.count(), query.count());
        if config.scale && config.measure != SimilarityMeasure::Cosine {
            scores = scale_scores(&scores, shape.key_dim)?;
        }
        let w = affinity(&scores, config.topk, config.temperature)?;
        readouts.push(readout_multi(&mem_values, &w, Some(ledger))?);

        if memorized_in_video(f, video_length, &config.policy) {
            ledger.record_value_encodes(objects);
            bank.append_memory(f, query.clone(), values[f].clone())?;
            ledger.record_key_bytes(key_bytes);
        }
    }
    Ok(readouts)
}
