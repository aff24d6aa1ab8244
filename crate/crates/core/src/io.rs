//! `STF1` tensor files and CSV emission.
//!
//! Tensor layout, all little-endian:
//!
//! ```text
//! b"STF1" | rank: u32 | dims: rank × u32 | payload: product(dims) × f32, row-major
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const MAGIC: [u8; 4] = *b"STF1";
pub const MAX_RANK: usize = 3;

/// A rank 1–3 array of 32-bit floats.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Vec<f32>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        if dims.is_empty() || dims.len() > MAX_RANK {
            return Err(Error::dim(format!("tensor rank must be 1..={MAX_RANK}, got {}", dims.len())));
        }
        if dims.iter().any(|&d| d == 0 || d > u32::MAX as usize) {
            return Err(Error::dim(format!("tensor dims out of range: {dims:?}")));
        }
        let n: usize = dims.iter().product();
        if n != data.len() {
            return Err(Error::dim(format!("dims {dims:?} need {n} values, got {}", data.len())));
        }
        Ok(Tensor { dims, data })
    }

    pub fn vector(data: Vec<f32>) -> Result<Self> {
        Self::new(vec![data.len()], data)
    }

    pub fn from_matrix(m: &Matrix<f32>) -> Self {
        Tensor { dims: vec![m.rows(), m.cols()], data: m.as_slice().to_vec() }
    }

    /// Stack equally shaped matrices into a `count×rows×cols` tensor.
    pub fn stack(ms: &[&Matrix<f32>]) -> Result<Self> {
        let first = ms.first().ok_or_else(|| Error::arg("nothing to stack"))?;
        if ms.iter().any(|m| m.rows() != first.rows() || m.cols() != first.cols()) {
            return Err(Error::dim("stacked matrices must share a shape"));
        }
        let data = ms.iter().flat_map(|m| m.as_slice().iter().copied()).collect();
        Self::new(vec![ms.len(), first.rows(), first.cols()], data)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    /// Rank-2 tensors as a matrix; rank 1 becomes a single row.
    pub fn to_matrix(&self) -> Result<Matrix<f32>> {
        match self.dims.as_slice() {
            [n] => Matrix::from_vec(1, *n, self.data.clone()),
            [r, c] => Matrix::from_vec(*r, *c, self.data.clone()),
            dims => Err(Error::dim(format!("expected a matrix, got a rank-{} tensor", dims.len()))),
        }
    }

    /// Split a rank-3 tensor into its matrices; ranks 1–2 yield one matrix.
    pub fn unstack(&self) -> Result<Vec<Matrix<f32>>> {
        match self.dims.as_slice() {
            [n, r, c] => {
                self.data.chunks_exact(r * c).take(*n).map(|chunk| Matrix::from_vec(*r, *c, chunk.to_vec())).collect()
            }
            _ => Ok(vec![self.to_matrix()?]),
        }
    }
}

pub fn encode_tensor(t: &Tensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 4 * t.dims.len() + 4 * t.data.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&(t.dims.len() as u32).to_le_bytes());
    for &d in &t.dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for &x in &t.data {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

/// Parse `bytes`; `origin` only labels errors.
pub fn decode_tensor(bytes: &[u8], origin: &Path) -> Result<Tensor> {
    let bad = |reason: String| Error::Format { path: origin.to_path_buf(), reason };
    if bytes.len() < 8 {
        return Err(bad(format!("header needs at least 8 bytes, file has {}", bytes.len())));
    }
    if bytes[..4] != MAGIC {
        return Err(bad(format!("bad magic {:?}, expected \"STF1\"", String::from_utf8_lossy(&bytes[..4]))));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
    let rank = word(4);
    if rank == 0 || rank > MAX_RANK {
        return Err(bad(format!("rank {rank} not in 1..={MAX_RANK}")));
    }
    let header = 8 + 4 * rank;
    if bytes.len() < header {
        return Err(bad(format!("header needs {header} bytes, file has {}", bytes.len())));
    }
    let dims: Vec<usize> = (0..rank).map(|k| word(8 + 4 * k)).collect();
    if dims.contains(&0) {
        return Err(bad(format!("zero dimension in {dims:?}")));
    }
    let expected = dims
        .iter()
        .try_fold(4usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| bad(format!("dims {dims:?} overflow")))?;
    let actual = bytes.len() - header;
    if actual != expected {
        return Err(bad(format!("payload is {actual} bytes, dims {dims:?} need {expected}")));
    }
    let data = bytes[header..].chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(Tensor { dims, data })
}

pub fn write_tensor(path: impl AsRef<Path>, t: &Tensor) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_tensor(t)).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    decode_tensor(&bytes, path)
}

pub fn write_matrix(path: impl AsRef<Path>, m: &Matrix<f32>) -> Result<()> {
    write_tensor(path, &Tensor::from_matrix(m))
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<Matrix<f32>> {
    read_tensor(path)?.to_matrix()
}

/// One named CSV column.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Float(Vec<f64>),
    Int(Vec<i64>),
    Text(Vec<String>),
}

impl ColumnData {
    fn len(&self) -> usize {
        match self {
            ColumnData::Float(v) => v.len(),
            ColumnData::Int(v) => v.len(),
            ColumnData::Text(v) => v.len(),
        }
    }

    fn cell(&self, i: usize) -> String {
        match self {
            ColumnData::Float(v) => format_float(v[i]),
            ColumnData::Int(v) => v[i].to_string(),
            ColumnData::Text(v) => v[i].clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
}

impl Column {
    pub fn float(name: &str, values: Vec<f64>) -> Self {
        Column { name: name.into(), data: ColumnData::Float(values) }
    }

    pub fn int(name: &str, values: Vec<i64>) -> Self {
        Column { name: name.into(), data: ColumnData::Int(values) }
    }

    pub fn text(name: &str, values: Vec<String>) -> Self {
        Column { name: name.into(), data: ColumnData::Text(values) }
    }
}

/// Nine significant digits, trailing zeros trimmed; exponent form outside
/// `[1e-5, 1e9)`.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{exp}", trim_fraction(mantissa))
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Render columns as CSV text: a header row then one row per index.
pub fn csv_string(columns: &[Column]) -> Result<String> {
    let rows = columns.first().map_or(0, |c| c.data.len());
    if let Some(c) = columns.iter().find(|c| c.data.len() != rows) {
        return Err(Error::arg(format!("column {:?} has {} rows, expected {rows}", c.name, c.data.len())));
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::arg(format!("csv encoding failed: {e}"));
    w.write_record(columns.iter().map(|c| c.name.as_str())).map_err(csv_err)?;
    for i in 0..rows {
        w.write_record(columns.iter().map(|c| c.data.cell(i))).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::arg(format!("csv flush failed: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv of utf-8 fields"))
}

pub fn write_csv(path: impl AsRef<Path>, columns: &[Column]) -> Result<()> {
    let path: PathBuf = path.as_ref().to_path_buf();
    let text = csv_string(columns)?;
    fs::write(&path, text).map_err(|source| Error::Io { path, source })
}
