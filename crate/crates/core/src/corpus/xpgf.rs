//! XPGF: the binary matrix container exchanged with the feature extractors.
//!
//! Layout, all little-endian, no padding:
//!
//! | bytes | field                          |
//! |-------|--------------------------------|
//! | 4     | magic `XPGF`                   |
//! | 4     | version (u32)                  |
//! | 4     | rows (u32)                     |
//! | 4     | cols (u32)                     |
//! | rest  | rows * cols values, row-major  |
//!
//! Version 1 carries IEEE-754 binary32 values and is the only version used for
//! feature files. Version 2 carries binary64 values; it appears inside PCA
//! model files, where scores must survive a save/load bit-exactly, and in the
//! fused-vector dump written by `xppg fuse`.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const XPGF_MAGIC: &[u8; 4] = b"XPGF";
pub const XPGF_VERSION_F32: u32 = 1;
pub const XPGF_VERSION_F64: u32 = 2;
const HEADER_LEN: usize = 16;

/// Dense row-major matrix of finite `f32` values.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f32>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f32>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Format(format!("empty matrix {rows}x{cols}")));
        }
        if rows.checked_mul(cols) != Some(values.len()) {
            return Err(Error::Format(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows.saturating_mul(cols),
                values.len()
            )));
        }
        if u32::try_from(rows).is_err() || u32::try_from(cols).is_err() {
            return Err(Error::Format("matrix dimension exceeds u32".into()));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Format(format!(
                "non-finite value at row {}, col {}",
                pos / cols,
                pos % cols
            )));
        }
        Ok(Self { rows, cols, values })
    }

    /// Builds from `f64` rows, rounding each value to `f32`.
    pub fn from_rows_f64(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Format("ragged rows".into()));
        }
        let values = rows.iter().flatten().map(|&v| v as f32).collect();
        Self::new(rows.len(), cols, values)
    }

    pub fn row_vector(values: Vec<f32>) -> Result<Self> {
        Self::new(1, values.len(), values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn row(&self, r: usize) -> &[f32] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f32 {
        self.values[r * self.cols + c]
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.values.iter().map(|&v| f64::from(v)).collect()
    }

    /// PPG invariant: every entry lies in [0, 1].
    pub fn check_probability_like(&self) -> Result<()> {
        match self.values.iter().position(|v| !(0.0..=1.0).contains(v)) {
            None => Ok(()),
            Some(pos) => Err(Error::Format(format!(
                "posterior {} at row {}, col {} outside [0, 1]",
                self.values[pos],
                pos / self.cols,
                pos % self.cols
            ))),
        }
    }
}

fn header(version: u32, rows: usize, cols: usize, payload: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + payload);
    out.extend_from_slice(XPGF_MAGIC);
    out.extend_from_slice(&version.to_le_bytes());
    out.extend_from_slice(&(rows as u32).to_le_bytes());
    out.extend_from_slice(&(cols as u32).to_le_bytes());
    out
}

pub fn encode_matrix(m: &FeatureMatrix) -> Vec<u8> {
    let mut out = header(XPGF_VERSION_F32, m.rows, m.cols, m.values.len() * 4);
    for v in &m.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Encodes a binary64 block. Values must be finite and the shape non-empty.
pub fn encode_matrix_f64(rows: usize, cols: usize, values: &[f64]) -> Result<Vec<u8>> {
    if rows == 0 || cols == 0 || rows * cols != values.len() {
        return Err(Error::Format(format!(
            "bad f64 block shape {rows}x{cols} for {} values",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Format("non-finite value in f64 block".into()));
    }
    let mut out = header(XPGF_VERSION_F64, rows, cols, values.len() * 8);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"))
}

fn parse_header(bytes: &[u8], want_version: u32) -> Result<(usize, usize)> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!(
            "truncated header: {} bytes",
            bytes.len()
        )));
    }
    if &bytes[..4] != XPGF_MAGIC {
        return Err(Error::Format(format!("bad magic {:?}", &bytes[..4])));
    }
    let version = u32_at(bytes, 4);
    if version != want_version {
        return Err(Error::Format(format!(
            "unsupported version {version}, expected {want_version}"
        )));
    }
    Ok((u32_at(bytes, 8) as usize, u32_at(bytes, 12) as usize))
}

fn payload_len(rows: usize, cols: usize, width: usize) -> Result<usize> {
    rows.checked_mul(cols)
        .and_then(|n| n.checked_mul(width))
        .ok_or_else(|| Error::Format(format!("dimensions {rows}x{cols} overflow")))
}

/// Decodes one binary32 block from the front of `bytes`; returns the matrix and bytes consumed.
pub fn decode_matrix(bytes: &[u8]) -> Result<(FeatureMatrix, usize)> {
    let (rows, cols) = parse_header(bytes, XPGF_VERSION_F32)?;
    let need = payload_len(rows, cols, 4)?;
    let available = bytes.len() - HEADER_LEN;
    if available < need {
        return Err(Error::Format(format!(
            "header declares {rows}x{cols} ({} values) but payload holds {}",
            rows * cols,
            available / 4
        )));
    }
    let values = bytes[HEADER_LEN..HEADER_LEN + need]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    Ok((FeatureMatrix::new(rows, cols, values)?, HEADER_LEN + need))
}

/// Decodes one binary64 block; returns `(rows, cols, values, bytes consumed)`.
pub fn decode_matrix_f64(bytes: &[u8]) -> Result<(usize, usize, Vec<f64>, usize)> {
    let (rows, cols) = parse_header(bytes, XPGF_VERSION_F64)?;
    if rows == 0 || cols == 0 {
        return Err(Error::Format(format!("empty f64 block {rows}x{cols}")));
    }
    let need = payload_len(rows, cols, 8)?;
    if bytes.len() - HEADER_LEN < need {
        return Err(Error::Format(format!(
            "f64 block {rows}x{cols} truncated"
        )));
    }
    let values: Vec<f64> = bytes[HEADER_LEN..HEADER_LEN + need]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Format("non-finite value in f64 block".into()));
    }
    Ok((rows, cols, values, HEADER_LEN + need))
}

pub fn read_feature_file(path: &Path) -> Result<FeatureMatrix> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (m, used) =
        decode_matrix(&bytes).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    if used != bytes.len() {
        return Err(Error::Format(format!(
            "{}: {} trailing bytes after payload",
            path.display(),
            bytes.len() - used
        )));
    }
    Ok(m)
}

pub fn write_feature_file(m: &FeatureMatrix, path: &Path) -> Result<()> {
    fs::write(path, encode_matrix(m)).map_err(|e| Error::io(path, e))
}
