//! Row-major `f32` matrices with a 16-byte header:
//! 4-byte magic, then `version`, `rows`, `cols` as little-endian `u32`.

use std::fs;
use std::path::Path;

use crate::error::{CliError, Result};

pub const DESCRIPTOR_MAGIC: [u8; 4] = *b"H2GD";
pub const EMBEDDING_MAGIC: [u8; 4] = *b"H2GE";
pub const MATRIX_VERSION: u32 = 1;
const HEADER: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f32>,
}

impl Matrix {
    /// Narrows `f64` values to `f32`.
    pub fn from_f64(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(CliError::config(format!(
                "matrix data has {} values, expected {rows}x{cols}",
                values.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            data: values.iter().map(|&v| v as f32).collect(),
        })
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|&v| f64::from(v)).collect()
    }

    pub fn encode(&self, magic: [u8; 4]) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER + 4 * self.data.len());
        out.extend_from_slice(&magic);
        out.extend_from_slice(&MATRIX_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.rows as u32).to_le_bytes());
        out.extend_from_slice(&(self.cols as u32).to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8], magic: [u8; 4]) -> Result<Self> {
        if bytes.len() < HEADER {
            return Err(CliError::config("matrix file shorter than its header"));
        }
        if bytes[..4] != magic {
            return Err(CliError::config(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(&bytes[..4]),
                String::from_utf8_lossy(&magic)
            )));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
        let version = word(4);
        if version != MATRIX_VERSION {
            return Err(CliError::config(format!(
                "unsupported matrix version {version}"
            )));
        }
        let (rows, cols) = (word(8) as usize, word(12) as usize);
        let body = &bytes[HEADER..];
        if body.len() != 4 * rows * cols {
            return Err(CliError::config(format!(
                "matrix body has {} bytes, header says {rows}x{cols}",
                body.len()
            )));
        }
        let data = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self { rows, cols, data })
    }

    pub fn write(&self, path: &Path, magic: [u8; 4]) -> Result<()> {
        fs::write(path, self.encode(magic)).map_err(|e| CliError::io(path, e))
    }

    pub fn read(path: &Path, magic: [u8; 4]) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        Self::decode(&bytes, magic)
    }
}
