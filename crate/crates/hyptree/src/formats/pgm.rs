//! Binary (P5) PGM grids. Values above 255 use the two-byte big-endian form.

use std::fs;
use std::path::Path;

use hyptree_core::{Grid, Mask};

use crate::error::{CliError, Result};

pub fn encode(grid: &Grid<u16>) -> Vec<u8> {
    let maxval = grid.as_slice().iter().copied().max().unwrap_or(0).max(1);
    let wide = maxval > 255;
    let mut out = format!("P5\n{} {}\n{}\n", grid.width(), grid.height(), maxval).into_bytes();
    for &v in grid.as_slice() {
        if wide {
            out.extend_from_slice(&v.to_be_bytes());
        } else {
            out.push(v as u8);
        }
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Grid<u16>> {
    let bad = |m: &str| CliError::config(format!("PGM: {m}"));
    // magic, width, height, maxval: whitespace separated, '#' comments
    let mut fields = Vec::with_capacity(4);
    let mut i = 0;
    while fields.len() < 4 {
        while i < bytes.len() && (bytes[i].is_ascii_whitespace() || bytes[i] == b'#') {
            if bytes[i] == b'#' {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            } else {
                i += 1;
            }
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..i]).map_err(|_| bad("header is not ASCII"))?);
    }
    if fields[0] != "P5" {
        return Err(bad("not a binary graymap"));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad header number"));
    let (w, h, maxval) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
    if maxval == 0 || maxval > 65535 {
        return Err(bad("maxval out of range"));
    }
    let body = &bytes[(i + 1).min(bytes.len())..];
    let width = if maxval > 255 { 2 } else { 1 };
    if body.len() != w * h * width {
        return Err(bad("pixel data does not match the header"));
    }
    let data = if width == 2 {
        body.chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    } else {
        body.iter().map(|&b| u16::from(b)).collect()
    };
    Grid::from_vec(h, w, data).map_err(CliError::from)
}

pub fn write(path: &Path, grid: &Grid<u16>) -> Result<()> {
    fs::write(path, encode(grid)).map_err(|e| CliError::io(path, e))
}

pub fn read(path: &Path) -> Result<Grid<u16>> {
    decode(&fs::read(path).map_err(|e| CliError::io(path, e))?)
}

/// Masks are stored as 0 / 255.
pub fn write_mask(path: &Path, mask: &Mask) -> Result<()> {
    write(path, &mask.map(|&b| if b { 255 } else { 0 }))
}

pub fn read_mask(path: &Path) -> Result<Mask> {
    Ok(read(path)?.map(|&v| v != 0))
}
