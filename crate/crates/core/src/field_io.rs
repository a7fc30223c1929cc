//! KTCY v1 binary field dumps and CSV export.
//!
//! Layout: magic `b"KTCY"`, `n` as little-endian `u32`, then `n * n`
//! little-endian `f64` samples in row-major order with the x-index outermost.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Grid, TorusField};

pub const MAGIC: &[u8; 4] = b"KTCY";

pub fn encode_ktcy(field: &TorusField) -> Vec<u8> {
    let n = field.n();
    let mut out = Vec::with_capacity(8 + 8 * n * n);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(n as u32).to_le_bytes());
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_ktcy(bytes: &[u8]) -> Result<TorusField> {
    if bytes.len() < 8 || &bytes[..4] != MAGIC {
        return Err(Error::Format("missing KTCY magic".into()));
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().expect("4-byte slice")) as usize;
    let grid = Grid::new(n)?;
    let body = &bytes[8..];
    if body.len() != 8 * n * n {
        return Err(Error::Format(format!(
            "expected {} payload bytes for n = {n}, found {}",
            8 * n * n,
            body.len()
        )));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    TorusField::from_values(&grid, values)
}

pub fn write_ktcy(path: impl AsRef<Path>, field: &TorusField) -> Result<()> {
    let mut file = fs::File::create(path)?;
    file.write_all(&encode_ktcy(field))?;
    Ok(())
}

pub fn read_ktcy(path: impl AsRef<Path>) -> Result<TorusField> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_ktcy(&bytes)
}

/// One row per x-index, `n` comma-separated values each.
pub fn to_csv(field: &TorusField) -> String {
    let n = field.n();
    let mut out = String::new();
    for row in field.values().chunks(n) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn write_csv(path: impl AsRef<Path>, field: &TorusField) -> Result<()> {
    fs::write(path, to_csv(field))?;
    Ok(())
}
