use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::FeatureMatrix;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"UFEA";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureFormat {
    #[default]
    Csv,
    Binary,
}

/// Reads CSV or the binary layout (`UFEA`, u32 n, u32 d, then row-major f64,
/// all little-endian); the format is detected from the magic bytes.
pub fn read_features(path: &Path) -> Result<FeatureMatrix> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(MAGIC) {
        return parse_binary(path, &bytes);
    }
    let text = String::from_utf8(bytes).map_err(|_| Error::parse(path, "not UTF-8 and no binary magic"))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|t| {
                let t = t.trim();
                t.parse::<f64>()
                    .map_err(|_| Error::parse(path, format!("line {}: bad number `{t}`", lineno + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::parse(
                    path,
                    format!("line {}: {} columns, expected {}", lineno + 1, row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    FeatureMatrix::from_rows(&rows).map_err(|e| Error::parse(path, e.to_string()))
}

fn parse_binary(path: &Path, bytes: &[u8]) -> Result<FeatureMatrix> {
    if bytes.len() < 12 {
        return Err(Error::parse(path, "truncated header"));
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let d = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if bytes.len() != 12 + 8 * n * d {
        return Err(Error::parse(path, format!("expected {} bytes of data for {n}x{d}", 8 * n * d)));
    }
    let data = bytes[12..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    FeatureMatrix::new(n, d, data).map_err(|e| Error::parse(path, e.to_string()))
}

pub fn write_features_binary(x: &FeatureMatrix, path: &Path) -> Result<()> {
    let mut out = Vec::with_capacity(12 + 8 * x.data().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(x.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(x.dim() as u32).to_le_bytes());
    for v in x.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Shortest round-trip decimal representation, so CSV reloads bit-exactly.
pub fn write_features_csv(x: &FeatureMatrix, path: &Path) -> Result<()> {
    let mut out = String::new();
    for row in x.row_iter() {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
