//! Field files and line-oriented trace output.
//!
//! A field file is a 16-byte header followed by the values as little-endian
//! `f64`, row-major:
//!
//! | bytes  | content                 |
//! |--------|-------------------------|
//! | 0..4   | magic `CGSF`            |
//! | 4      | dimension `N` (u8)      |
//! | 5..8   | reserved, zero          |
//! | 8..12  | points per axis (u32)   |
//! | 12..16 | half-period `L` (f32)   |
//!
//! Grid parameters and provenance go in a JSON sidecar next to the file.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::grid::{Field, Grid};

pub const FIELD_MAGIC: &[u8; 4] = b"CGSF";
pub const HEADER_LEN: usize = 16;

pub fn encode_field(f: &Field) -> Vec<u8> {
    let g = f.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * g.len());
    out.extend_from_slice(FIELD_MAGIC);
    out.push(g.dim() as u8);
    out.extend_from_slice(&[0, 0, 0]);
    out.extend_from_slice(&(g.points() as u32).to_le_bytes());
    out.extend_from_slice(&(g.half_period() as f32).to_le_bytes());
    for v in f.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_field(bytes: &[u8]) -> Result<Field> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != FIELD_MAGIC {
        return Err(CoreError::Io("not a field file (bad magic)".into()));
    }
    let dim = bytes[4] as usize;
    let points = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let half_period = f32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes")) as f64;
    let grid = Grid::new(dim, half_period, points)?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != 8 * grid.len() {
        return Err(CoreError::SizeMismatch {
            expected: grid.len(),
            got: body.len() / 8,
        });
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Field::new(grid, values)
}

pub fn write_field(path: impl AsRef<Path>, f: &Field) -> Result<()> {
    std::fs::write(path, encode_field(f))?;
    Ok(())
}

pub fn read_field(path: impl AsRef<Path>) -> Result<Field> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    decode_field(&bytes)
}

/// Sidecar metadata for a field file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub dim: usize,
    pub half_period: f64,
    pub points: usize,
    pub spacing: f64,
    /// Free-form provenance (producing command, config hash, energies).
    pub provenance: serde_json::Value,
}

impl FieldMeta {
    pub fn new(grid: &Grid, provenance: serde_json::Value) -> Self {
        Self {
            dim: grid.dim(),
            half_period: grid.half_period(),
            points: grid.points(),
            spacing: grid.spacing(),
            provenance,
        }
    }
}

pub fn sidecar_path(path: impl AsRef<Path>) -> PathBuf {
    let mut s = path.as_ref().as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Write the field and its `<path>.json` sidecar.
pub fn write_field_with_meta(
    path: impl AsRef<Path>,
    f: &Field,
    provenance: serde_json::Value,
) -> Result<()> {
    write_field(&path, f)?;
    let meta = FieldMeta::new(f.grid(), provenance);
    let text = serde_json::to_string_pretty(&meta).map_err(|e| CoreError::Io(e.to_string()))?;
    std::fs::write(sidecar_path(&path), text)?;
    Ok(())
}

pub fn read_meta(path: impl AsRef<Path>) -> Result<FieldMeta> {
    let text = std::fs::read_to_string(sidecar_path(path))?;
    serde_json::from_str(&text).map_err(|e| CoreError::Io(e.to_string()))
}

/// One JSON object per line.
pub struct NdjsonWriter<W: Write> {
    out: W,
}

impl NdjsonWriter<BufWriter<File>> {
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        Ok(Self::new(BufWriter::new(File::create(path)?)))
    }
}

impl<W: Write> NdjsonWriter<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    pub fn write<T: Serialize>(&mut self, record: &T) -> Result<()> {
        serde_json::to_writer(&mut self.out, record).map_err(|e| CoreError::Io(e.to_string()))?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

/// Numeric CSV with a header row.
pub fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}
