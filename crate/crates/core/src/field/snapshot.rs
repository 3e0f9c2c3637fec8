//! Binary snapshots: one JSON header line, then little-endian `f64` values in row-major order.

use super::grid::Grid2D;
use super::scalar::ScalarField2D;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub name: String,
    pub time: f64,
}

pub fn write_snapshot<W: Write>(
    mut out: W,
    field: &ScalarField2D,
    name: &str,
    time: f64,
) -> Result<()> {
    let g = field.grid();
    let header = SnapshotHeader {
        nx: g.nx,
        ny: g.ny,
        lx: g.lx,
        ly: g.ly,
        name: name.to_string(),
        time,
    };
    let line = serde_json::to_string(&header).map_err(|e| Error::Format(e.to_string()))?;
    out.write_all(line.as_bytes())?;
    out.write_all(b"\n")?;
    let mut bytes = Vec::with_capacity(8 * field.values().len());
    for v in field.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&bytes)?;
    Ok(())
}

pub fn read_snapshot<R: BufRead>(mut input: R) -> Result<(SnapshotHeader, ScalarField2D)> {
    let mut line = String::new();
    input.read_line(&mut line)?;
    let header: SnapshotHeader =
        serde_json::from_str(line.trim_end()).map_err(|e| Error::Format(e.to_string()))?;
    let grid = Grid2D::new(header.nx, header.ny, header.lx, header.ly)?;
    let mut bytes = vec![0u8; 8 * grid.len()];
    input
        .read_exact(&mut bytes)
        .map_err(|e| Error::Format(format!("truncated snapshot body: {e}")))?;
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let field = ScalarField2D::new(grid, values)?;
    Ok((header, field))
}
