//! Flat binary field blocks with JSON sidecars.
//!
//! A block file holds named component fields as consecutive little-endian
//! 64-bit float arrays; the sidecar (`<path>.json`) records the grid shape,
//! codimension, slice time and the component names with their offsets.
//! Snapshots and gauge-flow checkpoints share this format; resume reads it
//! back.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::spectral::{SpectralField, TorusGrid};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockHeader {
    pub format_version: u32,
    pub dim: usize,
    pub points_per_axis: usize,
    pub codim: usize,
    pub slice_time: f64,
    pub components: Vec<ComponentEntry>,
    /// free-form provenance (config hash, seed, …)
    #[serde(default)]
    pub metadata: std::collections::BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComponentEntry {
    pub name: String,
    /// offset in f64 units from the start of the binary block
    pub offset: usize,
    pub len: usize,
}

pub const FORMAT_VERSION: u32 = 1;

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".json");
    os.into()
}

/// Write named fields as one block plus sidecar.
pub fn write_block(
    path: &Path,
    dim: usize,
    points_per_axis: usize,
    codim: usize,
    slice_time: f64,
    named: &[(String, &SpectralField)],
    metadata: std::collections::BTreeMap<String, String>,
) -> Result<()> {
    let mut components = Vec::with_capacity(named.len());
    let mut offset = 0usize;
    let mut payload: Vec<u8> = Vec::new();
    for (name, field) in named {
        let vals = field.values();
        components.push(ComponentEntry { name: name.clone(), offset, len: vals.len() });
        offset += vals.len();
        for v in vals {
            payload.extend_from_slice(&v.to_le_bytes());
        }
    }
    let header = BlockHeader {
        format_version: FORMAT_VERSION,
        dim,
        points_per_axis,
        codim,
        slice_time,
        components,
        metadata,
    };
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(&payload)?;
    let side = std::fs::File::create(sidecar_path(path))?;
    serde_json::to_writer_pretty(side, &header)?;
    Ok(())
}

/// Read a block back; fields are reattached to a fresh grid built from the
/// sidecar shape (time metadata defaults are irrelevant for slice data).
pub fn read_block(path: &Path) -> Result<(BlockHeader, Vec<(String, SpectralField)>)> {
    let side = std::fs::File::open(sidecar_path(path))?;
    let header: BlockHeader = serde_json::from_reader(side)?;
    if header.format_version != FORMAT_VERSION {
        return Err(CoreError::Other(format!(
            "unsupported block format version {}",
            header.format_version
        )));
    }
    let mut raw = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut raw)?;
    let grid: Arc<TorusGrid> = TorusGrid::spatial(header.dim, header.points_per_axis);
    let mut fields = Vec::with_capacity(header.components.len());
    for comp in &header.components {
        let start = comp.offset * 8;
        let end = start + comp.len * 8;
        if end > raw.len() {
            return Err(CoreError::Other(format!(
                "component {} extends past end of block",
                comp.name
            )));
        }
        let vals: Vec<f64> = raw[start..end]
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        fields.push((comp.name.clone(), SpectralField::from_values(grid.clone(), vals)));
    }
    Ok((header, fields))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_block() {
        let dir = std::env::temp_dir().join("minsurf-io-test");
        let _ = std::fs::remove_dir_all(&dir);
        let grid = TorusGrid::spatial(2, 8);
        let a = SpectralField::from_fn(grid.clone(), |x| x[0].cos() + 0.5 * x[1].sin());
        let b = SpectralField::from_fn(grid.clone(), |x| (x[0] + x[1]).cos());
        let path = dir.join("snap.bin");
        let mut meta = std::collections::BTreeMap::new();
        meta.insert("seed".to_string(), "7".to_string());
        write_block(
            &path,
            2,
            8,
            1,
            0.25,
            &[("g_00".to_string(), &a), ("k_11".to_string(), &b)],
            meta,
        )
        .unwrap();
        let (header, fields) = read_block(&path).unwrap();
        assert_eq!(header.dim, 2);
        assert_eq!(header.codim, 1);
        assert_eq!(header.slice_time, 0.25);
        assert_eq!(header.metadata["seed"], "7");
        assert_eq!(fields.len(), 2);
        assert_eq!(fields[0].0, "g_00");
        assert!(fields[0].1.sub(&a).max_abs() == 0.0, "bit-exact round trip");
        assert!(fields[1].1.sub(&b).max_abs() == 0.0);
        let _ = std::fs::remove_dir_all(&dir);
    }
}
