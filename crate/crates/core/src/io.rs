//! Binary field dumps.
//!
//! Layout (all little-endian):
//!
//! | offset | size | content                          |
//! |--------|------|----------------------------------|
//! | 0      | 4    | magic `LLF1`                     |
//! | 4      | 8    | `n_r` as u64                     |
//! | 12     | 8    | `n_theta` as u64                 |
//! | 20     | 8    | `r_out` as f64                   |
//! | 28     | 8    | `stretch` as f64                 |
//! | 36     | 8·n  | values as f64, radial index outer|
//!
//! The grid is rebuilt from the header on load.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::PolarGrid;

pub const MAGIC: &[u8; 4] = b"LLF1";

pub fn write_field<W: Write>(mut out: W, f: &ScalarField) -> Result<()> {
    let g = &f.grid;
    let mut buf = Vec::with_capacity(36 + 8 * f.values.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(g.n_r as u64).to_le_bytes());
    buf.extend_from_slice(&(g.n_theta as u64).to_le_bytes());
    buf.extend_from_slice(&g.r_out.to_le_bytes());
    buf.extend_from_slice(&g.stretch.to_le_bytes());
    for v in &f.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_field<R: Read>(mut input: R) -> Result<ScalarField> {
    let mut head = [0u8; 36];
    input.read_exact(&mut head)?;
    if &head[0..4] != MAGIC {
        return Err(Error::Io("not a field dump (bad magic)".into()));
    }
    let word = |a: usize| -> [u8; 8] { head[a..a + 8].try_into().unwrap() };
    let n_r = u64::from_le_bytes(word(4)) as usize;
    let n_theta = u64::from_le_bytes(word(12)) as usize;
    let r_out = f64::from_le_bytes(word(20));
    let stretch = f64::from_le_bytes(word(28));
    let grid = Arc::new(PolarGrid::new(n_r, n_theta, r_out, stretch)?);
    let mut body = vec![0u8; 8 * grid.len()];
    input.read_exact(&mut body)?;
    let values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    ScalarField::from_values(grid, values)
}

pub fn save_field(path: &Path, f: &ScalarField) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_field(std::io::BufWriter::new(file), f)
}

pub fn load_field(path: &Path) -> Result<ScalarField> {
    let file = std::fs::File::open(path)?;
    read_field(std::io::BufReader::new(file))
}
