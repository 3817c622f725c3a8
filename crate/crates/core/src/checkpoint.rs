//! Binary checkpoint of a field and its time.
//!
//! Layout, all little-endian:
//!
//! | bytes | content                          |
//! |-------|----------------------------------|
//! | 4     | magic `ZKCP`                     |
//! | 4     | format version (`u32`, 1)        |
//! | 8     | `nx` (`u64`)                     |
//! | 8     | `ny` (`u64`)                     |
//! | 8     | `L` (`f64`)                      |
//! | 8     | `B` (`f64`)                      |
//! | 8     | `t` (`f64`)                      |
//! | 8 each| `(nx+1)(ny+1)` values, row-major with `x` fastest |

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Field, RectGrid};

const MAGIC: &[u8; 4] = b"ZKCP";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 * 5;

pub fn to_bytes(field: &Field, t: f64) -> Vec<u8> {
    let g = field.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * g.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(g.nx() as u64).to_le_bytes());
    out.extend_from_slice(&(g.ny() as u64).to_le_bytes());
    for v in [g.l(), g.b(), t] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn word<const N: usize>(bytes: &[u8], at: usize) -> [u8; N] {
    bytes[at..at + N].try_into().expect("length checked by caller")
}

pub fn from_bytes(bytes: &[u8]) -> Result<(Field, f64)> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = u32::from_le_bytes(word(bytes, 4));
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let nx = u64::from_le_bytes(word(bytes, 8));
    let ny = u64::from_le_bytes(word(bytes, 16));
    let l = f64::from_le_bytes(word(bytes, 24));
    let b = f64::from_le_bytes(word(bytes, 32));
    let t = f64::from_le_bytes(word(bytes, 40));
    let grid = RectGrid::new(l, b, nx as usize, ny as usize).map_err(|e| Error::Format(e.to_string()))?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != 8 * grid.len() {
        return Err(Error::Format(format!(
            "expected {} value bytes, found {}",
            8 * grid.len(),
            body.len()
        )));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let field = Field::from_values(grid, values).map_err(|e| Error::Format(e.to_string()))?;
    Ok((field, t))
}

pub fn write(path: impl AsRef<Path>, field: &Field, t: f64) -> Result<()> {
    fs::write(path, to_bytes(field, t))?;
    Ok(())
}

pub fn read(path: impl AsRef<Path>) -> Result<(Field, f64)> {
    from_bytes(&fs::read(path)?)
}
