//! Versioned binary weight checkpoints.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic    8 bytes  "NPAINCKP"
//! version  u32      currently 1
//! count    u32      number of entries
//! entry*   index u32 | rank u32 | dims u64 * rank | values f64 * prod(dims)
//! ```
//!
//! Floats are stored as raw IEEE-754 bits, so a round trip is bit-exact.

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"NPAINCKP";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointEntry {
    /// Position of the tensor in the owning model's parameter order.
    pub index: u32,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

pub fn write_checkpoint<W: Write>(mut w: W, entries: &[CheckpointEntry]) -> Result<()> {
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&(entries.len() as u32).to_le_bytes())?;
    for e in entries {
        if e.shape.iter().product::<usize>() != e.values.len() {
            return Err(Error::Checkpoint(format!(
                "entry {} shape {:?} does not match {} values",
                e.index,
                e.shape,
                e.values.len()
            )));
        }
        w.write_all(&e.index.to_le_bytes())?;
        w.write_all(&(e.shape.len() as u32).to_le_bytes())?;
        for d in &e.shape {
            w.write_all(&(*d as u64).to_le_bytes())?;
        }
        for v in &e.values {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Vec<CheckpointEntry>> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = read_u32(&mut r)?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let count = read_u32(&mut r)?;
    let mut entries = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let index = read_u32(&mut r)?;
        let rank = read_u32(&mut r)? as usize;
        let shape = (0..rank)
            .map(|_| read_u64(&mut r).map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        let n: usize = shape.iter().product();
        let values = (0..n)
            .map(|_| read_u64(&mut r).map(f64::from_bits))
            .collect::<Result<Vec<_>>>()?;
        entries.push(CheckpointEntry { index, shape, values });
    }
    Ok(entries)
}
