//! Binary checkpoint layout, all integers and floats little-endian:
//!
//! ```text
//! offset  size  field
//!      0     4  magic "HKGE"
//!      4     4  version (u32) = 1
//!      8     4  model code (u32): 0 TransE, 1 DistMult, 2 ComplEx, 3 ComplEx-N3, 4 TuckER
//!     12     4  entity_dim (u32)
//!     16     4  relation_dim (u32)
//!     20     4  num_entities (u32)
//!     24     4  num_relations (u32)
//!     28     8  seed (u64)
//!     36     -  entity table, num_entities * entity_width f32
//!            -  relation table, num_relations * relation_width f32
//!            -  core tensor, relation_dim * entity_dim * entity_dim f32 (TuckER only)
//! ```
//!
//! Widths are `2 * dim` for the complex models and `dim` otherwise.

use std::io::{Read, Write};

use super::{ModelKind, ModelParams};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"HKGE";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn write_checkpoint<W: Write>(p: &ModelParams, mut out: W) -> Result<()> {
    let mut buf = Vec::with_capacity(36 + 4 * (p.entities.len() + p.relations.len() + p.core.len()));
    buf.extend_from_slice(&CHECKPOINT_MAGIC);
    for v in [
        CHECKPOINT_VERSION,
        p.kind.code(),
        dim_u32(p.entity_dim)?,
        dim_u32(p.relation_dim)?,
        dim_u32(p.num_entities)?,
        dim_u32(p.num_relations)?,
    ] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.extend_from_slice(&p.seed.to_le_bytes());
    for x in p.entities.iter().chain(&p.relations).chain(&p.core) {
        buf.extend_from_slice(&(*x as f32).to_le_bytes());
    }
    out.write_all(&buf)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io("checkpoint", e))
}

fn dim_u32(x: usize) -> Result<u32> {
    u32::try_from(x).map_err(|_| Error::Checkpoint(format!("size {x} does not fit in u32")))
}

pub fn read_checkpoint<R: Read>(mut input: R) -> Result<ModelParams> {
    let mut bytes = Vec::new();
    input
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io("checkpoint", e))?;
    if bytes.len() < 36 || bytes[..4] != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("not a checkpoint (bad magic or truncated header)".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported checkpoint version {version}")));
    }
    let kind = ModelKind::from_code(u32_at(8))
        .ok_or_else(|| Error::Checkpoint(format!("unknown model code {}", u32_at(8))))?;
    let seed = u64::from_le_bytes(bytes[28..36].try_into().unwrap());
    let mut p = ModelParams::zeros(
        kind,
        u32_at(20) as usize,
        u32_at(24) as usize,
        u32_at(12) as usize,
        u32_at(16) as usize,
        seed,
    )
    .map_err(|e| Error::Checkpoint(e.to_string()))?;
    let expected = 36 + 4 * (p.entities.len() + p.relations.len() + p.core.len());
    if bytes.len() != expected {
        return Err(Error::Checkpoint(format!(
            "expected {expected} bytes for this header, found {}",
            bytes.len()
        )));
    }
    let mut floats = bytes[36..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64);
    for x in p.entities.iter_mut().chain(&mut p.relations).chain(&mut p.core) {
        *x = floats.next().unwrap();
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_bytes_are_pinned() {
        let mut p = ModelParams::zeros(ModelKind::DistMult, 1, 1, 1, 1, 258).unwrap();
        p.entities[0] = 1.0;
        p.relations[0] = -2.0;
        let mut buf = Vec::new();
        write_checkpoint(&p, &mut buf).unwrap();
        let mut expected = b"HKGE".to_vec();
        expected.extend([1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0]);
        expected.extend([2, 1, 0, 0, 0, 0, 0, 0]);
        expected.extend([0x00, 0x00, 0x80, 0x3f]);
        expected.extend([0x00, 0x00, 0x00, 0xc0]);
        assert_eq!(buf, expected);
    }

    #[test]
    fn round_trip_to_f32_precision() {
        for kind in ModelKind::ALL {
            let p = ModelParams::init(kind, 5, 2, 3, if kind == ModelKind::TuckER { 2 } else { 3 }, 4).unwrap();
            let mut buf = Vec::new();
            write_checkpoint(&p, &mut buf).unwrap();
            let back = read_checkpoint(buf.as_slice()).unwrap();
            assert_eq!((back.kind, back.num_entities, back.core.len()), (kind, 5, p.core.len()));
            for (a, b) in p.entities.iter().zip(&back.entities) {
                assert_eq!(*a as f32, *b as f32);
            }
        }
    }

    #[test]
    fn truncated_and_foreign_files_rejected() {
        let p = ModelParams::init(ModelKind::TransE, 3, 1, 2, 2, 0).unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&p, &mut buf).unwrap();
        assert!(read_checkpoint(&buf[..buf.len() - 1]).is_err());
        assert!(read_checkpoint(&b"PK\x03\x04rest-of-a-zip-file-padding-padding"[..]).is_err());
    }
}
