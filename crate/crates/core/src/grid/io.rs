//! `PSHF1` field files.
//!
//! Layout (little-endian): magic `PSHF1`; `u32` rank; per axis `u64` shape,
//! `f64` origin, `f64` spacing; `f64` values in row-major order; one mask byte
//! per node (0 outside, 1 inside, 2 band).

use std::fs;
use std::path::Path;

use super::{GridSpec, Mask, ScalarField};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 5] = b"PSHF1";

pub fn encode_field(field: &ScalarField) -> Vec<u8> {
    let spec = field.spec();
    let n = spec.len();
    let mut out = Vec::with_capacity(5 + 4 + spec.rank() * 24 + n * 9);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(spec.rank() as u32).to_le_bytes());
    for j in 0..spec.rank() {
        out.extend_from_slice(&(spec.shape()[j] as u64).to_le_bytes());
        out.extend_from_slice(&spec.origin()[j].to_le_bytes());
        out.extend_from_slice(&spec.spacing()[j].to_le_bytes());
    }
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend(field.mask().iter().map(|&m| m as u8));
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::Format(format!("truncated payload: need {n} bytes at offset {}", self.pos))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode_field(bytes: &[u8]) -> Result<ScalarField> {
    let mut r = Reader { bytes, pos: 0 };
    let magic = r.take(5).map_err(|_| Error::Format("missing magic".into()))?;
    if magic != MAGIC {
        return Err(Error::Format(format!("bad magic/version {:?}", String::from_utf8_lossy(magic))));
    }
    let rank = r.u32()? as usize;
    if !(2..=4).contains(&rank) {
        return Err(Error::Format(format!("rank {rank} outside 2..=4")));
    }
    let (mut shape, mut origin, mut spacing) = (vec![], vec![], vec![]);
    for _ in 0..rank {
        let n = r.u64()?;
        if n > (1 << 32) {
            return Err(Error::Format(format!("axis length {n} too large")));
        }
        shape.push(n as usize);
        origin.push(r.f64()?);
        spacing.push(r.f64()?);
    }
    let spec = GridSpec::new(shape, origin, spacing).map_err(|e| Error::Format(e.to_string()))?;
    let n = spec.len();
    let raw = r.take(n.checked_mul(8).ok_or_else(|| Error::Format("node count overflow".into()))?)?;
    let values = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let mask = r
        .take(n)?
        .iter()
        .map(|&b| Mask::from_byte(b).ok_or_else(|| Error::Format(format!("mask byte {b}"))))
        .collect::<Result<Vec<_>>>()?;
    if r.pos != bytes.len() {
        return Err(Error::Format(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    ScalarField::from_parts(spec, values, mask).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_field(field: &ScalarField, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_field(field))?;
    Ok(())
}

pub fn read_field(path: impl AsRef<Path>) -> Result<ScalarField> {
    decode_field(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> ScalarField {
        let spec = GridSpec::from_bounds(&[-1.0, -1.0], &[1.0, 1.0], &[9, 9]).unwrap();
        ScalarField::build(spec, |x| x[0].hypot(x[1]).ln(), |x| x[0] * x[0] + x[1] * x[1] < 0.9).unwrap()
    }

    #[test]
    fn round_trip_keeps_pole_and_mask() {
        let f = sample();
        assert!(f.values().contains(&f64::NEG_INFINITY));
        let g = decode_field(&encode_field(&f)).unwrap();
        assert!(f.bit_eq(&g));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.pshf");
        let f = sample();
        write_field(&f, &path).unwrap();
        assert!(read_field(&path).unwrap().bit_eq(&f));
    }

    #[test]
    fn corrupt_header_and_truncation() {
        let mut bytes = encode_field(&sample());
        let mut bad = bytes.clone();
        bad[4] = b'2';
        assert!(matches!(decode_field(&bad), Err(Error::Format(_))));
        bytes.truncate(bytes.len() - 3);
        assert!(matches!(decode_field(&bytes), Err(Error::Format(_))));
        assert!(decode_field(b"PSH").is_err());
    }

    proptest! {
        #[test]
        fn encode_decode_identity(
            nx in 3usize..7, ny in 3usize..7,
            vals in proptest::collection::vec(prop_oneof![Just(f64::NEG_INFINITY), -1e6f64..1e6], 49),
            tags in proptest::collection::vec(0u8..3, 49),
        ) {
            let spec = GridSpec::new(vec![nx, ny], vec![0.25, -3.0], vec![0.5, 1.0 / 3.0]).unwrap();
            let n = spec.len();
            let mask: Vec<Mask> = tags[..n].iter().map(|&b| Mask::from_byte(b).unwrap()).collect();
            let values = (0..n).map(|i| if mask[i].is_inside() { vals[i] } else { 0.0 }).collect();
            let f = ScalarField::from_parts(spec, values, mask).unwrap();
            prop_assert!(decode_field(&encode_field(&f)).unwrap().bit_eq(&f));
        }
    }
}
