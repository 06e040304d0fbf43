//! `TSPT` container: 4-byte magic, `u16` version, `u8` dtype, `u8` rank,
//! `rank` x `u32` extents, then row-major little-endian values.

use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::{Tensor, MAX_RANK};

pub const MAGIC: &[u8; 4] = b"TSPT";
pub const VERSION: u16 = 1;

/// Element type stored in a tensor file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DType {
    F32,
    F64,
}

impl DType {
    fn code(self) -> u8 {
        match self {
            DType::F32 => 0,
            DType::F64 => 1,
        }
    }

    fn from_code(c: u8) -> Result<Self> {
        match c {
            0 => Ok(DType::F32),
            1 => Ok(DType::F64),
            _ => Err(Error::TensorFormat(format!("unknown dtype code {c}"))),
        }
    }

    pub fn size(self) -> usize {
        match self {
            DType::F32 => 4,
            DType::F64 => 8,
        }
    }
}

/// Serializes `t`. Values are rounded to nearest when stored as `F32`.
pub fn encode_tensor(t: &Tensor, dtype: DType) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 4 * t.rank() + dtype.size() * t.numel());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(dtype.code());
    out.push(t.rank() as u8);
    for &d in t.shape() {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    match dtype {
        DType::F32 => t.data().iter().for_each(|&v| out.extend_from_slice(&(v as f32).to_le_bytes())),
        DType::F64 => t.data().iter().for_each(|&v| out.extend_from_slice(&v.to_le_bytes())),
    }
    out
}

/// Parses a tensor file, returning the stored dtype alongside the values so
/// a re-encode reproduces the input bytes.
pub fn decode_tensor(bytes: &[u8]) -> Result<(Tensor, DType)> {
    let bad = |m: String| Error::TensorFormat(m);
    if bytes.len() < 8 {
        return Err(bad(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(bad(format!("bad magic {:?}", &bytes[..4])));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let dtype = DType::from_code(bytes[6])?;
    let ndim = bytes[7] as usize;
    if !(1..=MAX_RANK).contains(&ndim) {
        return Err(bad(format!("rank {ndim} outside 1..={MAX_RANK}")));
    }
    let header = 8 + 4 * ndim;
    if bytes.len() < header {
        return Err(bad("truncated shape".into()));
    }
    let shape: Vec<usize> = bytes[8..header]
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().expect("4 bytes")) as usize)
        .collect();
    let numel = shape
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| bad(format!("shape {shape:?} overflows")))?;
    let payload = &bytes[header..];
    let expected = numel.checked_mul(dtype.size()).ok_or_else(|| bad("payload size overflows".into()))?;
    if payload.len() != expected {
        return Err(bad(format!(
            "payload is {} bytes, shape {shape:?} needs {expected}",
            payload.len()
        )));
    }
    let data: Vec<f64> = match dtype {
        DType::F32 => payload
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes(c.try_into().expect("4 bytes"))))
            .collect(),
        DType::F64 => payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect(),
    };
    let t = Tensor::new(shape, data).map_err(|e| bad(e.to_string()))?;
    Ok((t, dtype))
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<(Tensor, DType)> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_tensor(&bytes).map_err(|e| Error::TensorFormat(format!("{}: {e}", path.display())))
}

pub fn write_tensor(path: impl AsRef<Path>, t: &Tensor, dtype: DType) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_tensor(t, dtype)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let t = Tensor::new(vec![2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.5]).unwrap();
        let b = encode_tensor(&t, DType::F32);
        assert_eq!(&b[..8], &[b'T', b'S', b'P', b'T', 1, 0, 0, 2]);
        assert_eq!(&b[8..16], &[2, 0, 0, 0, 3, 0, 0, 0]);
        assert_eq!(b.len(), 16 + 24);
        assert_eq!(&b[36..40], &6.5f32.to_le_bytes());
        assert_eq!(encode_tensor(&t, DType::F64).len(), 16 + 48);
    }

    #[test]
    fn rejects_malformed() {
        let t = Tensor::from_vec(vec![1.0, 2.0]).unwrap();
        let good = encode_tensor(&t, DType::F64);
        let mutate = |i: usize, v: u8| {
            let mut b = good.clone();
            b[i] = v;
            b
        };
        assert!(decode_tensor(&mutate(0, b'X')).is_err());
        assert!(decode_tensor(&mutate(4, 2)).is_err());
        assert!(decode_tensor(&mutate(6, 7)).is_err());
        assert!(decode_tensor(&mutate(7, 0)).is_err());
        assert!(decode_tensor(&mutate(7, 5)).is_err());
        assert!(decode_tensor(&mutate(8, 0)).is_err());
        assert!(decode_tensor(&good[..good.len() - 1]).is_err());
        assert!(decode_tensor(&[good.clone(), vec![0]].concat()).is_err());
        assert!(decode_tensor(&good[..5]).is_err());
        let mut nan = good.clone();
        nan[12..20].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(decode_tensor(&nan).is_err());
        assert!(decode_tensor(&[0xff; 3]).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.tspt");
        let t = Tensor::from_fn(&[2, 2, 3], |i| (i[0] * 6 + i[1] * 3 + i[2]) as f64 * 0.1).unwrap();
        write_tensor(&p, &t, DType::F64).unwrap();
        assert_eq!(read_tensor(&p).unwrap(), (t, DType::F64));
        assert!(read_tensor(dir.path().join("missing.tspt")).is_err());
    }

    proptest! {
        #[test]
        fn f64_round_trip_exact(shape in prop::collection::vec(1usize..5, 1..=4), seed in any::<u64>()) {
            let mut rng = crate::rng::Lcg::new(seed);
            let t = Tensor::from_fn(&shape, |_| rng.uniform(-1e6, 1e6)).unwrap();
            let b = encode_tensor(&t, DType::F64);
            let (back, dt) = decode_tensor(&b).unwrap();
            prop_assert_eq!(&back, &t);
            prop_assert_eq!(encode_tensor(&back, dt), b);
        }

        #[test]
        fn f32_round_trip_within_quantization(shape in prop::collection::vec(1usize..5, 1..=4), seed in any::<u64>()) {
            let mut rng = crate::rng::Lcg::new(seed);
            let t = Tensor::from_fn(&shape, |_| rng.uniform(-100.0, 100.0)).unwrap();
            let b = encode_tensor(&t, DType::F32);
            let (back, dt) = decode_tensor(&b).unwrap();
            prop_assert_eq!(dt, DType::F32);
            for (x, y) in t.data().iter().zip(back.data()) {
                prop_assert!((x - y).abs() <= x.abs() * f64::from(f32::EPSILON));
            }
            prop_assert_eq!(encode_tensor(&back, dt), b);
        }
    }
}
