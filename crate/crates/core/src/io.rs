//! `FTNSR1` tensor files.
//!
//! Layout, all little-endian:
//!
//! ```text
//! offset  size      field
//! 0       6         magic "FTNSR1"
//! 6       1         dtype: 0 = f32, 1 = f16, 2 = bf16
//! 7       1         ndim
//! 8       8·ndim    dims, u64 each
//! ...     n·width   row-major payload
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use half::{bf16, f16};
use serde::{Deserialize, Serialize};

use crate::empirics::{emulate_precision, PrecisionKind};
use crate::error::{Error, Result};
use crate::quant::Tensor;

pub const MAGIC: &[u8; 6] = b"FTNSR1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    F32,
    F16,
    Bf16,
}

impl Dtype {
    pub fn code(self) -> u8 {
        match self {
            Dtype::F32 => 0,
            Dtype::F16 => 1,
            Dtype::Bf16 => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Dtype::F32),
            1 => Some(Dtype::F16),
            2 => Some(Dtype::Bf16),
            _ => None,
        }
    }

    pub fn width(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F16 | Dtype::Bf16 => 2,
        }
    }

    fn decode(self, b: &[u8]) -> f64 {
        match self {
            Dtype::F32 => f64::from(f32::from_le_bytes([b[0], b[1], b[2], b[3]])),
            Dtype::F16 => f16::from_le_bytes([b[0], b[1]]).to_f64(),
            Dtype::Bf16 => bf16::from_le_bytes([b[0], b[1]]).to_f64(),
        }
    }

    /// Nearest value in this dtype, ties to even. Narrow types are rounded
    /// from the f64 directly; `half`'s own conversion can pass through f32
    /// and round twice.
    fn encode(self, v: f64, out: &mut Vec<u8>) -> Option<()> {
        match self {
            Dtype::F32 => {
                let x = v as f32;
                x.is_finite().then(|| out.extend_from_slice(&x.to_le_bytes()))
            }
            Dtype::F16 => {
                let x = f16::from_f64(emulate_precision(v, PrecisionKind::Fp16));
                x.is_finite().then(|| out.extend_from_slice(&x.to_le_bytes()))
            }
            Dtype::Bf16 => {
                let x = bf16::from_f64(emulate_precision(v, PrecisionKind::Bf16));
                x.is_finite().then(|| out.extend_from_slice(&x.to_le_bytes()))
            }
        }
    }
}

impl FromStr for Dtype {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "f32" | "fp32" | "float32" => Ok(Dtype::F32),
            "f16" | "fp16" | "float16" => Ok(Dtype::F16),
            "bf16" | "bfloat16" => Ok(Dtype::Bf16),
            _ => Err(Error::config(format!(
                "unknown dtype `{s}` (expected f32, f16 or bf16)"
            ))),
        }
    }
}

fn file_err(offset: u64, message: impl Into<String>) -> Error {
    Error::TensorFile {
        offset,
        message: message.into(),
    }
}

fn read_exact_at(r: &mut impl Read, buf: &mut [u8], offset: u64, what: &str) -> Result<()> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => {
                return Err(file_err(
                    offset + filled as u64,
                    format!("truncated {what}: expected {} bytes, got {filled}", buf.len()),
                ))
            }
            Ok(n) => filled += n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(file_err(offset + filled as u64, format!("reading {what}: {e}"))),
        }
    }
    Ok(())
}

/// Decodes a tensor from a reader positioned at the magic bytes.
pub fn read_tensor_from(mut r: impl Read) -> Result<(Tensor, Dtype)> {
    let mut head = [0u8; 8];
    read_exact_at(&mut r, &mut head, 0, "header")?;
    if &head[..6] != MAGIC {
        return Err(file_err(
            0,
            format!(
                "bad magic {:?}, expected \"FTNSR1\"",
                String::from_utf8_lossy(&head[..6])
            ),
        ));
    }
    let dtype = Dtype::from_code(head[6]).ok_or_else(|| file_err(6, format!("unknown dtype code {}", head[6])))?;
    let ndim = head[7] as usize;
    if ndim == 0 {
        return Err(file_err(7, "ndim must be at least 1"));
    }
    let mut dims_raw = vec![0u8; 8 * ndim];
    read_exact_at(&mut r, &mut dims_raw, 8, "dims")?;
    let mut shape = Vec::with_capacity(ndim);
    let mut count: usize = 1;
    for (i, d) in dims_raw.chunks_exact(8).enumerate() {
        let off = 8 + 8 * i as u64;
        let v = u64::from_le_bytes(d.try_into().expect("8 bytes"));
        let v = usize::try_from(v).map_err(|_| file_err(off, format!("dimension {v} too large")))?;
        if v == 0 {
            return Err(file_err(off, "zero-length dimension"));
        }
        count = count
            .checked_mul(v)
            .ok_or_else(|| file_err(off, "element count overflows"))?;
        shape.push(v);
    }
    let payload_offset = 8 + 8 * ndim as u64;
    let bytes = count
        .checked_mul(dtype.width())
        .ok_or_else(|| file_err(payload_offset, "payload size overflows"))?;
    let mut payload = vec![0u8; bytes];
    read_exact_at(&mut r, &mut payload, payload_offset, "payload")?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra)
        .map_err(|e| file_err(payload_offset + bytes as u64, e.to_string()))?
        != 0
    {
        return Err(file_err(payload_offset + bytes as u64, "trailing bytes after payload"));
    }
    let mut data = Vec::with_capacity(count);
    for (i, b) in payload.chunks_exact(dtype.width()).enumerate() {
        let v = dtype.decode(b);
        if !v.is_finite() {
            return Err(file_err(
                payload_offset + (i * dtype.width()) as u64,
                format!("non-finite value {v} at element {i}"),
            ));
        }
        data.push(v);
    }
    Ok((Tensor::new(shape, data)?, dtype))
}

pub fn read_tensor(path: &Path) -> Result<Tensor> {
    Ok(read_tensor_with_dtype(path)?.0)
}

pub fn read_tensor_with_dtype(path: &Path) -> Result<(Tensor, Dtype)> {
    let f = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_tensor_from(BufReader::new(f))
}

/// Encodes `tensor` in `dtype`; values that overflow the dtype are a data error.
pub fn encode_tensor(tensor: &Tensor, dtype: Dtype) -> Result<Vec<u8>> {
    if tensor.rank() > 255 {
        return Err(Error::shape("FTNSR1 supports at most 255 dimensions"));
    }
    let mut out = Vec::with_capacity(8 + 8 * tensor.rank() + tensor.len() * dtype.width());
    out.extend_from_slice(MAGIC);
    out.push(dtype.code());
    out.push(tensor.rank() as u8);
    for &d in tensor.shape() {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for (i, &v) in tensor.data().iter().enumerate() {
        dtype
            .encode(v, &mut out)
            .ok_or_else(|| Error::data(format!("value {v} at element {i} overflows {dtype:?}")))?;
    }
    Ok(out)
}

pub fn write_tensor(tensor: &Tensor, path: &Path, dtype: Dtype) -> Result<()> {
    let bytes = encode_tensor(tensor, dtype)?;
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    w.write_all(&bytes).map_err(io)?;
    w.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f32_roundtrip() {
        let t = Tensor::new(vec![2, 3], vec![1.0, -2.5, 0.125, 3.0, 1e-3f32 as f64, 7.0]).unwrap();
        let bytes = encode_tensor(&t, Dtype::F32).unwrap();
        assert_eq!(bytes.len(), 8 + 16 + 24);
        let (back, dtype) = read_tensor_from(&bytes[..]).unwrap();
        assert_eq!(back, t);
        assert_eq!(dtype, Dtype::F32);
    }

    #[test]
    fn bf16_decode() {
        let mut bytes = MAGIC.to_vec();
        bytes.extend_from_slice(&[2, 1]);
        bytes.extend_from_slice(&1u64.to_le_bytes());
        bytes.extend_from_slice(&0x3F80u16.to_le_bytes());
        let (t, _) = read_tensor_from(&bytes[..]).unwrap();
        assert_eq!(t.data(), &[1.0]);
    }

    #[test]
    fn errors_carry_offsets() {
        let mut bad = b"XTNSR1".to_vec();
        bad.extend_from_slice(&[0, 1]);
        assert!(matches!(
            read_tensor_from(&bad[..]),
            Err(Error::TensorFile { offset: 0, .. })
        ));

        let t = Tensor::new(vec![4], vec![1.0; 4]).unwrap();
        let bytes = encode_tensor(&t, Dtype::F16).unwrap();
        match read_tensor_from(&bytes[..bytes.len() - 1]) {
            Err(Error::TensorFile { offset, message }) => {
                assert!(offset >= 16, "{offset}");
                assert!(message.contains("truncated"));
            }
            other => panic!("{other:?}"),
        }

        let mut wrong_dtype = bytes.clone();
        wrong_dtype[6] = 9;
        assert!(matches!(
            read_tensor_from(&wrong_dtype[..]),
            Err(Error::TensorFile { offset: 6, .. })
        ));

        let mut trailing = bytes;
        trailing.push(0);
        assert!(read_tensor_from(&trailing[..]).is_err());
    }

    #[test]
    fn narrow_dtypes_round_to_nearest_even() {
        use crate::empirics::{emulate_precision, PrecisionKind};
        let vals = vec![1.0 / 3.0, -1.0 / 127.0, 1000.3, 2f64.powi(-20), 35280.00124195834];
        let t = Tensor::new(vec![vals.len()], vals.clone()).unwrap();
        for (dt, kind) in [(Dtype::F16, PrecisionKind::Fp16), (Dtype::Bf16, PrecisionKind::Bf16)] {
            let (back, _) = read_tensor_from(&encode_tensor(&t, dt).unwrap()[..]).unwrap();
            for (b, v) in back.data().iter().zip(&vals) {
                assert_eq!(*b, emulate_precision(*v, kind));
            }
        }
        let big = Tensor::new(vec![1], vec![1e6]).unwrap();
        assert!(matches!(encode_tensor(&big, Dtype::F16), Err(Error::Data(_))));
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.ftnsr");
        let t = Tensor::from_fn(vec![3, 2, 2], |i| i as f64 - 5.5).unwrap();
        write_tensor(&t, &p, Dtype::F32).unwrap();
        assert_eq!(read_tensor(&p).unwrap(), t);
        assert!(matches!(
            read_tensor(&dir.path().join("missing")),
            Err(Error::Io { .. })
        ));
    }
}
