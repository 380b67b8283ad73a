//! Byte layout of FP and BP messages. All integers little-endian.
//!
//! ```text
//! offset  size  field
//! 0       4     magic: "MSFP" (FP) or "MSBP" (BP)
//! 4       2     version = 1
//! 6       1     dtype: 1 = binary32, 2 = binary64
//! 7       1     reserved, 0
//! 8       4     batch b
//! 12      4     sequence length L
//! 16      4     map height h
//! 20      4     map width w
//! 24      8     accounting bits (BP only)
//! ..      n     body: b·L·h·w values, row-major [b][L][h][w]
//! ..      4     CRC-32 (IEEE) of every preceding byte
//! ```

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const FP_MAGIC: [u8; 4] = *b"MSFP";
pub const BP_MAGIC: [u8; 4] = *b"MSBP";
pub const WIRE_VERSION: u16 = 1;

const FP_HEADER: usize = 24;
const BP_HEADER: usize = 32;
const CRC_LEN: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WireDtype {
    #[default]
    F32,
    /// Lossless; used to compare split and unsplit training bit for bit.
    F64,
}

impl WireDtype {
    pub fn bits(self) -> u32 {
        match self {
            WireDtype::F32 => 32,
            WireDtype::F64 => 64,
        }
    }

    fn tag(self) -> u8 {
        match self {
            WireDtype::F32 => 1,
            WireDtype::F64 => 2,
        }
    }

    fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            1 => Ok(WireDtype::F32),
            2 => Ok(WireDtype::F64),
            t => Err(Error::Decode(format!("unknown dtype tag {t}"))),
        }
    }
}

/// Dimensions of a batch of cut tensors, `b × L × h × w`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutShape {
    pub batch: u32,
    pub seq_len: u32,
    pub height: u32,
    pub width: u32,
}

impl CutShape {
    pub fn value_count(&self) -> Option<usize> {
        (self.batch as usize)
            .checked_mul(self.seq_len as usize)?
            .checked_mul(self.height as usize)?
            .checked_mul(self.width as usize)
    }

    fn sample_len(&self) -> usize {
        self.seq_len as usize * self.height as usize * self.width as usize
    }
}

/// Pooled UE activations for a batch of sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct FpMessage {
    pub shape: CutShape,
    pub values: Vec<f64>,
}

/// Cut-layer gradients for a batch, plus the bit count charged to the link.
#[derive(Debug, Clone, PartialEq)]
pub struct BpMessage {
    pub shape: CutShape,
    pub accounting_bits: u64,
    pub values: Vec<f64>,
}

fn from_samples(samples: &[Tensor]) -> Result<(CutShape, Vec<f64>)> {
    let Some(first) = samples.first() else {
        return Err(crate::error::dim_err!("no samples"));
    };
    let [l, 1, h, w] = *first.shape() else {
        return Err(crate::error::dim_err!("cut tensor must be L×1×h×w, got {:?}", first.shape()));
    };
    let mut values = Vec::with_capacity(samples.len() * first.len());
    for s in samples {
        first.same_shape(s)?;
        values.extend_from_slice(s.data());
    }
    let shape = CutShape {
        batch: samples.len() as u32,
        seq_len: l as u32,
        height: h as u32,
        width: w as u32,
    };
    Ok((shape, values))
}

fn to_samples(shape: &CutShape, values: &[f64]) -> Result<Vec<Tensor>> {
    let n = shape.sample_len();
    let dims = [shape.seq_len as usize, 1, shape.height as usize, shape.width as usize];
    (0..shape.batch as usize)
        .map(|i| Tensor::new(&dims, values[i * n..(i + 1) * n].to_vec()))
        .collect()
}

impl FpMessage {
    pub fn empty(seq_len: u32, height: u32, width: u32) -> Self {
        FpMessage {
            shape: CutShape { batch: 0, seq_len, height, width },
            values: Vec::new(),
        }
    }

    /// Packs per-sample `L×1×h×w` maps.
    pub fn from_samples(samples: &[Tensor]) -> Result<Self> {
        let (shape, values) = from_samples(samples)?;
        Ok(FpMessage { shape, values })
    }

    pub fn samples(&self) -> Result<Vec<Tensor>> {
        to_samples(&self.shape, &self.values)
    }

    pub fn body_bits(&self, dtype: WireDtype) -> u64 {
        self.values.len() as u64 * dtype.bits() as u64
    }
}

impl BpMessage {
    pub fn from_samples(samples: &[Tensor], accounting_bits: u64) -> Result<Self> {
        let (shape, values) = from_samples(samples)?;
        Ok(BpMessage { shape, accounting_bits, values })
    }

    pub fn samples(&self) -> Result<Vec<Tensor>> {
        to_samples(&self.shape, &self.values)
    }

    pub fn body_bits(&self, dtype: WireDtype) -> u64 {
        self.values.len() as u64 * dtype.bits() as u64
    }
}

fn write_header(out: &mut Vec<u8>, magic: [u8; 4], dtype: WireDtype, shape: &CutShape) {
    out.extend_from_slice(&magic);
    out.extend_from_slice(&WIRE_VERSION.to_le_bytes());
    out.push(dtype.tag());
    out.push(0);
    for d in [shape.batch, shape.seq_len, shape.height, shape.width] {
        out.extend_from_slice(&d.to_le_bytes());
    }
}

fn write_body(out: &mut Vec<u8>, dtype: WireDtype, values: &[f64]) -> Result<()> {
    for (i, &v) in values.iter().enumerate() {
        match dtype {
            WireDtype::F32 => {
                let f = v as f32;
                if !f.is_finite() {
                    return Err(Error::NonFinite(format!("wire value {i} ({v}) as binary32")));
                }
                out.extend_from_slice(&f.to_le_bytes());
            }
            WireDtype::F64 => {
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("wire value {i} ({v})")));
                }
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    Ok(())
}

fn seal(mut out: Vec<u8>) -> Vec<u8> {
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

fn check_len(shape: &CutShape, values: &[f64]) -> Result<()> {
    if shape.value_count() != Some(values.len()) {
        return Err(crate::error::dim_err!(
            "message header {:?} does not match {} values",
            shape,
            values.len()
        ));
    }
    Ok(())
}

pub fn encode_fp(msg: &FpMessage, dtype: WireDtype) -> Result<Vec<u8>> {
    check_len(&msg.shape, &msg.values)?;
    let mut out = Vec::with_capacity(FP_HEADER + msg.values.len() * 8 + CRC_LEN);
    write_header(&mut out, FP_MAGIC, dtype, &msg.shape);
    write_body(&mut out, dtype, &msg.values)?;
    Ok(seal(out))
}

pub fn encode_bp(msg: &BpMessage, dtype: WireDtype) -> Result<Vec<u8>> {
    check_len(&msg.shape, &msg.values)?;
    let mut out = Vec::with_capacity(BP_HEADER + msg.values.len() * 8 + CRC_LEN);
    write_header(&mut out, BP_MAGIC, dtype, &msg.shape);
    out.extend_from_slice(&msg.accounting_bits.to_le_bytes());
    write_body(&mut out, dtype, &msg.values)?;
    Ok(seal(out))
}

struct Decoded {
    dtype: WireDtype,
    shape: CutShape,
    accounting_bits: u64,
    values: Vec<f64>,
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

fn decode(bytes: &[u8], magic: [u8; 4], header_len: usize, verify: bool) -> Result<Decoded> {
    if bytes.len() < header_len + CRC_LEN {
        return Err(Error::Decode(format!("truncated message: {} bytes", bytes.len())));
    }
    if bytes[..4] != magic {
        return Err(Error::Decode(format!("bad magic {:?}", &bytes[..4])));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != WIRE_VERSION {
        return Err(Error::Decode(format!("unsupported version {version}")));
    }
    let dtype = WireDtype::from_tag(bytes[6])?;
    if bytes[7] != 0 {
        return Err(Error::Decode("reserved byte set".into()));
    }
    let shape = CutShape {
        batch: u32_at(bytes, 8),
        seq_len: u32_at(bytes, 12),
        height: u32_at(bytes, 16),
        width: u32_at(bytes, 20),
    };
    let accounting_bits = if header_len == BP_HEADER {
        let mut a = [0u8; 8];
        a.copy_from_slice(&bytes[24..32]);
        u64::from_le_bytes(a)
    } else {
        0
    };
    let width = dtype.bits() as usize / 8;
    let count = shape
        .value_count()
        .ok_or_else(|| Error::Decode("header dimensions overflow".into()))?;
    let expected = count
        .checked_mul(width)
        .and_then(|b| b.checked_add(header_len + CRC_LEN))
        .ok_or_else(|| Error::Decode("header dimensions overflow".into()))?;
    if bytes.len() != expected {
        return Err(Error::Decode(format!(
            "length {} does not match header (expected {expected})",
            bytes.len()
        )));
    }
    let crc_at = bytes.len() - CRC_LEN;
    if verify {
        let stored = u32_at(bytes, crc_at);
        let actual = crc32fast::hash(&bytes[..crc_at]);
        if stored != actual {
            return Err(Error::Decode(format!("checksum mismatch: {stored:#010x} vs {actual:#010x}")));
        }
    }
    let body = &bytes[header_len..crc_at];
    let values = match dtype {
        WireDtype::F32 => body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect(),
        WireDtype::F64 => body
            .chunks_exact(8)
            .map(|c| {
                let mut a = [0u8; 8];
                a.copy_from_slice(c);
                f64::from_le_bytes(a)
            })
            .collect(),
    };
    Ok(Decoded { dtype, shape, accounting_bits, values })
}

/// Parses and checksum-verifies an FP message; returns it with its wire dtype.
pub fn decode_fp(bytes: &[u8]) -> Result<(FpMessage, WireDtype)> {
    let d = decode(bytes, FP_MAGIC, FP_HEADER, true)?;
    Ok((FpMessage { shape: d.shape, values: d.values }, d.dtype))
}

/// Like [`decode_fp`] but ignores the trailing checksum.
pub fn decode_fp_unverified(bytes: &[u8]) -> Result<(FpMessage, WireDtype)> {
    let d = decode(bytes, FP_MAGIC, FP_HEADER, false)?;
    Ok((FpMessage { shape: d.shape, values: d.values }, d.dtype))
}

pub fn decode_bp(bytes: &[u8]) -> Result<(BpMessage, WireDtype)> {
    let d = decode(bytes, BP_MAGIC, BP_HEADER, true)?;
    Ok((
        BpMessage { shape: d.shape, accounting_bits: d.accounting_bits, values: d.values },
        d.dtype,
    ))
}

pub fn decode_bp_unverified(bytes: &[u8]) -> Result<(BpMessage, WireDtype)> {
    let d = decode(bytes, BP_MAGIC, BP_HEADER, false)?;
    Ok((
        BpMessage { shape: d.shape, accounting_bits: d.accounting_bits, values: d.values },
        d.dtype,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn sample_fp() -> FpMessage {
        let t = Tensor::from_fn(&[4, 1, 10, 10], |i| i as f64 * 0.25 - 7.0);
        FpMessage::from_samples(&[t]).unwrap()
    }

    #[test]
    fn paper_sized_body() {
        let m = sample_fp();
        assert_eq!(m.body_bits(WireDtype::F32), 12_800);
        let bytes = encode_fp(&m, WireDtype::F32).unwrap();
        assert_eq!((bytes.len() - FP_HEADER - CRC_LEN) * 8, 12_800);
        let (back, dtype) = decode_fp(&bytes).unwrap();
        assert_eq!(dtype, WireDtype::F32);
        assert_eq!(back, m);
    }

    #[test]
    fn empty_message() {
        let m = FpMessage::empty(4, 10, 10);
        let bytes = encode_fp(&m, WireDtype::F32).unwrap();
        assert_eq!(bytes.len(), FP_HEADER + CRC_LEN);
        let (back, _) = decode_fp(&bytes).unwrap();
        assert!(back.values.is_empty());
        assert!(back.samples().unwrap().is_empty());
    }

    #[test]
    fn single_bit_flip_changes_one_value() {
        let m = sample_fp();
        let mut bytes = encode_fp(&m, WireDtype::F32).unwrap();
        bytes[FP_HEADER + 4 * 37 + 1] ^= 0x10;
        assert!(decode_fp(&bytes).is_err());
        let (back, _) = decode_fp_unverified(&bytes).unwrap();
        let diffs: Vec<usize> = back
            .values
            .iter()
            .zip(&m.values)
            .enumerate()
            .filter(|(_, (a, b))| a != b)
            .map(|(i, _)| i)
            .collect();
        assert_eq!(diffs, vec![37]);
    }

    #[test]
    fn rejects_malformed() {
        let bytes = encode_fp(&sample_fp(), WireDtype::F32).unwrap();
        assert!(decode_fp(&bytes[..bytes.len() - 1]).is_err());
        assert!(decode_fp(&bytes[..10]).is_err());
        assert!(decode_bp(&bytes).is_err(), "FP bytes are not a BP message");
        let mut bad = bytes.clone();
        bad[6] = 9;
        assert!(decode_fp(&bad).is_err());
        let mut bad = bytes.clone();
        bad[4] = 2;
        assert!(decode_fp(&bad).is_err());
    }

    #[test]
    fn non_finite_values_rejected() {
        let mut m = sample_fp();
        m.values[3] = f64::NAN;
        assert!(encode_fp(&m, WireDtype::F64).is_err());
        m.values[3] = 1e300; // overflows binary32
        assert!(encode_fp(&m, WireDtype::F32).is_err());
        assert!(encode_fp(&m, WireDtype::F64).is_ok());
    }

    #[test]
    fn bp_carries_accounting_bits() {
        let t = Tensor::from_fn(&[4, 1, 2, 2], |i| i as f64);
        let m = BpMessage::from_samples(&[t.clone(), t], 18_432).unwrap();
        let bytes = encode_bp(&m, WireDtype::F64).unwrap();
        let (back, dtype) = decode_bp(&bytes).unwrap();
        assert_eq!(dtype, WireDtype::F64);
        assert_eq!(back.accounting_bits, 18_432);
        assert_eq!(back, m);
    }

    proptest! {
        #[test]
        fn binary32_values_round_trip_bitwise(raw in proptest::collection::vec(proptest::num::f32::NORMAL | proptest::num::f32::SUBNORMAL | proptest::num::f32::ZERO, 12)) {
            let values: Vec<f64> = raw.iter().map(|&f| f as f64).collect();
            let m = FpMessage { shape: CutShape { batch: 1, seq_len: 3, height: 2, width: 2 }, values };
            let (back, _) = decode_fp(&encode_fp(&m, WireDtype::F32).unwrap()).unwrap();
            for (a, b) in back.values.iter().zip(&m.values) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }

        #[test]
        fn binary32_rounding_is_bounded(values in proptest::collection::vec(-1e6f64..1e6, 8)) {
            let m = FpMessage { shape: CutShape { batch: 2, seq_len: 1, height: 2, width: 2 }, values };
            let (back, _) = decode_fp(&encode_fp(&m, WireDtype::F32).unwrap()).unwrap();
            for (a, b) in back.values.iter().zip(&m.values) {
                prop_assert!((a - b).abs() <= b.abs() * f32::EPSILON as f64);
            }
        }
    }
}
