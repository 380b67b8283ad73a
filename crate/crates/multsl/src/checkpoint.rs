//! Model checkpoints.
//!
//! Layout (little-endian): magic `MSCK`, version `u16`, reserved `u16`,
//! `u32` length plus that many bytes of TOML metadata (experiment config
//! and power standardizer), `u32` tensor count, then per tensor a `u16`
//! name length, the UTF-8 name, a `u8` rank, `u32` dimensions and the
//! binary64 values in row-major order. A CRC-32 of everything before it
//! closes the file.
//!
//! Tensors are named `ue.<i>` / `bs.<i>` after their block position.

use std::fs;
use std::path::Path;

use multsl_core::models::{SplitModel, Standardizer};
use multsl_core::nn::Parameters;
use multsl_core::Tensor;
use serde::{Deserialize, Serialize};

use crate::bin_io::{Reader, Writer};
use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

const MAGIC: &[u8; 4] = b"MSCK";
const VERSION: u16 = 1;
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub experiment: ExperimentConfig,
    pub standardizer: Standardizer,
    pub model: SplitModel,
}

#[derive(Serialize, Deserialize)]
struct Meta {
    standardizer: Standardizer,
    experiment: ExperimentConfig,
}

fn named(model: &SplitModel) -> Vec<(String, &Tensor)> {
    let ue = model.ue.blocks().into_iter().enumerate().map(|(i, t)| (format!("ue.{i}"), t));
    let bs = model.bs.blocks().into_iter().enumerate().map(|(i, t)| (format!("bs.{i}"), t));
    ue.chain(bs).collect()
}

pub fn encode(ck: &Checkpoint) -> Vec<u8> {
    let meta = toml::to_string(&Meta { standardizer: ck.standardizer, experiment: ck.experiment.clone() })
        .expect("metadata serializes");
    let mut w = Writer::default();
    w.bytes(MAGIC);
    w.u16(VERSION);
    w.u16(0);
    w.u32(meta.len() as u32);
    w.bytes(meta.as_bytes());
    let tensors = named(&ck.model);
    w.u32(tensors.len() as u32);
    for (name, t) in tensors {
        w.u16(name.len() as u16);
        w.bytes(name.as_bytes());
        w.u8(t.ndim() as u8);
        for &d in t.shape() {
            w.u32(d as u32);
        }
        for &v in t.data() {
            w.f64(v);
        }
    }
    w.finish()
}

pub fn decode(buf: &[u8]) -> Result<Checkpoint> {
    let mut r = Reader::open(buf, MAGIC, CHECKPOINT_FILE)?;
    let version = r.u16()?;
    if version != VERSION {
        return Err(CliError::Data(format!("checkpoint version {version} is not supported")));
    }
    r.u16()?;
    let len = r.u32()? as usize;
    let text = std::str::from_utf8(r.bytes(len)?).map_err(|e| CliError::Data(format!("checkpoint metadata: {e}")))?;
    let meta: Meta = toml::from_str(text).map_err(|e| CliError::Data(format!("checkpoint metadata: {e}")))?;
    let experiment = meta.experiment;
    experiment.validate()?;

    // a freshly built model fixes the expected names and shapes
    let mut model = SplitModel::init(&experiment.model, 0)?;
    let expected: Vec<(String, Vec<usize>)> =
        named(&model).into_iter().map(|(n, t)| (n, t.shape().to_vec())).collect();
    let count = r.u32()? as usize;
    if count != expected.len() {
        return Err(CliError::Data(format!("checkpoint holds {count} tensors, model has {}", expected.len())));
    }
    let mut loaded = Vec::with_capacity(count);
    for (name, shape) in &expected {
        let n_len = r.u16()? as usize;
        let got = std::str::from_utf8(r.bytes(n_len)?).map_err(|e| CliError::Data(e.to_string()))?;
        if got != name {
            return Err(CliError::Data(format!("expected tensor {name}, found {got}")));
        }
        let rank = r.u8()? as usize;
        let dims = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        if &dims != shape {
            return Err(CliError::Data(format!("tensor {name} has shape {dims:?}, model expects {shape:?}")));
        }
        let values = (0..dims.iter().product::<usize>()).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        loaded.push(Tensor::new(&dims, values)?);
    }
    r.expect_end()?;
    let mut it = loaded.into_iter();
    for b in model.ue.blocks_mut() {
        *b = it.next().expect("counted");
    }
    for b in model.bs.blocks_mut() {
        *b = it.next().expect("counted");
    }
    Ok(Checkpoint { experiment, standardizer: meta.standardizer, model })
}

pub fn save(path: &Path, ck: &Checkpoint) -> Result<()> {
    fs::write(path, encode(ck)).map_err(|e| CliError::io(path, e))
}

pub fn load(path: &Path) -> Result<Checkpoint> {
    let buf = fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode(&buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use multsl_core::models::Variant;

    fn sample(variant: Variant) -> Checkpoint {
        let mut experiment = ExperimentConfig::desk();
        experiment.model.variant = variant;
        let model = SplitModel::init(&experiment.model, 7).unwrap();
        Checkpoint { experiment, standardizer: Standardizer { mean_dbm: -61.25, std_db: 4.5 }, model }
    }

    #[test]
    fn bitwise_round_trip() {
        for v in Variant::ALL {
            let ck = sample(v);
            let back = decode(&encode(&ck)).unwrap();
            assert_eq!(back, ck);
            assert_eq!(encode(&back), encode(&ck));
        }
    }

    #[test]
    fn damaged_files_are_rejected() {
        let buf = encode(&sample(Variant::ImgRf));
        for i in [0, 9, buf.len() / 2, buf.len() - 1] {
            let mut b = buf.clone();
            b[i] ^= 0x10;
            assert!(decode(&b).is_err(), "byte {i}");
        }
        assert!(decode(&buf[..buf.len() - 9]).is_err());
    }
}
