//! Dataset files.
//!
//! `frames.bin`: magic `MSDF`, version `u16`, reserved `u16`, then `n`,
//! `N_H`, `N_W` as `u32`, `τ` in seconds as `f64`, `n·N_H·N_W` binary32
//! pixels in row-major order, and a CRC-32 of all preceding bytes. All
//! integers and floats are little-endian.
//!
//! `powers.csv`: header `k,P_dBm,label`, one row per index `k = 1..=n`;
//! labels are `LoS`, `NLoS` or `Transition`.

use std::fs;
use std::path::Path;

use multsl_core::scenario::{Dataset, Label};
use serde::{Deserialize, Serialize};

use crate::bin_io::{Reader, Writer};
use crate::error::{CliError, Result};

pub const FRAMES_FILE: &str = "frames.bin";
pub const POWERS_FILE: &str = "powers.csv";
const MAGIC: &[u8; 4] = b"MSDF";
const VERSION: u16 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct PowerRow {
    k: usize,
    #[serde(rename = "P_dBm")]
    p_dbm: f64,
    label: String,
}

pub fn encode_frames(d: &Dataset) -> Vec<u8> {
    let mut w = Writer::default();
    w.bytes(MAGIC);
    w.u16(VERSION);
    w.u16(0);
    w.u32(d.len() as u32);
    w.u32(d.frame_height as u32);
    w.u32(d.frame_width as u32);
    w.f64(d.tau_s);
    for &p in &d.frames {
        w.f32(p);
    }
    w.finish()
}

/// Returns `(n, N_H, N_W, τ, pixels)`.
pub fn decode_frames(buf: &[u8]) -> Result<(usize, usize, usize, f64, Vec<f32>)> {
    let mut r = Reader::open(buf, MAGIC, FRAMES_FILE)?;
    let version = r.u16()?;
    if version != VERSION {
        return Err(CliError::Data(format!("{FRAMES_FILE}: unsupported version {version}")));
    }
    r.u16()?;
    let n = r.u32()? as usize;
    let h = r.u32()? as usize;
    let w = r.u32()? as usize;
    let tau = r.f64()?;
    let count = n
        .checked_mul(h)
        .and_then(|x| x.checked_mul(w))
        .ok_or_else(|| CliError::Data(format!("{FRAMES_FILE}: header overflows")))?;
    let raw = r.bytes(count * 4)?;
    r.expect_end()?;
    let pixels = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
    Ok((n, h, w, tau, pixels))
}

pub fn write_dataset(dir: &Path, d: &Dataset) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let frames = dir.join(FRAMES_FILE);
    fs::write(&frames, encode_frames(d)).map_err(|e| CliError::io(&frames, e))?;
    let path = dir.join(POWERS_FILE);
    let mut wtr = csv::Writer::from_path(&path)?;
    for k in 1..=d.len() {
        wtr.serialize(PowerRow { k, p_dbm: d.power(k), label: d.label(k).name().to_owned() })?;
    }
    wtr.flush().map_err(|e| CliError::io(&path, e))
}

pub fn read_dataset(dir: &Path) -> Result<Dataset> {
    let frames_path = dir.join(FRAMES_FILE);
    let buf = fs::read(&frames_path).map_err(|e| CliError::io(&frames_path, e))?;
    let (n, h, w, tau, pixels) = decode_frames(&buf)?;
    let path = dir.join(POWERS_FILE);
    let mut rdr = csv::Reader::from_path(&path)?;
    let mut powers = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for (i, row) in rdr.deserialize::<PowerRow>().enumerate() {
        let row = row?;
        if row.k != i + 1 {
            return Err(CliError::Data(format!("{POWERS_FILE}: expected k = {}, found {}", i + 1, row.k)));
        }
        powers.push(row.p_dbm);
        labels.push(Label::parse(&row.label).map_err(|e| CliError::Data(e.to_string()))?);
    }
    if powers.len() != n {
        return Err(CliError::Data(format!("{POWERS_FILE} has {} rows, {FRAMES_FILE} has {n} frames", powers.len())));
    }
    Dataset::from_parts(h, w, pixels, powers, labels, tau).map_err(|e| CliError::Data(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use multsl_core::scenario::{generate, ScenarioConfig};

    #[test]
    fn round_trip() {
        let d = generate(&ScenarioConfig { n_samples: 120, ..ScenarioConfig::desk() }).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), &d).unwrap();
        let back = read_dataset(dir.path()).unwrap();
        assert_eq!(back.frames, d.frames);
        assert_eq!(back.labels, d.labels);
        assert_eq!(back.powers_dbm, d.powers_dbm);
        assert_eq!(back.tau_s, d.tau_s);
    }

    #[test]
    fn corruption_is_caught() {
        let d = generate(&ScenarioConfig { n_samples: 20, ..ScenarioConfig::desk() }).unwrap();
        let mut buf = encode_frames(&d);
        assert!(decode_frames(&buf).is_ok());
        buf[40] ^= 4;
        assert!(decode_frames(&buf).is_err());
        assert!(decode_frames(&buf[..10]).is_err());
    }
}
