//! Prediction error and privacy leakage.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};
use crate::math;
use crate::tensor::Tensor;

pub use crate::scenario::Label;

/// One prediction of `P_{k+S}` against the measured value, both in dBm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    /// Target index.
    pub k: usize,
    pub predicted_dbm: f64,
    pub actual_dbm: f64,
    pub label: Label,
}

impl PredictionRecord {
    pub fn error(&self) -> f64 {
        self.predicted_dbm - self.actual_dbm
    }
}

fn mse(records: &[PredictionRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::EmptyMetric("RMSE over zero records".into()));
    }
    let mut sum = 0.0;
    for r in records {
        let e = r.error();
        if !e.is_finite() {
            return Err(Error::NonFinite(format!("prediction for k = {}", r.k)));
        }
        sum += e * e;
    }
    Ok(sum / records.len() as f64)
}

/// Root mean squared error in dB.
pub fn rmse(records: &[PredictionRecord]) -> Result<f64> {
    mse(records).map(math::sqrt)
}

/// RMSE per label. Labels without records are absent from the map.
pub fn segmented_rmse(records: &[PredictionRecord]) -> Result<BTreeMap<Label, f64>> {
    if records.is_empty() {
        return Err(Error::EmptyMetric("segmented RMSE over zero records".into()));
    }
    let mut groups: BTreeMap<Label, Vec<PredictionRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.label).or_default().push(*r);
    }
    groups.into_iter().map(|(l, rs)| Ok((l, rmse(&rs)?))).collect()
}

/// Repeats every pixel of a `1 × h × w` map into an `f_h × f_w` block.
pub fn upsample_nearest(map: &Tensor, f_h: usize, f_w: usize) -> Result<Tensor> {
    let &[c, h, w] = map.shape() else {
        return Err(dim_err!("upsample expects C×h×w, got {:?}", map.shape()));
    };
    if f_h == 0 || f_w == 0 {
        return Err(Error::Config("upsampling factor must be positive".into()));
    }
    let (oh, ow) = (h * f_h, w * f_w);
    let src = map.data();
    Ok(Tensor::from_fn(&[c, oh, ow], |i| {
        let ch = i / (oh * ow);
        let y = (i / ow) % oh;
        let x = i % ow;
        src[(ch * h + y / f_h) * w + x / f_w]
    }))
}

/// Euclidean distance between two equally sized pixel arrays.
pub fn image_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(dim_err!("image sizes differ: {} vs {}", x.len(), y.len()));
    }
    let s: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(math::sqrt(s))
}

/// Rescales to `[0, 1]`; a constant input maps to zeros.
pub fn min_max_normalize(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    if !(span > 0.0) {
        return values.iter().map(|_| 0.0).collect();
    }
    values.iter().map(|v| (v - lo) / span).collect()
}

/// Distance between a raw frame and the upsampled, normalized CNN output.
pub fn frame_output_distance(raw: &Tensor, output: &Tensor) -> Result<f64> {
    let (&[_, rh, rw], &[_, oh, ow]) = (raw.shape(), output.shape()) else {
        return Err(dim_err!("expected 1×H×W maps, got {:?} and {:?}", raw.shape(), output.shape()));
    };
    if rh % oh != 0 || rw % ow != 0 {
        return Err(dim_err!("output {}x{} does not tile raw frame {}x{}", oh, ow, rh, rw));
    }
    let up = upsample_nearest(output, rh / oh, rw / ow)?;
    image_distance(raw.data(), &min_max_normalize(up.data()))
}

/// `1 / max_k d(x_k, φ(x_k))` over aligned raw frames and CNN outputs.
pub fn privacy_leakage(raw_frames: &[Tensor], cnn_outputs: &[Tensor]) -> Result<f64> {
    if raw_frames.is_empty() || raw_frames.len() != cnn_outputs.len() {
        return Err(Error::EmptyMetric(format!(
            "leakage needs aligned nonempty sets, got {} frames and {} outputs",
            raw_frames.len(),
            cnn_outputs.len()
        )));
    }
    let mut max_d: f64 = 0.0;
    for (x, phi) in raw_frames.iter().zip(cnn_outputs) {
        max_d = max_d.max(frame_output_distance(x, phi)?);
    }
    if max_d == 0.0 {
        return Err(Error::DegenerateLeakage);
    }
    Ok(1.0 / max_d)
}
