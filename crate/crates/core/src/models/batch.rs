use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};
use crate::math;
use crate::tensor::Tensor;

/// One mini-batch of aligned inputs and targets.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    /// `b × L × 1 × N_H × N_W`, pixels in `[0, 1]`.
    pub frames: Tensor,
    /// `b × L`, standardized.
    pub powers: Tensor,
    /// `b`, standardized power at `k + S`.
    pub targets: Tensor,
    /// Anchor index `k` (1-based) of every sample.
    pub anchors: Vec<usize>,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    /// Frames of sample `i`, `L × 1 × N_H × N_W`.
    pub fn sample_frames(&self, i: usize) -> Tensor {
        self.frames.outer(i)
    }

    pub fn sample_powers(&self, i: usize) -> &[f64] {
        let l = self.powers.shape()[1];
        &self.powers.data()[i * l..(i + 1) * l]
    }

    pub fn validate(&self, seq_len: usize, frame: (usize, usize)) -> Result<()> {
        let b = self.anchors.len();
        if b == 0 {
            return Err(Error::EmptySplit("empty batch".into()));
        }
        if self.frames.shape() != [b, seq_len, 1, frame.0, frame.1]
            || self.powers.shape() != [b, seq_len]
            || self.targets.shape() != [b]
        {
            return Err(dim_err!(
                "batch of {} has frames {:?}, powers {:?}, targets {:?}",
                b,
                self.frames.shape(),
                self.powers.shape(),
                self.targets.shape()
            ));
        }
        Ok(())
    }
}

/// Affine dBm ↔ standardized-power map fitted on training powers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean_dbm: f64,
    pub std_db: f64,
}

impl Standardizer {
    pub fn fit(powers_dbm: &[f64]) -> Result<Self> {
        if powers_dbm.is_empty() {
            return Err(Error::EmptySplit("no powers to standardize".into()));
        }
        let n = powers_dbm.len() as f64;
        let mean = powers_dbm.iter().sum::<f64>() / n;
        let var = powers_dbm.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / n;
        let std = math::sqrt(var);
        Ok(Standardizer {
            mean_dbm: mean,
            // flat traces would otherwise divide by zero
            std_db: if std > 1e-12 { std } else { 1.0 },
        })
    }

    pub fn identity() -> Self {
        Standardizer { mean_dbm: 0.0, std_db: 1.0 }
    }

    pub fn forward(&self, dbm: f64) -> f64 {
        (dbm - self.mean_dbm) / self.std_db
    }

    pub fn inverse(&self, z: f64) -> f64 {
        z * self.std_db + self.mean_dbm
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardizer_round_trip() {
        let s = Standardizer::fit(&[-60.0, -62.0, -75.0, -58.0]).unwrap();
        for p in [-80.0, -60.0, -10.0] {
            assert!((s.inverse(s.forward(p)) - p).abs() < 1e-12);
        }
        let flat = Standardizer::fit(&[-60.0; 5]).unwrap();
        assert_eq!(flat.forward(-60.0), 0.0);
        assert!(Standardizer::fit(&[]).is_err());
    }
}
