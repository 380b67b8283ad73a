use alloc::format;

use serde::{Deserialize, Serialize};

use super::units;
use crate::error::{Error, Result};
use crate::models::Variant;

/// Link and timing constants for the FP/BP latency model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    /// `W`, Hz.
    pub bandwidth_hz: f64,
    /// `σ²`, dBm/Hz.
    pub noise_psd_dbm_per_hz: f64,
    /// `R`, bits per forwarded pixel.
    pub bits_per_pixel: u32,
    /// `R'`, bits per BP gradient value.
    pub bits_per_gradient: u32,
    /// Per-step computation time for `Img` and `Img+RF`, seconds.
    pub t_comp_image_s: f64,
    /// Per-step computation time for `RF`, seconds.
    pub t_comp_rf_s: f64,
    /// `τ'`, seconds between power samples.
    pub interval_s: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            bandwidth_hz: 40e6,
            noise_psd_dbm_per_hz: -173.0,
            bits_per_pixel: 32,
            bits_per_gradient: 32,
            t_comp_image_s: 1.00e-3,
            t_comp_rf_s: 0.21e-3,
            interval_s: 33.3e-3,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.bandwidth_hz > 0.0
            && self.noise_psd_dbm_per_hz.is_finite()
            && self.bits_per_pixel > 0
            && self.bits_per_gradient > 0
            && self.t_comp_image_s > 0.0
            && self.t_comp_rf_s > 0.0
            && self.interval_s > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid channel parameters {:?}", self)))
        }
    }

    /// Noise power over the band, `σ² W`, in watts.
    pub fn noise_power_w(&self) -> f64 {
        units::dbm_to_watts(self.noise_psd_dbm_per_hz) * self.bandwidth_hz
    }

    pub fn t_comp(&self, variant: Variant) -> f64 {
        match variant {
            Variant::Rf => self.t_comp_rf_s,
            Variant::Img | Variant::ImgRf => self.t_comp_image_s,
        }
    }
}
