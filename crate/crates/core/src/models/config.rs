use alloc::format;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Activation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Rf,
    Img,
    ImgRf,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Rf, Variant::Img, Variant::ImgRf];

    pub fn uses_images(self) -> bool {
        !matches!(self, Variant::Rf)
    }

    pub fn uses_powers(self) -> bool {
        !matches!(self, Variant::Img)
    }

    /// Channels per time step entering the ConvLSTM.
    pub fn bs_input_channels(self) -> usize {
        match self {
            Variant::ImgRf => 2,
            Variant::Img | Variant::Rf => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Rf => "rf",
            Variant::Img => "img",
            Variant::ImgRf => "imgrf",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rf" => Ok(Variant::Rf),
            "img" => Ok(Variant::Img),
            "imgrf" | "img+rf" => Ok(Variant::ImgRf),
            other => Err(Error::Config(format!("unknown variant '{other}'"))),
        }
    }
}

impl core::fmt::Display for Variant {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

/// Architecture and timing constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub variant: Variant,
    /// Frames (and powers) per input sequence, `L`.
    pub seq_len: usize,
    pub frame_height: usize,
    pub frame_width: usize,
    pub pool_height: usize,
    pub pool_width: usize,
    /// Prediction horizon in samples, `S`. The 120 ms look-ahead over a
    /// 33.3 ms frame interval is 3.6 samples; this rounds up to 4.
    pub lookahead_steps: usize,
    pub lookahead_ms: f64,
    pub frame_interval_ms: f64,
    pub conv1_channels: usize,
    pub lstm_hidden_channels: usize,
    pub activation: Activation,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::paper(Variant::ImgRf)
    }
}

impl ModelConfig {
    /// 40×40 frames, 64 first-layer channels, 4×4 pooling.
    pub fn paper(variant: Variant) -> Self {
        ModelConfig {
            variant,
            seq_len: 4,
            frame_height: 40,
            frame_width: 40,
            pool_height: 4,
            pool_width: 4,
            lookahead_steps: 4,
            lookahead_ms: 120.0,
            frame_interval_ms: 33.3,
            conv1_channels: 64,
            lstm_hidden_channels: 8,
            activation: Activation::Relu,
        }
    }

    /// Laptop-sized: 16×16 frames, 8 first-layer channels.
    pub fn desk(variant: Variant) -> Self {
        ModelConfig {
            frame_height: 16,
            frame_width: 16,
            conv1_channels: 8,
            ..Self::paper(variant)
        }
    }

    pub fn with_pool(mut self, pool_height: usize, pool_width: usize) -> Self {
        self.pool_height = pool_height;
        self.pool_width = pool_width;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("seq_len", self.seq_len),
            ("frame_height", self.frame_height),
            ("frame_width", self.frame_width),
            ("pool_height", self.pool_height),
            ("pool_width", self.pool_width),
            ("lookahead_steps", self.lookahead_steps),
            ("conv1_channels", self.conv1_channels),
            ("lstm_hidden_channels", self.lstm_hidden_channels),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.frame_height % self.pool_height != 0 || self.frame_width % self.pool_width != 0 {
            return Err(Error::Config(format!(
                "pool {}×{} does not divide frame {}×{}",
                self.pool_height, self.pool_width, self.frame_height, self.frame_width
            )));
        }
        if !(self.frame_interval_ms > 0.0) || !(self.lookahead_ms >= 0.0) {
            return Err(Error::Config("frame interval must be positive".into()));
        }
        Ok(())
    }

    /// Spatial size `(h, w)` of the pooled UE output.
    pub fn feature_size(&self) -> (usize, usize) {
        (
            self.frame_height / self.pool_height,
            self.frame_width / self.pool_width,
        )
    }

    /// Pixels forwarded to the BS per sample: `L·N_H·N_W / (w_H·w_W)`.
    pub fn forwarded_pixels(&self) -> usize {
        let (h, w) = self.feature_size();
        self.seq_len * h * w
    }
}
