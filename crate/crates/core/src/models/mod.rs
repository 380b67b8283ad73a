//! The three network variants, each split into a UE segment and a BS segment.
//!
//! * `Img+RF`: UE convolutions over depth frames; the BS stacks each pooled
//!   feature map with a plane filled by the received power and runs the
//!   ConvLSTM over the resulting two-channel sequence.
//! * `Img`: as above without the power plane.
//! * `RF`: no UE involvement; the ConvLSTM sees only power planes on the
//!   same grid, so the BS segment has the same shape as in `Img`.

mod batch;
mod bs;
mod config;
mod fusion;
mod ue;

pub use batch::{SampleBatch, Standardizer};
pub use bs::{BsSegment, BsTrace};
pub use config::{ModelConfig, Variant};
pub use fusion::{cut_gradient, fuse_power, power_plane, variant_input, FEATURE_CHANNEL, POWER_CHANNEL};
pub use ue::{UeSegment, UeTrace};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;

/// UE and BS segments built from one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitModel {
    pub config: ModelConfig,
    pub ue: UeSegment,
    pub bs: BsSegment,
}

impl SplitModel {
    /// Glorot-uniform weights and zero biases, drawn from `seed`.
    pub fn init(config: &ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ue = UeSegment::init(config, &mut rng);
        let bs = BsSegment::init(config, &mut rng);
        Ok(SplitModel {
            config: config.clone(),
            ue,
            bs,
        })
    }
}

/// Kernel weights in the second UE convolution (bias excluded). This is
/// the count that sizes a BP message under paper accounting.
pub fn count_upper_layer_weights(ue: &UeSegment) -> usize {
    ue.conv2.weight_count()
}
