use serde::{Deserialize, Serialize};

use crate::channel::{ChannelParams, LinkLoad};
use crate::models::{ModelConfig, Variant};

/// FP payload in bits: `b · L · (N_H/w_H) · (N_W/w_W) · R`.
pub fn fp_payload_bits(config: &ModelConfig, batch: usize, bits_per_pixel: u32) -> u64 {
    (batch * config.forwarded_pixels()) as u64 * bits_per_pixel as u64
}

/// BP payload in bits under paper accounting: `N_layer2 · R'`.
pub fn bp_payload_bits(upper_layer_weights: usize, bits_per_gradient: u32) -> u64 {
    upper_layer_weights as u64 * bits_per_gradient as u64
}

/// How the BP message is sized for latency purposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BpAccounting {
    /// Upper UE convolution weight count times `R'`, whatever the body holds.
    #[default]
    Paper,
    /// Number of cut-gradient values actually carried, times `R'`.
    Body,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Accounting {
    pub bp: BpAccounting,
    /// Charge the whole batch to the link instead of a single sample.
    pub per_batch: bool,
}

/// Link load of one training step.
pub fn training_load(
    config: &ModelConfig,
    params: &ChannelParams,
    accounting: Accounting,
    batch: usize,
) -> LinkLoad {
    let t_comp_s = params.t_comp(config.variant);
    if config.variant == Variant::Rf {
        return LinkLoad { fp_bits: 0, bp_bits: 0, t_comp_s };
    }
    let charged = if accounting.per_batch { batch } else { 1 };
    let bp_bits = match accounting.bp {
        BpAccounting::Paper => bp_payload_bits(config.conv1_channels * 9, params.bits_per_gradient),
        BpAccounting::Body => fp_payload_bits(config, charged, params.bits_per_gradient),
    };
    LinkLoad {
        fp_bits: fp_payload_bits(config, charged, params.bits_per_pixel),
        bp_bits,
        t_comp_s,
    }
}

/// Link load of a single inference: one FP message, no BP.
pub fn inference_load(config: &ModelConfig, params: &ChannelParams) -> LinkLoad {
    let fp_bits = if config.variant == Variant::Rf {
        0
    } else {
        fp_payload_bits(config, 1, params.bits_per_pixel)
    };
    LinkLoad { fp_bits, bp_bits: 0, t_comp_s: 0.0 }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fp_bits_at_paper_resolution() {
        let base = ModelConfig::paper(Variant::ImgRf);
        assert_eq!(fp_payload_bits(&base.clone().with_pool(1, 1), 1, 32), 204_800);
        assert_eq!(fp_payload_bits(&base.clone().with_pool(4, 4), 1, 32), 12_800);
        assert_eq!(fp_payload_bits(&base.clone().with_pool(40, 40), 1, 32), 128);
        assert_eq!(fp_payload_bits(&base.clone().with_pool(2, 2), 3, 32), 3 * 51_200);
    }

    #[test]
    fn fp_bits_are_homogeneous() {
        let base = ModelConfig::paper(Variant::ImgRf);
        for (h, w) in [(2, 2), (4, 4), (10, 10), (20, 40), (4, 20)] {
            let coarse = fp_payload_bits(&base.clone().with_pool(h, w), 1, 32);
            let fine = fp_payload_bits(&base.clone().with_pool(h / 2, w / 2), 1, 32);
            assert_eq!(fine, 4 * coarse);
        }
    }

    #[test]
    fn bp_bits() {
        assert_eq!(bp_payload_bits(576, 32), 18_432);
        assert_eq!(bp_payload_bits(72, 32), 2_304);
        assert_eq!(bp_payload_bits(576, 0), 0);
    }

    #[test]
    fn loads() {
        let p = ChannelParams::default();
        let cfg = ModelConfig::paper(Variant::ImgRf);
        let l = training_load(&cfg, &p, Accounting::default(), 64);
        assert_eq!((l.fp_bits, l.bp_bits, l.t_comp_s), (12_800, 18_432, 1e-3));
        let l = training_load(&cfg, &p, Accounting { bp: BpAccounting::Body, per_batch: true }, 2);
        assert_eq!((l.fp_bits, l.bp_bits), (25_600, 25_600));
        let rf = training_load(&ModelConfig::paper(Variant::Rf), &p, Accounting::default(), 64);
        assert_eq!((rf.fp_bits, rf.bp_bits, rf.t_comp_s), (0, 0, 0.21e-3));
        assert_eq!(inference_load(&cfg, &p).fp_bits, 12_800);
        assert_eq!(inference_load(&ModelConfig::paper(Variant::Rf), &p).fp_bits, 0);
    }
}
