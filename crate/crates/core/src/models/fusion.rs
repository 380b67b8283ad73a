use alloc::vec::Vec;

use super::Variant;
use crate::error::{dim_err, Result};
use crate::tensor::Tensor;

/// Channel of the fused `Img+RF` input holding the power plane.
pub const POWER_CHANNEL: usize = 0;
/// Channel of the fused `Img+RF` input holding the UE feature map.
pub const FEATURE_CHANNEL: usize = 1;

/// `1×h×w` plane filled with a standardized power value.
pub fn power_plane(power_std: f64, h: usize, w: usize) -> Tensor {
    Tensor::full(&[1, h, w], power_std)
}

/// Stacks a power plane (channel 0) on top of a `1×h×w` feature map (channel 1).
pub fn fuse_power(feature_map: &Tensor, power_std: f64) -> Result<Tensor> {
    let [1, h, w] = *feature_map.shape() else {
        return Err(dim_err!("feature map must be 1×h×w, got {:?}", feature_map.shape()));
    };
    let mut data = Vec::with_capacity(2 * h * w);
    data.resize(h * w, power_std);
    data.extend_from_slice(feature_map.data());
    Tensor::new(&[2, h, w], data)
}

/// Builds the `L×C_in×h×w` ConvLSTM input for a variant.
///
/// `features` is the `L×1×h×w` UE output (ignored for `Rf`, may be `None`);
/// `powers_std` holds `L` standardized powers (ignored for `Img`).
pub fn variant_input(
    variant: Variant,
    features: Option<&Tensor>,
    powers_std: &[f64],
    grid: (usize, usize),
) -> Result<Tensor> {
    let (h, w) = grid;
    let l = powers_std.len();
    let steps: Result<Vec<Tensor>> = match variant {
        Variant::Rf => Ok(powers_std.iter().map(|&p| power_plane(p, h, w)).collect()),
        Variant::Img | Variant::ImgRf => {
            let f = features.ok_or_else(|| dim_err!("{} variant needs UE features", variant))?;
            if f.shape() != [l, 1, h, w] {
                return Err(dim_err!(
                    "features {:?} do not match L={} grid {}×{}",
                    f.shape(),
                    l,
                    h,
                    w
                ));
            }
            (0..l)
                .map(|t| {
                    let map = f.outer(t);
                    if variant == Variant::ImgRf {
                        fuse_power(&map, powers_std[t])
                    } else {
                        Ok(map)
                    }
                })
                .collect()
        }
    };
    Tensor::stack(&steps?)
}

/// Slices the feature-channel gradient (`L×1×h×w`) out of the gradient
/// with respect to a [`variant_input`] result.
pub fn cut_gradient(variant: Variant, d_input: &Tensor) -> Result<Tensor> {
    let [l, c, h, w] = *d_input.shape() else {
        return Err(dim_err!("input gradient must be L×C×h×w, got {:?}", d_input.shape()));
    };
    let channel = match variant {
        Variant::ImgRf => FEATURE_CHANNEL,
        Variant::Img => 0,
        Variant::Rf => return Err(dim_err!("RF variant has no cut")),
    };
    let plane = h * w;
    let mut out = Vec::with_capacity(l * plane);
    for t in 0..l {
        let base = (t * c + channel) * plane;
        out.extend_from_slice(&d_input.data()[base..base + plane]);
    }
    Tensor::new(&[l, 1, h, w], out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn zero_power_plane() {
        let map = Tensor::new(&[1, 2, 2], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let f = fuse_power(&map, 0.0).unwrap();
        assert_eq!(&f.data()[..4], &[0.0; 4]);
        assert_eq!(&f.data()[4..], map.data());
    }

    #[test]
    fn power_plane_fill_and_round_trip() {
        let map = Tensor::new(&[1, 2, 2], vec![-3.0, 1e-300, 7.25, f64::MIN_POSITIVE]).unwrap();
        let f = fuse_power(&map, 1.5).unwrap();
        assert_eq!(f.outer(POWER_CHANNEL).data(), &[1.5; 4]);
        let back = f.outer(FEATURE_CHANNEL).reshape(&[1, 2, 2]).unwrap();
        assert_eq!(back.data(), map.data());
        for (a, b) in back.data().iter().zip(map.data()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn variant_shapes() {
        let feats = Tensor::from_fn(&[4, 1, 3, 3], |i| i as f64);
        let p = [0.0, 0.0, 0.0, 0.0];
        let x = variant_input(Variant::ImgRf, Some(&feats), &p, (3, 3)).unwrap();
        assert_eq!(x.shape(), &[4, 2, 3, 3]);
        for t in 0..4 {
            assert!(x.outer(t).outer(0).data().iter().all(|v| *v == 0.0));
        }
        let x = variant_input(Variant::Img, Some(&feats), &p, (3, 3)).unwrap();
        assert_eq!(x, feats);
        let x = variant_input(Variant::Rf, None, &[1.0, 2.0, 3.0, 4.0], (3, 3)).unwrap();
        assert_eq!(x.shape(), &[4, 1, 3, 3]);
        assert!(x.outer(2).data().iter().all(|v| *v == 3.0));
        assert!(variant_input(Variant::Img, None, &p, (3, 3)).is_err());
    }

    #[test]
    fn cut_gradient_picks_feature_channel() {
        let d = Tensor::from_fn(&[2, 2, 1, 2], |i| i as f64);
        let g = cut_gradient(Variant::ImgRf, &d).unwrap();
        assert_eq!(g.data(), &[2.0, 3.0, 6.0, 7.0]);
    }
}
