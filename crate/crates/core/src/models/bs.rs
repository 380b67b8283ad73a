use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ModelConfig;
use crate::error::{dim_err, Result};
use crate::nn::{glorot_bound, ConvLstmCell, Dense, LstmStepCache, Parameters};
use crate::tensor::Tensor;

/// Upper segment held by the BS: a ConvLSTM unrolled over the sequence from
/// a zero state, followed by a dense head on the final hidden state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BsSegment {
    pub cell: ConvLstmCell,
    pub head: Dense,
}

#[derive(Debug, Clone)]
pub struct BsTrace {
    steps: Vec<LstmStepCache>,
    last_hidden: Tensor,
    input_shape: Vec<usize>,
}

impl BsSegment {
    pub fn init<R: Rng + ?Sized>(config: &ModelConfig, rng: &mut R) -> Self {
        let cx = config.variant.bs_input_channels();
        let ch = config.lstm_hidden_channels;
        let (h, w) = config.feature_size();
        let gate_bound = glorot_bound((cx + ch) * 9, 4 * ch * 9);
        let n = ch * h * w;
        BsSegment {
            cell: ConvLstmCell {
                input_kernel: Tensor::uniform(&[4 * ch, cx, 3, 3], gate_bound, rng),
                hidden_kernel: Tensor::uniform(&[4 * ch, ch, 3, 3], gate_bound, rng),
                bias: Tensor::zeros(&[4 * ch]),
            },
            head: Dense {
                weight: Tensor::uniform(&[1, n], glorot_bound(n, 1), rng),
                bias: Tensor::zeros(&[1]),
            },
        }
    }

    /// Standardized prediction for an `L×C_in×h×w` sequence.
    pub fn forward(&self, seq: &Tensor) -> Result<(f64, BsTrace)> {
        let [l, c_in, h, w] = *seq.shape() else {
            return Err(dim_err!("BS expects L×C×h×w input, got {:?}", seq.shape()));
        };
        if c_in != self.cell.input_channels() {
            return Err(dim_err!(
                "BS input has {} channels per step, cell expects {}",
                c_in,
                self.cell.input_channels()
            ));
        }
        let ch = self.cell.hidden_channels();
        let mut hidden = Tensor::zeros(&[ch, h, w]);
        let mut cell_state = Tensor::zeros(&[ch, h, w]);
        let mut steps = Vec::with_capacity(l);
        for t in 0..l {
            let (hn, cn, cache) = self.cell.forward(&seq.outer(t), &hidden, &cell_state)?;
            hidden = hn;
            cell_state = cn;
            steps.push(cache);
        }
        let y = self.head.forward(&hidden)?.data()[0];
        Ok((
            y,
            BsTrace {
                steps,
                last_hidden: hidden,
                input_shape: seq.shape().to_vec(),
            },
        ))
    }

    /// Returns parameter gradients and `dL/d(input sequence)` for a scalar
    /// upstream gradient `dL/dy`.
    pub fn backward(&self, trace: &BsTrace, grad_y: f64) -> Result<(BsSegment, Tensor)> {
        let (d_hidden, head_grads) = self.head.backward(&trace.last_hidden, &Tensor::scalar(grad_y))?;
        let mut grads = self.clone();
        grads.zero();
        grads.head = head_grads;
        let mut dh = d_hidden;
        let mut dc = Tensor::zeros(dh.shape());
        let mut d_steps: Vec<Tensor> = Vec::with_capacity(trace.steps.len());
        for cache in trace.steps.iter().rev() {
            let (dx, dh_prev, dc_prev, g) = self.cell.backward(cache, &dh, &dc)?;
            grads.cell.accumulate(&g)?;
            d_steps.push(dx);
            dh = dh_prev;
            dc = dc_prev;
        }
        d_steps.reverse();
        let d_input = Tensor::stack(&d_steps)?.reshape(&trace.input_shape)?;
        Ok((grads, d_input))
    }
}

impl Parameters for BsSegment {
    fn blocks(&self) -> Vec<&Tensor> {
        let mut v = self.cell.blocks();
        v.extend(self.head.blocks());
        v
    }

    fn blocks_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = self.cell.blocks_mut();
        v.extend(self.head.blocks_mut());
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Variant;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_weights_return_head_bias() {
        let cfg = ModelConfig::desk(Variant::ImgRf);
        let mut bs = BsSegment::init(&cfg, &mut ChaCha8Rng::seed_from_u64(0));
        bs.zero();
        bs.head.bias.data_mut()[0] = 0.75;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let seq = Tensor::uniform(&[4, 2, 4, 4], 1.0, &mut rng);
        assert_eq!(bs.forward(&seq).unwrap().0, 0.75);
    }

    #[test]
    fn unroll_of_one_is_one_cell_step() {
        let cfg = ModelConfig { seq_len: 1, ..ModelConfig::desk(Variant::Img) };
        let bs = BsSegment::init(&cfg, &mut ChaCha8Rng::seed_from_u64(5));
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let seq = Tensor::uniform(&[1, 1, 4, 4], 1.0, &mut rng);
        let (y, _) = bs.forward(&seq).unwrap();
        let zero = Tensor::zeros(&[8, 4, 4]);
        let (h, _, _) = bs.cell.forward(&seq.outer(0), &zero, &zero).unwrap();
        let direct = bs.head.forward(&h).unwrap().data()[0];
        assert_eq!(y, direct);
    }

    #[test]
    fn channel_mismatch_is_an_error() {
        let cfg = ModelConfig::desk(Variant::ImgRf);
        let bs = BsSegment::init(&cfg, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(bs.forward(&Tensor::zeros(&[4, 1, 4, 4])).is_err());
    }

    #[test]
    fn frame_order_matters() {
        let cfg = ModelConfig::desk(Variant::Img);
        for seed in 0..20u64 {
            let bs = BsSegment::init(&cfg, &mut ChaCha8Rng::seed_from_u64(seed));
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let seq = Tensor::uniform(&[4, 1, 4, 4], 1.0, &mut rng);
            let mut swapped = seq.clone();
            let plane = 16;
            let (a, b) = swapped.data_mut().split_at_mut(plane);
            a.swap_with_slice(&mut b[..plane]);
            assert_ne!(seq, swapped);
            let y0 = bs.forward(&seq).unwrap().0;
            let y1 = bs.forward(&swapped).unwrap().0;
            assert_ne!(y0, y1, "seed {seed}");
        }
    }
}
