use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ModelConfig;
use crate::error::{dim_err, Result};
use crate::nn::{glorot_bound, max_pool, max_pool_backward, Activation, Conv2d, Padding, Parameters};
use crate::tensor::Tensor;

/// Lower segment held by the UE: `conv1 → act → conv2 → act → max_pool`,
/// applied to each frame independently.
///
/// `conv2` maps to a single channel without bias, so one pooled map per
/// frame crosses the cut.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeSegment {
    /// `C1 × 1 × 3 × 3` with bias.
    pub conv1: Conv2d,
    /// `1 × C1 × 3 × 3`, no bias.
    pub conv2: Conv2d,
    pub pool_height: usize,
    pub pool_width: usize,
    pub activation: Activation,
}

#[derive(Debug, Clone)]
struct FrameTrace {
    frame: Tensor,
    pre1: Tensor,
    pre2: Tensor,
    argmax: Vec<usize>,
}

/// Intermediate values recorded by [`UeSegment::forward`] for one sequence.
#[derive(Debug, Clone)]
pub struct UeTrace {
    frames: Vec<FrameTrace>,
    out_shape: [usize; 2],
}

impl UeSegment {
    pub fn init<R: Rng + ?Sized>(config: &ModelConfig, rng: &mut R) -> Self {
        let c1 = config.conv1_channels;
        let b1 = glorot_bound(9, c1 * 9);
        let b2 = glorot_bound(c1 * 9, 9);
        UeSegment {
            conv1: Conv2d {
                kernel: Tensor::uniform(&[c1, 1, 3, 3], b1, rng),
                bias: Some(Tensor::zeros(&[c1])),
                padding: Padding::Same,
            },
            conv2: Conv2d {
                kernel: Tensor::uniform(&[1, c1, 3, 3], b2, rng),
                bias: None,
                padding: Padding::Same,
            },
            pool_height: config.pool_height,
            pool_width: config.pool_width,
            activation: config.activation,
        }
    }

    fn forward_frame_traced(&self, frame: &Tensor) -> Result<(Tensor, FrameTrace)> {
        let pre1 = self.conv1.forward(frame)?;
        let act1 = self.activation.forward(&pre1);
        let pre2 = self.conv2.forward(&act1)?;
        let act2 = self.activation.forward(&pre2);
        let pooled = max_pool(&act2, self.pool_height, self.pool_width)?;
        // activations are recomputed in backward; only pre-activations are kept
        let trace = FrameTrace {
            frame: frame.clone(),
            pre1,
            pre2,
            argmax: pooled.argmax,
        };
        Ok((pooled.output, trace))
    }

    /// Pooled feature map `1×h×w` of a single `1×H×W` frame.
    pub fn forward_frame(&self, frame: &Tensor) -> Result<Tensor> {
        let pre1 = self.conv1.forward(frame)?;
        let act1 = self.activation.forward(&pre1);
        let act2 = self.activation.forward(&self.conv2.forward(&act1)?);
        Ok(max_pool(&act2, self.pool_height, self.pool_width)?.output)
    }

    /// Maps `L×1×H×W` frames to `L×1×h×w` pooled features.
    pub fn forward(&self, frames: &Tensor) -> Result<(Tensor, UeTrace)> {
        let [l, 1, _, _] = *frames.shape() else {
            return Err(dim_err!("UE expects L×1×H×W frames, got {:?}", frames.shape()));
        };
        let mut traces = Vec::with_capacity(l);
        let mut outs = Vec::with_capacity(l);
        for t in 0..l {
            let (pooled, tr) = self.forward_frame_traced(&frames.outer(t))?;
            outs.push(pooled.into_data());
            traces.push(tr);
        }
        let (h, w) = (
            frames.shape()[2] / self.pool_height,
            frames.shape()[3] / self.pool_width,
        );
        let data = outs.concat();
        let out = Tensor::new(&[l, 1, h, w], data)?;
        Ok((
            out,
            UeTrace {
                frames: traces,
                out_shape: [h, w],
            },
        ))
    }

    /// Parameter gradients given `dL/d(output)` of shape `L×1×h×w`.
    pub fn backward(&self, trace: &UeTrace, grad_out: &Tensor) -> Result<UeSegment> {
        let [h, w] = trace.out_shape;
        if grad_out.shape() != [trace.frames.len(), 1, h, w] {
            return Err(dim_err!(
                "UE upstream gradient {:?}, expected [{}, 1, {}, {}]",
                grad_out.shape(),
                trace.frames.len(),
                h,
                w
            ));
        }
        let mut grads = self.clone();
        grads.zero();
        for (t, tr) in trace.frames.iter().enumerate() {
            let g_pool = grad_out.outer(t);
            let act1 = self.activation.forward(&tr.pre1);
            let act2 = self.activation.forward(&tr.pre2);
            let d_act2 = max_pool_backward(act2.shape(), &tr.argmax, &g_pool)?;
            let d_pre2 = self.activation.backward(&tr.pre2, &act2, &d_act2);
            let (d_act1, g2) = self.conv2.backward(&act1, &d_pre2)?;
            let d_pre1 = self.activation.backward(&tr.pre1, &act1, &d_act1);
            let (_, g1) = self.conv1.backward(&tr.frame, &d_pre1)?;
            grads.conv1.accumulate(&g1)?;
            grads.conv2.accumulate(&g2)?;
        }
        Ok(grads)
    }
}

impl Parameters for UeSegment {
    fn blocks(&self) -> Vec<&Tensor> {
        let mut v = self.conv1.blocks();
        v.extend(self.conv2.blocks());
        v
    }

    fn blocks_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = self.conv1.blocks_mut();
        v.extend(self.conv2.blocks_mut());
        v
    }
}
