use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{conv2d, conv2d_backward, Padding, Parameters};
use crate::error::{dim_err, Result};
use crate::math;
use crate::tensor::Tensor;

/// Convolutional LSTM cell.
///
/// Gates are stacked along the output channels of both kernels in the
/// order input, forget, output, candidate:
///
/// ```text
/// [i, f, o, g] = W_x * x_t + W_h * h_{t-1} + b
/// c_t = σ(f) ⊙ c_{t-1} + σ(i) ⊙ tanh(g)
/// h_t = σ(o) ⊙ tanh(c_t)
/// ```
///
/// Both convolutions use same padding, so the spatial size is preserved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvLstmCell {
    /// `4C_h × C_x × k × k`
    pub input_kernel: Tensor,
    /// `4C_h × C_h × k × k`
    pub hidden_kernel: Tensor,
    /// `4C_h`
    pub bias: Tensor,
}

/// Everything the backward pass needs from one cell application.
#[derive(Debug, Clone)]
pub struct LstmStepCache {
    x: Tensor,
    h_prev: Tensor,
    c_prev: Tensor,
    /// Post-nonlinearity gate values, `4C_h × h × w`.
    gates: Tensor,
    tanh_c: Tensor,
}

impl ConvLstmCell {
    pub fn hidden_channels(&self) -> usize {
        self.hidden_kernel.shape()[1]
    }

    pub fn input_channels(&self) -> usize {
        self.input_kernel.shape()[1]
    }

    /// Returns `(h_t, c_t, cache)`.
    pub fn forward(
        &self,
        x: &Tensor,
        h_prev: &Tensor,
        c_prev: &Tensor,
    ) -> Result<(Tensor, Tensor, LstmStepCache)> {
        let ch = self.hidden_channels();
        if x.ndim() != 3 || h_prev.ndim() != 3 || x.shape()[1..] != h_prev.shape()[1..] {
            return Err(dim_err!(
                "conv-LSTM spatial mismatch: x {:?}, h {:?}",
                x.shape(),
                h_prev.shape()
            ));
        }
        h_prev.same_shape(c_prev)?;
        if h_prev.shape()[0] != ch {
            return Err(dim_err!("hidden state has {} channels, cell has {}", h_prev.shape()[0], ch));
        }
        let mut pre = conv2d(x, &self.input_kernel, Some(&self.bias), Padding::Same)?;
        pre.add_assign(&conv2d(h_prev, &self.hidden_kernel, None, Padding::Same)?)?;

        let plane = h_prev.len();
        let gates_data: Vec<f64> = pre
            .data()
            .iter()
            .enumerate()
            .map(|(idx, &z)| if idx < 3 * plane { math::sigmoid(z) } else { math::tanh(z) })
            .collect();
        let gates = Tensor::new(pre.shape(), gates_data)?;
        let gv = gates.data();
        let (i, f, o, g) = (
            &gv[..plane],
            &gv[plane..2 * plane],
            &gv[2 * plane..3 * plane],
            &gv[3 * plane..],
        );
        let mut c = Tensor::zeros(h_prev.shape());
        let mut tanh_c = Tensor::zeros(h_prev.shape());
        let mut h = Tensor::zeros(h_prev.shape());
        for p in 0..plane {
            let cv = f[p] * c_prev.data()[p] + i[p] * g[p];
            let tc = math::tanh(cv);
            c.data_mut()[p] = cv;
            tanh_c.data_mut()[p] = tc;
            h.data_mut()[p] = o[p] * tc;
        }
        let cache = LstmStepCache {
            x: x.clone(),
            h_prev: h_prev.clone(),
            c_prev: c_prev.clone(),
            gates,
            tanh_c,
        };
        Ok((h, c.clone(), cache))
    }

    /// Given `dL/dh_t` and `dL/dc_t` (the latter from the next time step),
    /// returns `(dx, dh_prev, dc_prev, parameter gradients)`.
    pub fn backward(
        &self,
        cache: &LstmStepCache,
        dh: &Tensor,
        dc: &Tensor,
    ) -> Result<(Tensor, Tensor, Tensor, ConvLstmCell)> {
        cache.h_prev.same_shape(dh)?;
        cache.h_prev.same_shape(dc)?;
        let plane = dh.len();
        let gv = cache.gates.data();
        let mut d_pre = Tensor::zeros(cache.gates.shape());
        let mut dc_prev = Tensor::zeros(dh.shape());
        {
            let dp = d_pre.data_mut();
            for p in 0..plane {
                let (i, f, o, g) = (gv[p], gv[plane + p], gv[2 * plane + p], gv[3 * plane + p]);
                let tc = cache.tanh_c.data()[p];
                let dhv = dh.data()[p];
                let dct = dc.data()[p] + dhv * o * (1.0 - tc * tc);
                let d_o = dhv * tc;
                let d_i = dct * g;
                let d_g = dct * i;
                let d_f = dct * cache.c_prev.data()[p];
                dc_prev.data_mut()[p] = dct * f;
                dp[p] = d_i * i * (1.0 - i);
                dp[plane + p] = d_f * f * (1.0 - f);
                dp[2 * plane + p] = d_o * o * (1.0 - o);
                dp[3 * plane + p] = d_g * (1.0 - g * g);
            }
        }
        let gx = conv2d_backward(&cache.x, &self.input_kernel, Padding::Same, &d_pre)?;
        let gh = conv2d_backward(&cache.h_prev, &self.hidden_kernel, Padding::Same, &d_pre)?;
        let grads = ConvLstmCell {
            input_kernel: gx.kernel,
            hidden_kernel: gh.kernel,
            bias: gx.bias,
        };
        Ok((gx.input, gh.input, dc_prev, grads))
    }
}

impl Parameters for ConvLstmCell {
    fn blocks(&self) -> Vec<&Tensor> {
        alloc::vec![&self.input_kernel, &self.hidden_kernel, &self.bias]
    }

    fn blocks_mut(&mut self) -> Vec<&mut Tensor> {
        alloc::vec![&mut self.input_kernel, &mut self.hidden_kernel, &mut self.bias]
    }
}
