use serde::{Deserialize, Serialize};

use crate::math;
use crate::tensor::Tensor;

/// Elementwise nonlinearity applied after each UE convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
}

impl Activation {
    pub fn forward(self, x: &Tensor) -> Tensor {
        match self {
            Activation::Relu => x.map(|v| v.max(0.0)),
            Activation::Tanh => x.map(math::tanh),
        }
    }

    /// `input` is the pre-activation, `output` what `forward` returned.
    /// The ReLU subgradient at exactly zero is zero.
    pub fn backward(self, input: &Tensor, output: &Tensor, grad: &Tensor) -> Tensor {
        let mut d = grad.clone();
        match self {
            Activation::Relu => {
                for (g, &x) in d.data_mut().iter_mut().zip(input.data()) {
                    if x <= 0.0 {
                        *g = 0.0;
                    }
                }
            }
            Activation::Tanh => {
                for (g, &y) in d.data_mut().iter_mut().zip(output.data()) {
                    *g *= 1.0 - y * y;
                }
            }
        }
        d
    }
}
