use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::Parameters;
use crate::error::{dim_err, Result};
use crate::tensor::Tensor;

/// Affine map `y = W x + b` over a flattened input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    /// `m×n`
    pub weight: Tensor,
    /// `m`
    pub bias: Tensor,
}

impl Dense {
    fn dims(&self, input: &Tensor) -> Result<(usize, usize)> {
        let [m, n] = *self.weight.shape() else {
            return Err(dim_err!("dense weight must be m×n, got {:?}", self.weight.shape()));
        };
        if input.len() != n {
            return Err(dim_err!("dense expects {} inputs, got {}", n, input.len()));
        }
        if self.bias.shape() != [m] {
            return Err(dim_err!("dense bias {:?}, expected [{}]", self.bias.shape(), m));
        }
        Ok((m, n))
    }

    /// Any input shape is accepted as long as it has `n` elements.
    pub fn forward(&self, input: &Tensor) -> Result<Tensor> {
        let (m, n) = self.dims(input)?;
        let w = self.weight.data();
        let x = input.data();
        let y = (0..m)
            .map(|r| {
                let row = &w[r * n..(r + 1) * n];
                self.bias.data()[r] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect();
        Tensor::new(&[m], y)
    }

    /// Returns the input gradient (shaped like `input`) and parameter gradients.
    pub fn backward(&self, input: &Tensor, grad_out: &Tensor) -> Result<(Tensor, Dense)> {
        let (m, n) = self.dims(input)?;
        if grad_out.len() != m {
            return Err(dim_err!("dense upstream has {} values, expected {}", grad_out.len(), m));
        }
        let w = self.weight.data();
        let x = input.data();
        let g = grad_out.data();
        let mut dw = Vec::with_capacity(m * n);
        for &gr in g {
            dw.extend(x.iter().map(|xv| gr * xv));
        }
        let mut dx = Tensor::zeros(input.shape());
        for (r, &gr) in g.iter().enumerate() {
            for (d, wv) in dx.data_mut().iter_mut().zip(&w[r * n..(r + 1) * n]) {
                *d += gr * wv;
            }
        }
        let grads = Dense {
            weight: Tensor::new(&[m, n], dw)?,
            bias: Tensor::new(&[m], g.to_vec())?,
        };
        Ok((dx, grads))
    }
}

impl Parameters for Dense {
    fn blocks(&self) -> Vec<&Tensor> {
        alloc::vec![&self.weight, &self.bias]
    }

    fn blocks_mut(&mut self) -> Vec<&mut Tensor> {
        alloc::vec![&mut self.weight, &mut self.bias]
    }
}
