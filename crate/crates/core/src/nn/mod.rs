//! Layers with explicit forward and backward passes, plus Adam.
//!
//! There is no tape: each layer's `forward` returns whatever the matching
//! `backward` needs, and callers thread it through. Parameter containers
//! double as gradient containers (same shapes, same block order).

mod activation;
mod adam;
mod conv;
mod dense;
pub mod gradcheck;
mod init;
mod loss;
mod lstm;
mod pool;

pub use activation::Activation;
pub use adam::{adam_step, Adam, AdamHyper, AdamState};
pub use conv::{conv2d, conv2d_backward, Conv2d, Conv2dGrads, Padding};
pub use dense::Dense;
pub use init::glorot_bound;
pub use loss::{mse_grad, mse_loss};
pub use lstm::{ConvLstmCell, LstmStepCache};
pub use pool::{max_pool, max_pool_backward, PoolOutput};

use alloc::vec::Vec;

use crate::tensor::Tensor;

/// Anything holding trainable parameter blocks in a fixed order.
pub trait Parameters {
    fn blocks(&self) -> Vec<&Tensor>;
    fn blocks_mut(&mut self) -> Vec<&mut Tensor>;

    fn parameter_count(&self) -> usize {
        self.blocks().iter().map(|t| t.len()).sum()
    }

    /// Sets every block to zero; used to build gradient accumulators.
    fn zero(&mut self) {
        for b in self.blocks_mut() {
            b.fill(0.0);
        }
    }

    /// Elementwise `self += other`. Both must have the same block layout.
    fn accumulate(&mut self, other: &Self) -> crate::Result<()>
    where
        Self: Sized,
    {
        let src = other.blocks();
        let dst = self.blocks_mut();
        if src.len() != dst.len() {
            return Err(crate::error::dim_err!(
                "block count {} vs {}",
                dst.len(),
                src.len()
            ));
        }
        for (d, s) in dst.into_iter().zip(src) {
            d.add_assign(s)?;
        }
        Ok(())
    }
}
