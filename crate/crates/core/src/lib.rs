//! Multimodal split learning over a simulated mmWave link.
//!
//! A convolutional-LSTM network is cut into a UE segment (convolutions and
//! max pooling over depth frames) and a BS segment (power fusion, ConvLSTM
//! and a dense head). The two halves only exchange serialized activations
//! (FP messages) and cut-layer gradients (BP messages). Around that sit an
//! analytic Shannon-rate latency model for those exchanges, a synthetic
//! blockage scenario generator, and accuracy / privacy-leakage metrics.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! anything touching the filesystem live in the `multsl` companion crate.
#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod channel;
pub mod error;
pub mod math;
pub mod metrics;
pub mod models;
pub mod nn;
pub mod protocol;
pub mod scenario;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use tensor::Tensor;
