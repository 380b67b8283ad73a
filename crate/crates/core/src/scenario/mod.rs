//! Synthetic blockage scenario: two pedestrians repeatedly cross the
//! TX-RX line in front of a depth camera, and each crossing produces a
//! ramp-down, NLoS dwell and ramp-up in the received power.
//!
//! Each pedestrian is visible, and reaches the link column in the image,
//! before the power starts to fall.

mod config;
mod generate;
mod label;
mod samples;
mod split;

pub use config::{Range, ScenarioConfig};
pub use generate::{generate, Dataset, Episode};
pub use label::Label;
pub use samples::{anchors, make_batch, Batcher};
pub use split::{split_dataset, IndexRange, SplitMode, SplitSpec};
