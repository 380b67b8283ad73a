//! Analytic FP/BP latency over the mmWave link.
//!
//! Each interval `k` of length `τ'` has one received-power sample `P_k`.
//! Transmission time of a payload is its bit count over the Shannon rate
//! `W log2(1 + P_k / (σ² W))`; a training step in interval `k` takes
//! `T_step[k] = T_FP[k] + T_BP[k] + T_comp` and at most
//! `N[k] = floor(τ' / T_step[k])` steps fit in the interval.

mod params;
mod timeline;
pub mod units;

pub use params::ChannelParams;
pub use timeline::{
    shannon_rate, steps_per_interval, t_bp, t_fp, transmit_time, IntervalTiming, LatencyTimeline,
    LinkLoad, StepTime,
};
