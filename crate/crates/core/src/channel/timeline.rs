use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{units, ChannelParams};
use crate::error::{Error, Result};
use crate::math;
use crate::models::{ModelConfig, Variant};
use crate::protocol::{bp_payload_bits, fp_payload_bits};

/// Shannon rate `W log2(1 + P / (σ² W))` in bit/s for a received power in watts.
pub fn shannon_rate(power_w: f64, params: &ChannelParams) -> Result<f64> {
    if !(power_w >= 0.0) {
        return Err(Error::Domain(format!("received power must be non-negative, got {power_w}")));
    }
    Ok(params.bandwidth_hz * math::log2(1.0 + power_w / params.noise_power_w()))
}

/// Seconds to push `bits` at `rate`. Empty payloads take no time; a dead
/// link (rate 0) never finishes and yields `+inf`.
pub fn transmit_time(bits: u64, rate: f64) -> f64 {
    if bits == 0 {
        0.0
    } else if rate <= 0.0 {
        f64::INFINITY
    } else {
        bits as f64 / rate
    }
}

/// FP latency for one sample under the per-sample accounting of the model.
pub fn t_fp(config: &ModelConfig, params: &ChannelParams, power_w: f64) -> Result<f64> {
    if config.variant == Variant::Rf {
        return Ok(0.0);
    }
    let rate = shannon_rate(power_w, params)?;
    Ok(transmit_time(fp_payload_bits(config, 1, params.bits_per_pixel), rate))
}

/// BP latency sized by the upper UE convolution's weight count.
pub fn t_bp(variant: Variant, upper_layer_weights: usize, params: &ChannelParams, power_w: f64) -> Result<f64> {
    if variant == Variant::Rf {
        return Ok(0.0);
    }
    let rate = shannon_rate(power_w, params)?;
    Ok(transmit_time(bp_payload_bits(upper_layer_weights, params.bits_per_gradient), rate))
}

/// `floor(τ' / T_step)`; zero when a step does not fit (including `+inf`).
pub fn steps_per_interval(t_step: f64, interval_s: f64) -> u64 {
    if !(t_step > 0.0) || !t_step.is_finite() {
        return 0;
    }
    math::floor(interval_s / t_step) as u64
}

/// What one training step puts on the link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkLoad {
    pub fp_bits: u64,
    pub bp_bits: u64,
    pub t_comp_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalTiming {
    /// 1-based interval index.
    pub k: usize,
    pub power_dbm: f64,
    pub t_fp: f64,
    pub t_bp: f64,
    pub t_step: f64,
    pub steps: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepTime {
    pub n: u64,
    pub k_n: usize,
    pub t_n: f64,
}

/// Per-interval step timing over a power trace, and the elapsed time `T_n`
/// until the `n`th gradient step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyTimeline {
    pub interval_s: f64,
    pub intervals: Vec<IntervalTiming>,
    /// `cumulative[k] = N[1] + … + N[k]`, with `cumulative[0] = 0`.
    cumulative: Vec<u64>,
}

impl LatencyTimeline {
    pub fn build(trace_dbm: &[f64], load: LinkLoad, params: &ChannelParams) -> Result<Self> {
        params.validate()?;
        let mut intervals = Vec::with_capacity(trace_dbm.len());
        let mut cumulative = Vec::with_capacity(trace_dbm.len() + 1);
        cumulative.push(0u64);
        for (i, &p_dbm) in trace_dbm.iter().enumerate() {
            let rate = shannon_rate(units::dbm_to_watts(p_dbm), params)?;
            let t_fp = transmit_time(load.fp_bits, rate);
            let t_bp = transmit_time(load.bp_bits, rate);
            let t_step = t_fp + t_bp + load.t_comp_s;
            let steps = steps_per_interval(t_step, params.interval_s);
            intervals.push(IntervalTiming {
                k: i + 1,
                power_dbm: p_dbm,
                t_fp,
                t_bp,
                t_step,
                steps,
            });
            let prev = *cumulative.last().unwrap_or(&0);
            cumulative.push(prev + steps);
        }
        Ok(LatencyTimeline {
            interval_s: params.interval_s,
            intervals,
            cumulative,
        })
    }

    /// Total steps that fit in the whole trace.
    pub fn capacity(&self) -> u64 {
        *self.cumulative.last().unwrap_or(&0)
    }

    fn insufficient(&self, n: u64) -> Error {
        Error::InsufficientTrace {
            step: n,
            intervals: self.intervals.len(),
        }
    }

    /// Interval (1-based) in which step `n` runs: the first `k` with
    /// `N[1] + … + N[k] >= n`. Intervals with `N[k] = 0` are skipped over.
    pub fn step_interval(&self, n: u64) -> Result<usize> {
        if n == 0 {
            return Err(Error::Domain("step numbers start at 1".into()));
        }
        let k = self.cumulative.partition_point(|&c| c < n);
        if k >= self.cumulative.len() {
            return Err(self.insufficient(n));
        }
        Ok(k)
    }

    /// Time at which step `n` completes. Steps run back to back from the
    /// start of their interval; an interval that cannot host another step
    /// is idle for the rest of its `τ'`:
    ///
    /// `T_n = (k_n - 1) τ' + (n - Σ_{k<k_n} N[k]) T_step[k_n]`
    pub fn elapsed(&self, n: u64) -> Result<f64> {
        let k_n = self.step_interval(n)?;
        let done_before = self.cumulative[k_n - 1];
        let t_step = self.intervals[k_n - 1].t_step;
        Ok((k_n - 1) as f64 * self.interval_s + (n - done_before) as f64 * t_step)
    }

    /// The literal closed form
    /// `Σ_{k<k_n} T_step[k] + (n - Σ_{k<k_n} N[k] + 1) T_step[k_n]` with
    /// `k_n = max{k' ≥ 1 : N[1] + … + N[k'] ≤ n}`.
    ///
    /// Kept for comparison against [`elapsed`](Self::elapsed). It is not
    /// monotone in `n` and is undefined while `n < N[1]`.
    pub fn elapsed_literal(&self, n: u64) -> Result<f64> {
        let k_n = self.cumulative[1..].partition_point(|&c| c <= n);
        if k_n == 0 {
            return Err(Error::Domain(format!(
                "k_n undefined for n = {n}: N[1] = {} already exceeds it",
                self.cumulative.get(1).copied().unwrap_or(0)
            )));
        }
        let prefix: f64 = self.intervals[..k_n - 1].iter().map(|i| i.t_step).sum();
        let tail = (n as f64 - self.cumulative[k_n - 1] as f64 + 1.0) * self.intervals[k_n - 1].t_step;
        Ok(prefix + tail)
    }

    /// `(n, k_n, T_n)` for `n = 1..=n_max`.
    pub fn curve(&self, n_max: u64) -> Result<Vec<StepTime>> {
        if n_max > self.capacity() {
            return Err(self.insufficient(n_max));
        }
        let mut out = Vec::with_capacity(n_max as usize);
        let mut k = 1usize;
        for n in 1..=n_max {
            while self.cumulative[k] < n {
                k += 1;
            }
            let t_n = (k - 1) as f64 * self.interval_s
                + (n - self.cumulative[k - 1]) as f64 * self.intervals[k - 1].t_step;
            out.push(StepTime { n, k_n: k, t_n });
        }
        Ok(out)
    }

    /// Intervals where not even one step fits.
    pub fn stalled_intervals(&self) -> impl Iterator<Item = &IntervalTiming> {
        self.intervals.iter().filter(|i| i.steps == 0)
    }
}
