use alloc::format;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Range { lo, hi }
    }

    fn check(&self, what: &str) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi) {
            return Err(Error::Config(format!("{what}: empty range [{}, {}]", self.lo, self.hi)));
        }
        Ok(())
    }
}

/// Parameters of the synthetic blockage scenario.
///
/// Time ranges are in milliseconds. A pedestrian's speed is in frame
/// widths per second, its height a fraction of the frame height and its
/// depth the pixel intensity it renders with (near = bright).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_samples: usize,
    pub frame_height: usize,
    pub frame_width: usize,
    pub tau_ms: f64,
    pub los_power_dbm: f64,
    pub nlos_drop_db: f64,
    pub nlos_duration_ms: Range,
    pub transition_ms: Range,
    /// Quiet time between the end of one episode and the next drop onset.
    pub gap_ms: Range,
    pub pedestrians: usize,
    pub speed_range: Range,
    pub size_range: Range,
    pub depth_range: Range,
    pub background: f64,
    pub noise_std_db: f64,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn paper() -> Self {
        ScenarioConfig {
            n_samples: 15325,
            frame_height: 40,
            frame_width: 40,
            tau_ms: 33.3,
            los_power_dbm: -60.0,
            nlos_drop_db: 15.0,
            nlos_duration_ms: Range::new(200.0, 300.0),
            transition_ms: Range::new(50.0, 200.0),
            gap_ms: Range::new(400.0, 1500.0),
            pedestrians: 2,
            speed_range: Range::new(0.4, 0.7),
            size_range: Range::new(0.5, 0.9),
            depth_range: Range::new(0.5, 1.0),
            background: 0.05,
            noise_std_db: 0.5,
            seed: 1,
        }
    }

    pub fn desk() -> Self {
        ScenarioConfig {
            n_samples: 2000,
            frame_height: 16,
            frame_width: 16,
            ..Self::paper()
        }
    }

    pub fn tau_s(&self) -> f64 {
        self.tau_ms * 1e-3
    }

    /// Pixel column the TX-RX line projects onto.
    pub fn link_column(&self) -> usize {
        self.frame_width / 2
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 || self.frame_height == 0 || self.frame_width == 0 {
            return Err(Error::Config("sample count and frame size must be positive".into()));
        }
        if !(self.tau_ms > 0.0) {
            return Err(Error::Config("tau_ms must be positive".into()));
        }
        if !(self.nlos_drop_db > 0.0) {
            return Err(Error::Config("nlos_drop_db must be positive".into()));
        }
        if !(self.noise_std_db >= 0.0) || !self.los_power_dbm.is_finite() {
            return Err(Error::Config("noise_std_db must be non-negative, LoS power finite".into()));
        }
        if !(0.0..=1.0).contains(&self.background) {
            return Err(Error::Config("background must lie in [0, 1]".into()));
        }
        self.nlos_duration_ms.check("nlos_duration_ms")?;
        self.transition_ms.check("transition_ms")?;
        self.gap_ms.check("gap_ms")?;
        self.speed_range.check("speed_range")?;
        self.size_range.check("size_range")?;
        self.depth_range.check("depth_range")?;
        if self.transition_ms.lo <= 0.0 || self.nlos_duration_ms.lo <= 0.0 {
            return Err(Error::Config("ramps and dwell times must be positive".into()));
        }
        if self.speed_range.lo <= 0.0 {
            return Err(Error::Config("speed_range must be positive".into()));
        }
        if self.size_range.lo <= 0.0 || self.size_range.hi > 1.0 {
            return Err(Error::Config("size_range must lie in (0, 1]".into()));
        }
        if self.depth_range.lo < 0.0 || self.depth_range.hi > 1.0 {
            return Err(Error::Config("depth_range must lie in [0, 1]".into()));
        }
        // the next pedestrian may only reach the link column after the
        // previous episode has ended
        if self.gap_ms.lo < self.transition_ms.hi + self.tau_ms {
            return Err(Error::Config(format!(
                "gap_ms.lo ({}) must be at least transition_ms.hi + tau_ms ({})",
                self.gap_ms.lo,
                self.transition_ms.hi + self.tau_ms
            )));
        }
        Ok(())
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::desk()
    }
}
