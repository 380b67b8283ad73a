use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::tensor::Tensor;

use super::{Label, ScenarioConfig};

/// One blockage: a pedestrian crossing the link column and the power
/// episode it causes. Times are seconds from sample 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub pedestrian: usize,
    pub left_to_right: bool,
    pub onset_s: f64,
    pub ramp_down_s: f64,
    pub dwell_s: f64,
    pub ramp_up_s: f64,
    /// Time the rectangle's leading edge reaches the link column.
    pub first_overlap_s: f64,
    pub speed_px_s: f64,
    pub width_px: f64,
    pub height_px: f64,
    pub depth: f64,
}

impl Episode {
    pub fn nlos_start_s(&self) -> f64 {
        self.onset_s + self.ramp_down_s
    }

    pub fn nlos_end_s(&self) -> f64 {
        self.nlos_start_s() + self.dwell_s
    }

    pub fn end_s(&self) -> f64 {
        self.nlos_end_s() + self.ramp_up_s
    }

    /// Fraction of the full drop applied at time `t`, in `[0, 1]`.
    pub fn drop_fraction(&self, t: f64) -> f64 {
        if t <= self.onset_s || t >= self.end_s() {
            0.0
        } else if t < self.nlos_start_s() {
            (t - self.onset_s) / self.ramp_down_s
        } else if t <= self.nlos_end_s() {
            1.0
        } else {
            (self.end_s() - t) / self.ramp_up_s
        }
    }

    /// Horizontal extent `[x0, x1)` in pixels at time `t`.
    pub fn extent(&self, t: f64, column: usize) -> (f64, f64) {
        let c = column as f64;
        let s = self.speed_px_s * (t - self.first_overlap_s);
        if self.left_to_right {
            (c - self.width_px + s, c + s)
        } else {
            (c + 1.0 - s, c + 1.0 - s + self.width_px)
        }
    }

    /// Whether the rectangle covers any part of pixel column `j` at `t`.
    pub fn covers_column(&self, t: f64, column: usize, j: usize) -> bool {
        let (x0, x1) = self.extent(t, column);
        (j as f64) + 1.0 > x0 && (j as f64) < x1
    }
}

/// Aligned depth frames, received powers and labels for `k = 1..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub frame_height: usize,
    pub frame_width: usize,
    /// Row-major `n × N_H × N_W`, values in `[0, 1]`.
    pub frames: Vec<f32>,
    pub powers_dbm: Vec<f64>,
    pub labels: Vec<Label>,
    /// Ground-truth episodes; empty for imported datasets.
    pub episodes: Vec<Episode>,
    pub tau_s: f64,
}

impl Dataset {
    pub fn from_parts(
        frame_height: usize,
        frame_width: usize,
        frames: Vec<f32>,
        powers_dbm: Vec<f64>,
        labels: Vec<Label>,
        tau_s: f64,
    ) -> Result<Self> {
        let n = powers_dbm.len();
        if n == 0 || labels.len() != n || frames.len() != n * frame_height * frame_width {
            return Err(Error::Config(format!(
                "inconsistent dataset: {} powers, {} labels, {} pixels for {}x{} frames",
                n,
                labels.len(),
                frames.len(),
                frame_height,
                frame_width
            )));
        }
        if frames.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Config("frame pixels must lie in [0, 1]".into()));
        }
        if powers_dbm.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("received powers".into()));
        }
        Ok(Dataset {
            frame_height,
            frame_width,
            frames,
            powers_dbm,
            labels,
            episodes: Vec::new(),
            tau_s,
        })
    }

    pub fn len(&self) -> usize {
        self.powers_dbm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.powers_dbm.is_empty()
    }

    /// Pixels of frame `k` (1-based).
    pub fn frame(&self, k: usize) -> &[f32] {
        let px = self.frame_height * self.frame_width;
        &self.frames[(k - 1) * px..k * px]
    }

    /// Frame `k` as a `1 × N_H × N_W` tensor.
    pub fn frame_tensor(&self, k: usize) -> Tensor {
        let data = self.frame(k).iter().map(|&p| p as f64).collect();
        Tensor::new(&[1, self.frame_height, self.frame_width], data).expect("frame shape")
    }

    pub fn power(&self, k: usize) -> f64 {
        self.powers_dbm[k - 1]
    }

    pub fn label(&self, k: usize) -> Label {
        self.labels[k - 1]
    }

    pub fn time_s(&self, k: usize) -> f64 {
        (k - 1) as f64 * self.tau_s
    }
}

fn draw<R: Rng>(rng: &mut R, r: super::Range) -> f64 {
    if r.lo == r.hi {
        r.lo
    } else {
        rng.random_range(r.lo..=r.hi)
    }
}

fn schedule(cfg: &ScenarioConfig, rng: &mut ChaCha8Rng) -> Vec<Episode> {
    let tau = cfg.tau_s();
    let horizon = (cfg.n_samples - 1) as f64 * tau;
    let w = cfg.frame_width as f64;
    let mut episodes = Vec::new();
    if cfg.pedestrians == 0 {
        return episodes;
    }
    let mut t = 0.0;
    loop {
        let gap = draw(rng, cfg.gap_ms) * 1e-3;
        let ramp_down = draw(rng, cfg.transition_ms) * 1e-3;
        let dwell = draw(rng, cfg.nlos_duration_ms) * 1e-3;
        let ramp_up = draw(rng, cfg.transition_ms) * 1e-3;
        let speed = draw(rng, cfg.speed_range) * w;
        let height = draw(rng, cfg.size_range) * cfg.frame_height as f64;
        let depth = draw(rng, cfg.depth_range);
        let onset = t + gap;
        if onset > horizon {
            break;
        }
        // reaches the column one frame before the ramp starts and leaves
        // it as the power begins to recover
        let lead = ramp_down + tau;
        let width = (speed * (lead + ramp_down + dwell) - 1.0).max(1.0);
        let pedestrian = episodes.len() % cfg.pedestrians;
        let ep = Episode {
            pedestrian,
            left_to_right: pedestrian % 2 == 0,
            onset_s: onset,
            ramp_down_s: ramp_down,
            dwell_s: dwell,
            ramp_up_s: ramp_up,
            first_overlap_s: onset - lead,
            speed_px_s: speed,
            width_px: width,
            height_px: height,
            depth,
        };
        t = ep.end_s();
        episodes.push(ep);
    }
    episodes
}

fn render(cfg: &ScenarioConfig, episodes: &[Episode]) -> Vec<f32> {
    let (h, w, n) = (cfg.frame_height, cfg.frame_width, cfg.n_samples);
    let tau = cfg.tau_s();
    let column = cfg.link_column();
    let mut frames = vec![cfg.background as f32; n * h * w];
    for ep in episodes {
        // any time the rectangle can intersect the frame
        let margin = (w as f64 + ep.width_px + 2.0) / ep.speed_px_s;
        let t_lo = ep.first_overlap_s - margin;
        let t_hi = ep.first_overlap_s + margin;
        let k_lo = (math::floor(t_lo / tau).max(0.0) as usize).max(0);
        let k_hi = (math::ceil(t_hi / tau).max(0.0) as usize).min(n - 1);
        let top = (h as f64 - ep.height_px).max(0.0);
        let depth = ep.depth as f32;
        for idx in k_lo..=k_hi {
            let t = idx as f64 * tau;
            let (x0, x1) = ep.extent(t, column);
            let frame = &mut frames[idx * h * w..(idx + 1) * h * w];
            for i in 0..h {
                if (i as f64) + 1.0 <= top {
                    continue;
                }
                for j in 0..w {
                    if (j as f64) + 1.0 > x0 && (j as f64) < x1 {
                        let p = &mut frame[i * w + j];
                        *p = p.max(depth);
                    }
                }
            }
        }
    }
    frames
}

/// Builds a dataset from `cfg`. Identical configurations give bitwise
/// identical datasets.
pub fn generate(cfg: &ScenarioConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let episodes = schedule(cfg, &mut rng);
    let frames = render(cfg, &episodes);

    let mut noise_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    noise_rng.set_stream(1);
    let tau = cfg.tau_s();
    let mut powers = Vec::with_capacity(cfg.n_samples);
    let mut labels = Vec::with_capacity(cfg.n_samples);
    let mut next = 0usize;
    for idx in 0..cfg.n_samples {
        let t = idx as f64 * tau;
        while next < episodes.len() && episodes[next].end_s() <= t {
            next += 1;
        }
        let frac = episodes.get(next).map_or(0.0, |e| e.drop_fraction(t));
        let label = if frac >= 1.0 {
            Label::Nlos
        } else if frac <= 0.0 {
            Label::Los
        } else {
            Label::Transition
        };
        let z: f64 = noise_rng.sample(StandardNormal);
        powers.push(cfg.los_power_dbm - cfg.nlos_drop_db * frac + cfg.noise_std_db * z);
        labels.push(label);
    }
    Ok(Dataset {
        frame_height: cfg.frame_height,
        frame_width: cfg.frame_width,
        frames,
        powers_dbm: powers,
        labels,
        episodes,
        tau_s: tau,
    })
}
