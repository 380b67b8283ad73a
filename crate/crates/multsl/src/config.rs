//! Experiment configuration files (TOML).
//!
//! A file picks a `preset` (`desk` or `paper`) and overrides any subset of
//! its keys:
//!
//! ```toml
//! preset = "desk"
//! split = "disjoint"
//!
//! [model]
//! variant = "img"
//! pool_height = 2
//! pool_width = 2
//!
//! [train]
//! epochs = 5
//! ```

use std::fs;
use std::path::Path;

use multsl_core::channel::ChannelParams;
use multsl_core::models::{ModelConfig, Variant};
use multsl_core::scenario::{ScenarioConfig, SplitMode};
use multsl_core::train::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    #[default]
    Desk,
    Paper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub preset: Preset,
    pub split: SplitMode,
    pub scenario: ScenarioConfig,
    pub model: ModelConfig,
    pub channel: ChannelParams,
    pub train: TrainConfig,
}

impl ExperimentConfig {
    pub fn preset(preset: Preset) -> Self {
        match preset {
            Preset::Desk => ExperimentConfig {
                preset,
                split: SplitMode::Paper,
                scenario: ScenarioConfig::desk(),
                model: ModelConfig::desk(Variant::ImgRf),
                channel: ChannelParams::default(),
                train: TrainConfig::desk(),
            },
            Preset::Paper => ExperimentConfig {
                preset,
                split: SplitMode::Paper,
                scenario: ScenarioConfig::paper(),
                model: ModelConfig::paper(Variant::ImgRf),
                channel: ChannelParams::default(),
                train: TrainConfig::paper(),
            },
        }
    }

    pub fn desk() -> Self {
        Self::preset(Preset::Desk)
    }

    /// Parses a config, filling unspecified keys from its preset.
    pub fn from_toml(text: &str) -> Result<Self> {
        let user: toml::Table = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let preset = match user.get("preset") {
            None => Preset::Desk,
            Some(v) => v
                .clone()
                .try_into()
                .map_err(|e: toml::de::Error| CliError::Config(format!("preset: {e}")))?,
        };
        let mut base = toml::Table::try_from(Self::preset(preset)).map_err(|e| CliError::Config(e.to_string()))?;
        merge(&mut base, user);
        let cfg: ExperimentConfig = toml::Value::Table(base)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_toml()).map_err(|e| CliError::io(path, e))
    }

    /// Checks every section and their mutual consistency.
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.model.validate()?;
        self.channel.validate()?;
        self.train.validate()?;
        if (self.scenario.frame_height, self.scenario.frame_width) != (self.model.frame_height, self.model.frame_width) {
            return Err(CliError::Config(format!(
                "scenario frames {}x{} but model expects {}x{}",
                self.scenario.frame_height, self.scenario.frame_width, self.model.frame_height, self.model.frame_width
            )));
        }
        Ok(())
    }

    /// One seed for the scenario, the initial weights and the batch order.
    pub fn set_seed(&mut self, seed: u64) {
        self.scenario.seed = seed;
        self.train.seed = seed;
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Parses `HxW`, e.g. `4x4`.
pub fn parse_pool(s: &str) -> Result<(usize, usize)> {
    let bad = || CliError::Usage(format!("pool must look like 4x4, got {s:?}"));
    let (h, w) = s.trim().split_once(['x', 'X']).ok_or_else(bad)?;
    let h: usize = h.trim().parse().map_err(|_| bad())?;
    let w: usize = w.trim().parse().map_err(|_| bad())?;
    if h == 0 || w == 0 {
        return Err(bad());
    }
    Ok((h, w))
}
