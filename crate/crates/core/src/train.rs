//! Epoch loop, evaluation and the training-time axis.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelParams, LatencyTimeline};
use crate::error::{Error, Result};
use crate::metrics::{privacy_leakage, rmse, PredictionRecord};
use crate::models::{ModelConfig, SplitModel, Standardizer};
use crate::nn::AdamHyper;
use crate::protocol::{training_load, Accounting, InProcessLink, Link, SplitSession, WireDtype};
use crate::scenario::{anchors, make_batch, Batcher, Dataset, IndexRange, SplitSpec};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    #[serde(default)]
    pub adam: AdamHyper,
    #[serde(default)]
    pub wire: WireDtype,
    #[serde(default)]
    pub accounting: Accounting,
}

impl TrainConfig {
    pub fn paper() -> Self {
        TrainConfig {
            batch_size: 64,
            epochs: 50,
            seed: 1,
            adam: AdamHyper::default(),
            wire: WireDtype::F32,
            accounting: Accounting::default(),
        }
    }

    pub fn desk() -> Self {
        TrainConfig { epochs: 10, ..Self::paper() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        self.adam.validate()
    }
}

/// One row of the training curve. Epoch 0 is the untrained model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Steps taken so far, `n`.
    pub steps: u64,
    /// `T_n` in seconds.
    pub elapsed_s: f64,
    pub valid_rmse_db: f64,
    /// Mean mini-batch loss of the epoch, standardized units.
    pub train_loss: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters of the epoch with the lowest validation RMSE.
    pub model: SplitModel,
    pub standardizer: Standardizer,
    pub best_epoch: usize,
    pub history: Vec<EpochRecord>,
    pub timeline: LatencyTimeline,
}

/// Timeline of a training run over the dataset's power trace, one
/// interval per sample.
pub fn training_timeline(
    data: &Dataset,
    config: &ModelConfig,
    channel: &ChannelParams,
    accounting: Accounting,
    batch_size: usize,
) -> Result<LatencyTimeline> {
    let load = training_load(config, channel, accounting, batch_size);
    LatencyTimeline::build(&data.powers_dbm, load, channel)
}

/// Predictions for every anchor of `range`, de-standardized to dBm.
pub fn evaluate(
    session: &SplitSession,
    data: &Dataset,
    range: IndexRange,
    link: &mut dyn Link,
) -> Result<Vec<PredictionRecord>> {
    let cfg = &session.config;
    let ks = anchors(range, cfg.seq_len, cfg.lookahead_steps);
    if ks.is_empty() {
        return Err(Error::EmptySplit(format!("no evaluation samples in {}..={}", range.start, range.end)));
    }
    let mut out = Vec::with_capacity(ks.len());
    for k in ks {
        let batch = make_batch(data, &[k], cfg.seq_len, cfg.lookahead_steps, &session.standardizer)?;
        let z = session.predict_std(&batch.sample_frames(0), batch.sample_powers(0), link)?;
        let target = k + cfg.lookahead_steps;
        out.push(PredictionRecord {
            k: target,
            predicted_dbm: session.standardizer.inverse(z),
            actual_dbm: data.power(target),
            label: data.label(target),
        });
    }
    Ok(out)
}

pub fn new_session(model: SplitModel, train: &TrainConfig, channel: &ChannelParams, standardizer: Standardizer) -> Result<SplitSession> {
    SplitSession::new(model, train.adam, train.wire, train.accounting, channel.clone(), standardizer)
}

/// Trains `model` on `split.train`, tracking validation RMSE per epoch
/// against the elapsed training time `T_n`.
pub fn train(
    model: SplitModel,
    channel: &ChannelParams,
    train_cfg: &TrainConfig,
    data: &Dataset,
    split: &SplitSpec,
    link: &mut dyn Link,
) -> Result<TrainOutcome> {
    train_cfg.validate()?;
    let cfg = model.config.clone();
    if (data.frame_height, data.frame_width) != (cfg.frame_height, cfg.frame_width) {
        return Err(Error::Config(format!(
            "dataset frames are {}x{}, model expects {}x{}",
            data.frame_height, data.frame_width, cfg.frame_height, cfg.frame_width
        )));
    }
    let train_powers: Vec<f64> = split.train.iter().map(|k| data.power(k)).collect();
    let standardizer = Standardizer::fit(&train_powers)?;
    let batcher = Batcher::new(split.train, cfg.seq_len, cfg.lookahead_steps, train_cfg.batch_size, train_cfg.seed)?;
    let timeline = training_timeline(data, &cfg, channel, train_cfg.accounting, train_cfg.batch_size)?;
    let total_steps = (batcher.batches_per_epoch() * train_cfg.epochs) as u64;
    if total_steps > timeline.capacity() {
        return Err(Error::InsufficientTrace { step: total_steps, intervals: data.len() });
    }

    let mut session = new_session(model, train_cfg, channel, standardizer)?;
    let mut eval_link = InProcessLink::default();
    let valid0 = rmse(&evaluate(&session, data, split.valid, &mut eval_link)?)?;
    let mut history = Vec::with_capacity(train_cfg.epochs + 1);
    history.push(EpochRecord { epoch: 0, steps: 0, elapsed_s: 0.0, valid_rmse_db: valid0, train_loss: None });
    let mut best = (0usize, valid0, session.model());

    let mut n = 0u64;
    for epoch in 1..=train_cfg.epochs {
        let mut loss_sum = 0.0;
        let batches = batcher.epoch(epoch as u64);
        for ks in &batches {
            n += 1;
            let k_n = timeline.step_interval(n)?;
            let batch = make_batch(data, ks, cfg.seq_len, cfg.lookahead_steps, &session.standardizer)?;
            let report = session.run_training_step(&batch, link, data.power(k_n))?;
            loss_sum += report.loss;
        }
        let valid = rmse(&evaluate(&session, data, split.valid, &mut eval_link)?)?;
        history.push(EpochRecord {
            epoch,
            steps: n,
            elapsed_s: timeline.elapsed(n)?,
            valid_rmse_db: valid,
            train_loss: Some(loss_sum / batches.len() as f64),
        });
        if valid < best.1 {
            best = (epoch, valid, session.model());
        }
    }
    Ok(TrainOutcome {
        model: best.2,
        standardizer,
        best_epoch: best.0,
        history,
        timeline,
    })
}

/// Raw frames and UE outputs for every index of `range`.
pub fn ue_outputs(model: &SplitModel, data: &Dataset, range: IndexRange) -> Result<(Vec<Tensor>, Vec<Tensor>)> {
    let mut raw = Vec::with_capacity(range.len());
    let mut out = Vec::with_capacity(range.len());
    for k in range.iter() {
        let x = data.frame_tensor(k);
        out.push(model.ue.forward_frame(&x)?);
        raw.push(x);
    }
    Ok((raw, out))
}

/// Privacy leakage of the UE segment over `range`.
pub fn leakage(model: &SplitModel, data: &Dataset, range: IndexRange) -> Result<f64> {
    if !model.config.variant.uses_images() {
        return Err(Error::Config("RF models forward no images".into()));
    }
    let (raw, out) = ue_outputs(model, data, range)?;
    privacy_leakage(&raw, &out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Variant;
    use crate::scenario::{generate, split_dataset, ScenarioConfig, SplitMode};

    fn tiny() -> (Dataset, SplitSpec) {
        let sc = ScenarioConfig { n_samples: 300, frame_height: 8, frame_width: 8, ..ScenarioConfig::desk() };
        let d = generate(&sc).unwrap();
        let s = split_dataset(d.len(), SplitMode::Paper).unwrap();
        (d, s)
    }

    fn tiny_model(v: Variant) -> ModelConfig {
        ModelConfig { frame_height: 8, frame_width: 8, conv1_channels: 2, lstm_hidden_channels: 2, pool_height: 2, pool_width: 2, ..ModelConfig::desk(v) }
    }

    #[test]
    fn history_shape_and_determinism() {
        let (d, s) = tiny();
        let tc = TrainConfig { epochs: 2, batch_size: 32, ..TrainConfig::desk() };
        let ch = ChannelParams::default();
        let run = || {
            let m = SplitModel::init(&tiny_model(Variant::ImgRf), 3).unwrap();
            train(m, &ch, &tc, &d, &s, &mut InProcessLink::default()).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.history, b.history);
        assert_eq!(a.model, b.model);
        assert_eq!(a.history.len(), 3);
        assert_eq!(a.history[0].steps, 0);
        let per_epoch = a.history[1].steps;
        assert_eq!(a.history[2].steps, 2 * per_epoch);
        assert!(a.history[2].elapsed_s > a.history[1].elapsed_s);
    }

    #[test]
    fn rf_time_axis_uses_compute_only() {
        let (d, _) = tiny();
        let ch = ChannelParams::default();
        let tl = training_timeline(&d, &tiny_model(Variant::Rf), &ch, Accounting::default(), 64).unwrap();
        for iv in &tl.intervals {
            assert_eq!(iv.t_step, ch.t_comp_rf_s);
        }
    }

    #[test]
    fn rf_has_no_leakage() {
        let (d, s) = tiny();
        let m = SplitModel::init(&tiny_model(Variant::Rf), 1).unwrap();
        assert!(leakage(&m, &d, s.valid).is_err());
        let m = SplitModel::init(&tiny_model(Variant::Img), 1).unwrap();
        assert!(leakage(&m, &d, s.valid).unwrap() > 0.0);
    }
}
