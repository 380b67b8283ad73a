//! The experiment recipes behind each subcommand.
//!
//! CSV schemas (one header row each):
//!
//! * `history.csv`: `epoch,n,T_n_s,valid_rmse_db,train_loss`
//! * `predictions.csv`: `k,P_hat_dBm,P_dBm,label`
//! * `metrics.csv`, `sweep.csv`: `pool_w,pool_h,variant,rmse_test,rmse_los,rmse_nlos,rmse_transition,fp_bits,leakage,t_fp_mean_s`
//!   (empty cells for conditions absent from the test set and for the
//!   leakage of `rf`; `inf` marks maximal leakage)
//! * `latency_intervals.csv`: `k,P_k_dBm,T_FP,T_BP,T_step,N`
//! * `latency_steps.csv`: `n,k_n,T_n`
//! * `privacy.csv`: `pool_w,pool_h,variant,leakage,max_distance`

use std::fs;
use std::path::{Path, PathBuf};

use multsl_core::channel::{shannon_rate, transmit_time, units};
use multsl_core::metrics::{rmse, segmented_rmse, Label, PredictionRecord};
use multsl_core::models::SplitModel;
use multsl_core::protocol::{inference_load, InProcessLink, Link};
use multsl_core::scenario::{generate, split_dataset, Dataset, SplitSpec};
use multsl_core::train::{self, new_session, training_timeline, TrainOutcome};
use multsl_core::Error as CoreError;
use serde::{Deserialize, Serialize};

use crate::capture::CaptureLink;
use crate::checkpoint::{self, Checkpoint, CHECKPOINT_FILE};
use crate::config::ExperimentConfig;
use crate::dataset_io::{read_dataset, write_dataset};
use crate::error::{CliError, Result};

pub const CONFIG_FILE: &str = "config.toml";
pub const HISTORY_FILE: &str = "history.csv";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const METRICS_FILE: &str = "metrics.csv";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const INTERVALS_FILE: &str = "latency_intervals.csv";
pub const STEPS_FILE: &str = "latency_steps.csv";
pub const PRIVACY_FILE: &str = "privacy.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub epoch: usize,
    pub n: u64,
    #[serde(rename = "T_n_s")]
    pub t_n_s: f64,
    pub valid_rmse_db: f64,
    pub train_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub k: usize,
    #[serde(rename = "P_hat_dBm")]
    pub p_hat_dbm: f64,
    #[serde(rename = "P_dBm")]
    pub p_dbm: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub pool_w: usize,
    pub pool_h: usize,
    pub variant: String,
    pub rmse_test: f64,
    pub rmse_los: Option<f64>,
    pub rmse_nlos: Option<f64>,
    pub rmse_transition: Option<f64>,
    pub fp_bits: u64,
    pub leakage: Option<f64>,
    pub t_fp_mean_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalRow {
    pub k: usize,
    #[serde(rename = "P_k_dBm")]
    pub p_k_dbm: f64,
    #[serde(rename = "T_FP")]
    pub t_fp: f64,
    #[serde(rename = "T_BP")]
    pub t_bp: f64,
    #[serde(rename = "T_step")]
    pub t_step: f64,
    #[serde(rename = "N")]
    pub n: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRow {
    pub n: u64,
    pub k_n: usize,
    #[serde(rename = "T_n")]
    pub t_n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyRow {
    pub pool_w: usize,
    pub pool_h: usize,
    pub variant: String,
    pub leakage: f64,
    pub max_distance: f64,
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(CliError::from)).collect()
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Reads `data` if given, otherwise generates the configured scenario.
pub fn load_or_generate(cfg: &ExperimentConfig, data: Option<&Path>) -> Result<Dataset> {
    let d = match data {
        Some(dir) => read_dataset(dir)?,
        None => generate(&cfg.scenario)?,
    };
    if (d.frame_height, d.frame_width) != (cfg.model.frame_height, cfg.model.frame_width) {
        return Err(CliError::Data(format!(
            "dataset frames are {}x{}, model expects {}x{}",
            d.frame_height, d.frame_width, cfg.model.frame_height, cfg.model.frame_width
        )));
    }
    Ok(d)
}

pub fn cmd_generate(cfg: &ExperimentConfig, out: &Path) -> Result<Dataset> {
    cfg.validate()?;
    let d = generate(&cfg.scenario)?;
    create_dir(out)?;
    write_dataset(out, &d)?;
    cfg.save(&out.join(CONFIG_FILE))?;
    Ok(d)
}

#[derive(Debug, Clone)]
pub struct TrainRun {
    pub outcome: TrainOutcome,
    pub checkpoint: Checkpoint,
    pub metrics: MetricsRow,
    pub records: Vec<PredictionRecord>,
}

/// Test-set predictions and the summary row for a trained model.
pub fn evaluate_checkpoint(ck: &Checkpoint, data: &Dataset) -> Result<(Vec<PredictionRecord>, MetricsRow)> {
    let cfg = &ck.experiment;
    let split = split_dataset(data.len(), cfg.split)?;
    let session = new_session(ck.model.clone(), &cfg.train, &cfg.channel, ck.standardizer)?;
    let records = train::evaluate(&session, data, split.test, &mut InProcessLink::default())?;
    let seg = segmented_rmse(&records)?;
    let leakage = if cfg.model.variant.uses_images() {
        match train::leakage(&ck.model, data, split.valid) {
            Ok(v) => Some(v),
            Err(CoreError::DegenerateLeakage) => Some(f64::INFINITY),
            Err(e) => return Err(e.into()),
        }
    } else {
        None
    };
    let fp_bits = inference_load(&cfg.model, &cfg.channel).fp_bits;
    let t_fp_mean_s = mean_fp_latency(ck, data, &split, fp_bits)?;
    let row = MetricsRow {
        pool_w: cfg.model.pool_width,
        pool_h: cfg.model.pool_height,
        variant: cfg.model.variant.name().into(),
        rmse_test: rmse(&records)?,
        rmse_los: seg.get(&Label::Los).copied(),
        rmse_nlos: seg.get(&Label::Nlos).copied(),
        rmse_transition: seg.get(&Label::Transition).copied(),
        fp_bits,
        leakage,
        t_fp_mean_s,
    };
    Ok((records, row))
}

fn mean_fp_latency(ck: &Checkpoint, data: &Dataset, split: &SplitSpec, fp_bits: u64) -> Result<f64> {
    let mut sum = 0.0;
    for k in split.test.iter() {
        let rate = shannon_rate(units::dbm_to_watts(data.power(k)), &ck.experiment.channel)?;
        sum += transmit_time(fp_bits, rate);
    }
    Ok(sum / split.test.len() as f64)
}

/// Trains one model and writes its run directory.
pub fn cmd_train(cfg: &ExperimentConfig, data: &Dataset, out: &Path, capture: Option<&Path>) -> Result<TrainRun> {
    cfg.validate()?;
    create_dir(out)?;
    cfg.save(&out.join(CONFIG_FILE))?;
    let split = split_dataset(data.len(), cfg.split)?;
    let model = SplitModel::init(&cfg.model, cfg.train.seed)?;
    let outcome = match capture {
        Some(dir) => {
            let mut link = CaptureLink::new(dir).map_err(|e| CliError::io(dir, e))?;
            let r = train::train(model, &cfg.channel, &cfg.train, data, &split, &mut link as &mut dyn Link);
            if let Some((path, e)) = link.take_error() {
                return Err(CliError::io(path, e));
            }
            r?
        }
        None => train::train(model, &cfg.channel, &cfg.train, data, &split, &mut InProcessLink::default())?,
    };
    let history: Vec<HistoryRow> = outcome
        .history
        .iter()
        .map(|h| HistoryRow {
            epoch: h.epoch,
            n: h.steps,
            t_n_s: h.elapsed_s,
            valid_rmse_db: h.valid_rmse_db,
            train_loss: h.train_loss,
        })
        .collect();
    write_csv(&out.join(HISTORY_FILE), &history)?;

    let ck = Checkpoint { experiment: cfg.clone(), standardizer: outcome.standardizer, model: outcome.model.clone() };
    checkpoint::save(&out.join(CHECKPOINT_FILE), &ck)?;
    let (records, metrics) = evaluate_checkpoint(&ck, data)?;
    let preds: Vec<PredictionRow> = records
        .iter()
        .map(|r| PredictionRow { k: r.k, p_hat_dbm: r.predicted_dbm, p_dbm: r.actual_dbm, label: r.label.name().into() })
        .collect();
    write_csv(&out.join(PREDICTIONS_FILE), &preds)?;
    write_csv(&out.join(METRICS_FILE), std::slice::from_ref(&metrics))?;
    Ok(TrainRun { outcome, checkpoint: ck, metrics, records })
}

/// Every square pool that divides both frame sides, smallest first.
pub fn default_pools(cfg: &ExperimentConfig) -> Vec<(usize, usize)> {
    let (h, w) = (cfg.model.frame_height, cfg.model.frame_width);
    (1..=h.min(w)).filter(|p| h % p == 0 && w % p == 0).map(|p| (p, p)).collect()
}

pub fn pool_dir(out: &Path, pool: (usize, usize)) -> PathBuf {
    out.join(format!("pool_{}x{}", pool.0, pool.1))
}

pub fn cmd_sweep_pool(cfg: &ExperimentConfig, pools: &[(usize, usize)], data: &Dataset, out: &Path) -> Result<Vec<MetricsRow>> {
    if pools.is_empty() {
        return Err(CliError::Usage("no pooling sizes to sweep".into()));
    }
    create_dir(out)?;
    cfg.save(&out.join(CONFIG_FILE))?;
    let mut rows = Vec::with_capacity(pools.len());
    for &(ph, pw) in pools {
        let mut c = cfg.clone();
        c.model = c.model.with_pool(ph, pw);
        let run = cmd_train(&c, data, &pool_dir(out, (ph, pw)), None)?;
        rows.push(run.metrics);
    }
    write_csv(&out.join(SWEEP_FILE), &rows)?;
    Ok(rows)
}

pub fn cmd_latency_report(cfg: &ExperimentConfig, data: &Dataset, out: &Path, steps: u64) -> Result<(Vec<IntervalRow>, Vec<StepRow>)> {
    cfg.validate()?;
    let tl = training_timeline(data, &cfg.model, &cfg.channel, cfg.train.accounting, cfg.train.batch_size)?;
    let intervals: Vec<IntervalRow> = tl
        .intervals
        .iter()
        .map(|i| IntervalRow { k: i.k, p_k_dbm: i.power_dbm, t_fp: i.t_fp, t_bp: i.t_bp, t_step: i.t_step, n: i.steps })
        .collect();
    let curve: Vec<StepRow> = tl.curve(steps)?.into_iter().map(|s| StepRow { n: s.n, k_n: s.k_n, t_n: s.t_n }).collect();
    create_dir(out)?;
    cfg.save(&out.join(CONFIG_FILE))?;
    write_csv(&out.join(INTERVALS_FILE), &intervals)?;
    write_csv(&out.join(STEPS_FILE), &curve)?;
    Ok((intervals, curve))
}

pub fn cmd_privacy_report(ck: &Checkpoint, data: &Dataset, out: &Path) -> Result<PrivacyRow> {
    let cfg = &ck.experiment;
    let split = split_dataset(data.len(), cfg.split)?;
    let (leakage, max_distance) = match train::leakage(&ck.model, data, split.valid) {
        Ok(l) => (l, 1.0 / l),
        Err(CoreError::DegenerateLeakage) => (f64::INFINITY, 0.0),
        Err(e) => return Err(e.into()),
    };
    let row = PrivacyRow {
        pool_w: cfg.model.pool_width,
        pool_h: cfg.model.pool_height,
        variant: cfg.model.variant.name().into(),
        leakage,
        max_distance,
    };
    create_dir(out)?;
    write_csv(&out.join(PRIVACY_FILE), std::slice::from_ref(&row))?;
    Ok(row)
}
