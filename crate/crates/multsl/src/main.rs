//! `multsl` command-line front end. Run `multsl --help` for the subcommands.
//!
//! Exit codes: 0 success, 1 IO, 2 usage, 3 config, 4 data, 5 protocol.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use multsl::checkpoint::{self, CHECKPOINT_FILE};
use multsl::config::{parse_pool, ExperimentConfig};
use multsl::error::{exit, CliError, Result};
use multsl::experiment::{self, load_or_generate};
use multsl::report::cmd_report;
use multsl_core::models::Variant;
use multsl_core::scenario::SplitMode;

#[derive(Parser)]
#[command(name = "multsl", version, about = "Multimodal split learning for mmWave received power prediction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML experiment config; unspecified keys come from its preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for the scenario, the initial weights and the batch order.
    #[arg(long)]
    seed: Option<u64>,
    /// Index split: paper or disjoint.
    #[arg(long)]
    split: Option<String>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Skip run.toml, the only file that holds wall-clock data.
    #[arg(long)]
    deterministic: bool,
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// rf, img or imgrf.
    #[arg(long)]
    variant: Option<String>,
    /// UE pooling window as HxW, e.g. 4x4.
    #[arg(long)]
    pool: Option<String>,
    /// Dataset directory written by `generate`; otherwise the scenario is generated in memory.
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic depth-frame and received-power dataset.
    Generate {
        #[command(flatten)]
        common: Common,
    },
    /// Train one variant and write history, checkpoint, predictions and metrics.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
        /// Write every FP and BP message to this directory.
        #[arg(long)]
        capture: Option<PathBuf>,
    },
    /// Train one model per pooling size and write sweep.csv.
    SweepPool {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
        /// Comma-separated HxW list; defaults to every square divisor of the frame.
        #[arg(long)]
        pools: Option<String>,
    },
    /// Render SVG plots from the CSVs in a directory.
    Report {
        /// Directory holding run or sweep CSVs.
        dir: PathBuf,
    },
    /// Write the per-interval step durations and the T_n curve.
    LatencyReport {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
        /// Number of steps in the T_n curve.
        #[arg(long, default_value_t = 1000)]
        steps: u64,
    },
    /// Compute the privacy leakage of a trained checkpoint.
    PrivacyReport {
        #[command(flatten)]
        common: Common,
        /// Checkpoint file or run directory.
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: Option<PathBuf>,
    },
}

fn resolve(common: &Common, model: Option<&ModelArgs>) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::desk(),
    };
    if let Some(seed) = common.seed {
        cfg.set_seed(seed);
    }
    if let Some(s) = &common.split {
        cfg.split = SplitMode::parse(s).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    if let Some(m) = model {
        if let Some(v) = &m.variant {
            cfg.model.variant = Variant::parse(v).map_err(|e| CliError::Usage(e.to_string()))?;
        }
        if let Some(p) = &m.pool {
            let (h, w) = parse_pool(p)?;
            cfg.model = cfg.model.with_pool(h, w);
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_run_info(common: &Common, command: &str) -> Result<()> {
    if common.deterministic {
        return Ok(());
    }
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let text = format!(
        "command = \"{command}\"\nversion = \"{}\"\nfinished_unix_s = {secs}\n",
        env!("CARGO_PKG_VERSION")
    );
    let path = common.out.join("run.toml");
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))
}

fn checkpoint_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join(CHECKPOINT_FILE)
    } else {
        p.to_path_buf()
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { common } => {
            let cfg = resolve(&common, None)?;
            let d = experiment::cmd_generate(&cfg, &common.out)?;
            write_run_info(&common, "generate")?;
            println!("wrote {} samples to {}", d.len(), common.out.display());
        }
        Command::Train { common, model, capture } => {
            let cfg = resolve(&common, Some(&model))?;
            let data = load_or_generate(&cfg, model.data.as_deref())?;
            let run = experiment::cmd_train(&cfg, &data, &common.out, capture.as_deref())?;
            write_run_info(&common, "train")?;
            println!(
                "{} pool {}x{}: best epoch {}, test RMSE {:.4} dB",
                run.metrics.variant, run.metrics.pool_h, run.metrics.pool_w, run.outcome.best_epoch, run.metrics.rmse_test
            );
        }
        Command::SweepPool { common, model, pools } => {
            let cfg = resolve(&common, Some(&model))?;
            let pools = match pools {
                Some(list) => list.split(',').map(|p| parse_pool(p.trim())).collect::<Result<Vec<_>>>()?,
                None => experiment::default_pools(&cfg),
            };
            let data = load_or_generate(&cfg, model.data.as_deref())?;
            let rows = experiment::cmd_sweep_pool(&cfg, &pools, &data, &common.out)?;
            write_run_info(&common, "sweep-pool")?;
            for r in rows {
                println!("pool {}x{}: test RMSE {:.4} dB, FP {} bit", r.pool_h, r.pool_w, r.rmse_test, r.fp_bits);
            }
        }
        Command::Report { dir } => {
            for f in cmd_report(&dir)? {
                println!("{}", f.display());
            }
        }
        Command::LatencyReport { common, model, steps } => {
            let cfg = resolve(&common, Some(&model))?;
            let data = load_or_generate(&cfg, model.data.as_deref())?;
            let (_, curve) = experiment::cmd_latency_report(&cfg, &data, &common.out, steps)?;
            write_run_info(&common, "latency-report")?;
            if let Some(last) = curve.last() {
                println!("T_n at n = {}: {:.6} s", last.n, last.t_n);
            }
        }
        Command::PrivacyReport { common, checkpoint, data } => {
            let ck = checkpoint::load(&checkpoint_path(&checkpoint))?;
            let d = load_or_generate(&ck.experiment, data.as_deref())?;
            let row = experiment::cmd_privacy_report(&ck, &d, &common.out)?;
            write_run_info(&common, "privacy-report")?;
            println!("leakage {}", row.leakage);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE as u8 } else { exit::OK as u8 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
