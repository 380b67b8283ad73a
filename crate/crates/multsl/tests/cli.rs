use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use multsl::checkpoint;
use multsl::experiment::{evaluate_checkpoint, read_csv, HistoryRow, MetricsRow};
use multsl_core::channel::ChannelParams;
use multsl_core::models::{ModelConfig, Variant};
use multsl_core::protocol::fp_payload_bits;

const TINY: &str = r#"
preset = "desk"

[scenario]
n_samples = 400

[train]
epochs = 2
"#;

fn multsl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_multsl")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = multsl(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn tiny_config(dir: &Path) -> PathBuf {
    let path = dir.join("tiny.toml");
    fs::write(&path, TINY).unwrap();
    path
}

#[test]
fn generate_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&["generate", "--seed", "1", "--deterministic", "--out", p(&a)]);
    ok(&["generate", "--seed", "1", "--deterministic", "--out", p(&b)]);
    for f in ["frames.bin", "powers.csv", "config.toml"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert!(!a.join("run.toml").exists());
    let powers = fs::read_to_string(a.join("powers.csv")).unwrap();
    assert_eq!(powers.lines().count(), 1 + 2000);
    assert!(powers.starts_with("k,P_dBm,label\n1,"));
}

#[test]
fn zero_pedestrians_give_all_los() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    fs::write(&cfg, "[scenario]\npedestrians = 0\nn_samples = 300\n").unwrap();
    let out = tmp.path().join("g");
    ok(&["generate", "--config", p(&cfg), "--out", p(&out)]);
    let powers = fs::read_to_string(out.join("powers.csv")).unwrap();
    assert!(powers.lines().skip(1).all(|l| l.ends_with(",LoS")));
    assert!(out.join("run.toml").exists());
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| multsl(args).status.code().unwrap();

    assert_eq!(code(&["train", "--variant", "cnn"]), 2);
    assert_eq!(code(&["train", "--pool", "3by3"]), 2);
    assert_eq!(code(&["frobnicate"]), 2);

    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, "[model]\nno_such_key = 1\n").unwrap();
    assert_eq!(code(&["generate", "--config", p(&bad)]), 3);
    fs::write(&bad, "[model]\npool_height = 3\n").unwrap();
    assert_eq!(code(&["generate", "--config", p(&bad)]), 3);

    assert_eq!(code(&["generate", "--config", p(&tmp.path().join("missing.toml"))]), 1);

    let data = tmp.path().join("d");
    ok(&["generate", "--config", p(&tiny_config(tmp.path())), "--out", p(&data)]);
    let frames = data.join("frames.bin");
    let mut bytes = fs::read(&frames).unwrap();
    bytes[100] ^= 0x10;
    fs::write(&frames, bytes).unwrap();
    assert_eq!(code(&["train", "--data", p(&data), "--out", p(&tmp.path().join("t"))]), 4);

    let empty = tmp.path().join("empty");
    fs::create_dir(&empty).unwrap();
    assert_eq!(code(&["report", p(&empty)]), 4);
}

#[test]
fn train_writes_a_reproducible_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(tmp.path());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        ok(&["train", "--config", p(&cfg), "--variant", "imgrf", "--pool", "4x4", "--seed", "3", "--deterministic", "--out", p(out)]);
    }
    for f in ["config.toml", "history.csv", "predictions.csv", "metrics.csv", "checkpoint.bin"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }

    // the resolved config alone reproduces the run
    let c = tmp.path().join("c");
    ok(&["train", "--config", p(&a.join("config.toml")), "--deterministic", "--out", p(&c)]);
    assert_eq!(fs::read(a.join("metrics.csv")).unwrap(), fs::read(c.join("metrics.csv")).unwrap());

    // a reloaded checkpoint gives the same test RMSE
    let ck = checkpoint::load(&a.join("checkpoint.bin")).unwrap();
    let data = multsl_core::scenario::generate(&ck.experiment.scenario).unwrap();
    let (_, row) = evaluate_checkpoint(&ck, &data).unwrap();
    let written: Vec<MetricsRow> = read_csv(&a.join("metrics.csv")).unwrap();
    assert_eq!(row.rmse_test.to_bits(), written[0].rmse_test.to_bits());

    let history: Vec<HistoryRow> = read_csv(&a.join("history.csv")).unwrap();
    assert_eq!(history.len(), 3);
    assert_eq!(history[0].n, 0);

    let priv_dir = tmp.path().join("priv");
    ok(&["privacy-report", "--checkpoint", p(&a), "--out", p(&priv_dir)]);
    let text = fs::read_to_string(priv_dir.join("privacy.csv")).unwrap();
    assert!(text.starts_with("pool_w,pool_h,variant,leakage,max_distance\n4,4,imgrf,"));
}

#[test]
fn rf_curve_uses_computation_time_only() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("rf");
    ok(&["train", "--config", p(&tiny_config(tmp.path())), "--variant", "rf", "--out", p(&out)]);
    let history: Vec<HistoryRow> = read_csv(&out.join("history.csv")).unwrap();
    let params = ChannelParams::default();
    let per_interval = (params.interval_s / params.t_comp_rf_s).floor() as u64;
    for h in &history[1..] {
        let full = (h.n - 1) / per_interval;
        let expect = full as f64 * params.interval_s + (h.n - full * per_interval) as f64 * params.t_comp_rf_s;
        assert!((h.t_n_s - expect).abs() < 1e-12, "n {}: {} vs {expect}", h.n, h.t_n_s);
    }
    let metrics: Vec<MetricsRow> = read_csv(&out.join("metrics.csv")).unwrap();
    assert_eq!(metrics[0].fp_bits, 0);
    assert_eq!(metrics[0].leakage, None);
}

#[test]
fn sweep_and_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sweep");
    ok(&["sweep-pool", "--config", p(&tiny_config(tmp.path())), "--pools", "1x1,2x2,4x4,8x8", "--deterministic", "--out", p(&out)]);
    let rows: Vec<MetricsRow> = read_csv(&out.join("sweep.csv")).unwrap();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        let cfg = ModelConfig::desk(Variant::ImgRf).with_pool(r.pool_h, r.pool_w);
        assert_eq!(r.fp_bits, fp_payload_bits(&cfg, 1, 32));
        assert!(out.join(format!("pool_{}x{}", r.pool_h, r.pool_w)).join("history.csv").is_file());
    }
    assert!(rows.windows(2).all(|w| w[1].fp_bits < w[0].fp_bits));

    let first = ok(&["report", p(&out)]);
    let listed = String::from_utf8(first.stdout).unwrap();
    for f in ["training_curve.svg", "sweep_rmse.svg", "sweep_fp_bits.svg", "sweep_leakage.svg"] {
        assert!(listed.contains(f), "{listed}");
    }
    let svg = fs::read(out.join("sweep_rmse.svg")).unwrap();
    ok(&["report", p(&out)]);
    assert_eq!(svg, fs::read(out.join("sweep_rmse.svg")).unwrap());
}

#[test]
fn latency_report_files() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("lat");
    ok(&["latency-report", "--pool", "4x4", "--steps", "500", "--out", p(&out)]);
    let steps = fs::read_to_string(out.join("latency_steps.csv")).unwrap();
    assert_eq!(steps.lines().count(), 501);
    assert!(steps.starts_with("n,k_n,T_n\n"));
    let intervals = fs::read_to_string(out.join("latency_intervals.csv")).unwrap();
    assert!(intervals.starts_with("k,P_k_dBm,T_FP,T_BP,T_step,N\n"));
    assert_eq!(intervals.lines().count(), 2001);
}
