//! Turns the CSVs of a run or sweep directory into SVG plots.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};
use crate::experiment::{HISTORY_FILE, INTERVALS_FILE, STEPS_FILE, SWEEP_FILE};
use crate::plot::{Plot, Series};

/// A CSV held as header names plus string records.
#[derive(Debug)]
pub struct Table {
    path: PathBuf,
    headers: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let headers = r.headers()?.iter().map(str::to_owned).collect();
        let rows = r.records().collect::<Result<Vec<_>, _>>()?;
        if rows.is_empty() {
            return Err(CliError::Data(format!("{}: empty input, no data rows", path.display())));
        }
        Ok(Table { path: path.to_path_buf(), headers, rows })
    }

    fn index(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Data(format!("{}: missing column `{name}`", self.path.display())))
    }

    /// Column as numbers; empty cells become NaN and are skipped by plots.
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self.index(name)?;
        self.rows
            .iter()
            .map(|r| {
                let cell = r.get(i).unwrap_or("").trim();
                if cell.is_empty() {
                    return Ok(f64::NAN);
                }
                cell.parse::<f64>().map_err(|_| {
                    CliError::Data(format!("{}: column `{name}` holds non-numeric {cell:?}", self.path.display()))
                })
            })
            .collect()
    }

    pub fn text_column(&self, name: &str) -> Result<Vec<String>> {
        let i = self.index(name)?;
        Ok(self.rows.iter().map(|r| r.get(i).unwrap_or("").to_owned()).collect())
    }
}

fn xy(t: &Table, x: &str, y: &str) -> Result<Vec<(f64, f64)>> {
    Ok(t.column(x)?.into_iter().zip(t.column(y)?).collect())
}

fn history_plot(runs: &[(String, Table)]) -> Result<Plot> {
    let series = runs
        .iter()
        .map(|(name, t)| Ok(Series { name: name.clone(), points: xy(t, "T_n_s", "valid_rmse_db")? }))
        .collect::<Result<_>>()?;
    Ok(Plot {
        title: "Validation RMSE during training".into(),
        x_label: "elapsed training time T_n [s]".into(),
        y_label: "validation RMSE [dB]".into(),
        series,
        x_ticks: None,
    })
}

fn sweep_plots(t: &Table) -> Result<Vec<(String, Plot)>> {
    let labels: Vec<String> = t
        .text_column("pool_h")?
        .into_iter()
        .zip(t.text_column("pool_w")?)
        .map(|(h, w)| format!("{h}x{w}"))
        .collect();
    let ticks: Vec<(f64, String)> = labels.iter().enumerate().map(|(i, l)| (i as f64, l.clone())).collect();
    let against = |col: &str| -> Result<Vec<(f64, f64)>> {
        Ok(t.column(col)?.into_iter().enumerate().map(|(i, v)| (i as f64, v)).collect())
    };
    let mk = |title: &str, y_label: &str, col: &str| -> Result<Plot> {
        Ok(Plot {
            title: title.into(),
            x_label: "pooling dimension".into(),
            y_label: y_label.into(),
            series: vec![Series { name: col.into(), points: against(col)? }],
            x_ticks: Some(ticks.clone()),
        })
    };
    Ok(vec![
        ("sweep_rmse.svg".into(), mk("Test RMSE vs pooling", "test RMSE [dB]", "rmse_test")?),
        ("sweep_fp_bits.svg".into(), mk("FP payload vs pooling", "FP payload [bit]", "fp_bits")?),
        ("sweep_latency.svg".into(), mk("Mean FP uplink latency vs pooling", "T_FP [s]", "t_fp_mean_s")?),
        ("sweep_leakage.svg".into(), mk("Privacy leakage vs pooling", "leakage", "leakage")?),
    ])
}

/// Writes every plot the directory's CSVs support and returns the files.
/// History files are collected from `dir` and its immediate subdirectories.
pub fn cmd_report(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut plots: Vec<(String, Plot)> = Vec::new();

    let mut runs = Vec::new();
    if dir.join(HISTORY_FILE).is_file() {
        runs.push(("run".to_owned(), Table::read(&dir.join(HISTORY_FILE))?));
    }
    let mut subdirs: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(HISTORY_FILE).is_file())
        .collect();
    subdirs.sort();
    for sub in subdirs {
        let name = sub.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        runs.push((name, Table::read(&sub.join(HISTORY_FILE))?));
    }
    if !runs.is_empty() {
        plots.push(("training_curve.svg".into(), history_plot(&runs)?));
    }
    if dir.join(SWEEP_FILE).is_file() {
        plots.extend(sweep_plots(&Table::read(&dir.join(SWEEP_FILE))?)?);
    }
    if dir.join(STEPS_FILE).is_file() {
        let t = Table::read(&dir.join(STEPS_FILE))?;
        plots.push((
            "latency_steps.svg".into(),
            Plot {
                title: "Elapsed time per gradient step".into(),
                x_label: "step n".into(),
                y_label: "T_n [s]".into(),
                series: vec![Series { name: "T_n".into(), points: xy(&t, "n", "T_n")? }],
                x_ticks: None,
            },
        ));
    }
    if dir.join(INTERVALS_FILE).is_file() {
        let t = Table::read(&dir.join(INTERVALS_FILE))?;
        plots.push((
            "latency_intervals.svg".into(),
            Plot {
                title: "Step duration per interval".into(),
                x_label: "interval k".into(),
                y_label: "T_step [s]".into(),
                series: vec![
                    Series { name: "T_step".into(), points: xy(&t, "k", "T_step")? },
                    Series { name: "T_FP".into(), points: xy(&t, "k", "T_FP")? },
                ],
                x_ticks: None,
            },
        ));
    }
    if plots.is_empty() {
        return Err(CliError::Data(format!("{}: no CSV to plot", dir.display())));
    }
    let mut written = Vec::with_capacity(plots.len());
    for (name, plot) in plots {
        let path = dir.join(name);
        fs::write(&path, plot.to_svg()).map_err(|e| CliError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
