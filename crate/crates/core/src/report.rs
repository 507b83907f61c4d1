//! Per-run output files.
//!
//! | file             | columns                                                                                                    |
//! |------------------|------------------------------------------------------------------------------------------------------------|
//! | `summary.json`   | seed, config echo, totals, per-device summary, utilization mean/std                                        |
//! | `timeseries.csv` | `step,arrivals,edge_accepted,edge_rejected,cloud_redirected,dropped,tokens_to_cloud,cloud_tokens,cloud_cost_cents` |
//! | `devices.csv`    | `step,device,window_used,busy_slots,utilization`                                                           |

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::{DeviceSummary, RunReport, SimConfig, Totals};

pub const SUMMARY_FILE: &str = "summary.json";
pub const TIMESERIES_FILE: &str = "timeseries.csv";
pub const DEVICES_FILE: &str = "devices.csv";

pub const TIMESERIES_COLUMNS: [&str; 9] = [
    "step",
    "arrivals",
    "edge_accepted",
    "edge_rejected",
    "cloud_redirected",
    "dropped",
    "tokens_to_cloud",
    "cloud_tokens",
    "cloud_cost_cents",
];
pub const DEVICES_COLUMNS: [&str; 5] =
    ["step", "device", "window_used", "busy_slots", "utilization"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub seed: u64,
    pub config: SimConfig,
    pub totals: Totals,
    pub devices: Vec<DeviceSummary>,
    pub utilization_mean: f64,
    pub utilization_std: f64,
}

impl From<&RunReport> for Summary {
    fn from(r: &RunReport) -> Self {
        Summary {
            seed: r.config.seed,
            config: r.config.clone(),
            totals: r.totals.clone(),
            devices: r.devices.clone(),
            utilization_mean: r.utilization_mean,
            utilization_std: r.utilization_std,
        }
    }
}

fn csv_err(e: csv::Error) -> io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => e,
        other => io::Error::other(format!("{other:?}")),
    }
}

pub fn timeseries_csv<W: io::Write>(report: &RunReport, out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TIMESERIES_COLUMNS).map_err(csv_err)?;
    for s in &report.steps {
        w.write_record(&[
            s.step.to_string(),
            s.arrivals.to_string(),
            s.edge_accepted.to_string(),
            s.edge_rejected.to_string(),
            s.cloud_redirected.to_string(),
            s.dropped.to_string(),
            s.tokens_to_cloud.to_string(),
            s.cloud_tokens.to_string(),
            s.cloud_cost_cents.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()
}

pub fn devices_csv<W: io::Write>(report: &RunReport, out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DEVICES_COLUMNS).map_err(csv_err)?;
    for s in &report.steps {
        for (d, sample) in report.config.devices.iter().zip(&s.devices) {
            let util = sample.window_used as f64 / d.window_token_capacity as f64;
            w.write_record(&[
                s.step.to_string(),
                d.id.clone(),
                sample.window_used.to_string(),
                sample.busy_slots.to_string(),
                util.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()
}

/// Writes the three run files into `dir`, creating it if needed.
pub fn emit_summary(report: &RunReport, dir: impl AsRef<Path>) -> io::Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;

    let summary_path = dir.join(SUMMARY_FILE);
    let json = serde_json::to_string_pretty(&Summary::from(report)).map_err(io::Error::other)?;
    fs::write(&summary_path, json + "\n")?;

    let ts_path = dir.join(TIMESERIES_FILE);
    timeseries_csv(report, fs::File::create(&ts_path)?)?;

    let dev_path = dir.join(DEVICES_FILE);
    devices_csv(report, fs::File::create(&dev_path)?)?;

    Ok(vec![summary_path, ts_path, dev_path])
}

pub fn read_summary(path: impl AsRef<Path>) -> io::Result<Summary> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}
