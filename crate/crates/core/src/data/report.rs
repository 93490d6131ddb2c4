use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{History, Metrics};

/// Deterministic outcome of a run; identical inputs give identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub dataset: String,
    /// Keyed by node set: `train`, `val`, `test`.
    pub metrics: BTreeMap<String, Metrics>,
    pub best_epoch: usize,
    pub best_val_acc: f64,
    pub config: serde_json::Value,
}

/// Wall-clock measurements, kept apart from [`RunReport`] so that the latter
/// stays reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub total_seconds: f64,
    pub mean_epoch_seconds: f64,
    pub epoch_seconds: Vec<f64>,
    #[serde(default)]
    pub extra: BTreeMap<String, f64>,
}

impl TimingReport {
    pub fn from_history(h: &History) -> Self {
        let epoch_seconds: Vec<f64> = h.epochs.iter().map(|r| r.seconds).collect();
        let mean = if epoch_seconds.is_empty() {
            0.0
        } else {
            epoch_seconds.iter().sum::<f64>() / epoch_seconds.len() as f64
        };
        Self {
            total_seconds: h.total_seconds,
            mean_epoch_seconds: mean,
            epoch_seconds,
            extra: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReportPaths {
    pub metrics: PathBuf,
    pub history: PathBuf,
    pub timing: PathBuf,
}

/// Writes `metrics.json`, `history.csv` and `timing.json` into `dir`.
pub fn write_report(dir: &Path, report: &RunReport, history: &History, timing: &TimingReport) -> Result<ReportPaths> {
    std::fs::create_dir_all(dir)?;
    let paths = ReportPaths {
        metrics: dir.join("metrics.json"),
        history: dir.join("history.csv"),
        timing: dir.join("timing.json"),
    };
    std::fs::write(&paths.metrics, serde_json::to_string_pretty(report)? + "\n")?;
    std::fs::write(&paths.history, history.to_csv())?;
    std::fs::write(&paths.timing, serde_json::to_string_pretty(timing)? + "\n")?;
    Ok(paths)
}

pub fn read_metrics(path: &Path) -> Result<RunReport> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}
