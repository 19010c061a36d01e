use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Scenario;
use crate::learnfilter::two_norm;
use crate::persist::{read_csv, write_csv, PersistError};

/// One logged sample. Field order is the CSV column order.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LogRow {
    pub t: f64,
    pub rx: f64,
    pub ry: f64,
    pub rz: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
    pub u1: f64,
    pub u2: f64,
    pub u3: f64,
    pub u4: f64,
    pub d: f64,
    pub d_hat: f64,
    pub d_f: f64,
    pub e: f64,
    pub e_p: f64,
}

pub const LOG_COLUMNS: [&str; 19] = [
    "t", "rx", "ry", "rz", "x", "y", "z", "vx", "vy", "vz", "u1", "u2", "u3", "u4", "d", "d_hat",
    "d_f", "e", "e_p",
];

/// 1-based column of `name` in the exported log.
pub fn log_column(name: &str) -> Option<usize> {
    LOG_COLUMNS.iter().position(|c| *c == name).map(|i| i + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// 2-norm of the altitude error over all samples.
    pub ez_norm: f64,
    pub max_dev: f64,
    pub crashed: bool,
    /// Plateau mean of `|d̂ − d| / |d|`.
    pub plateau_err_dhat: Option<f64>,
    /// Plateau mean of `|d̂ + d̂ᶠ − d| / |d|`.
    pub plateau_err_comb: Option<f64>,
}

impl Metrics {
    /// The plateau is the set of samples where `|d|` attains its maximum.
    pub fn from_rows(rows: &[LogRow]) -> Self {
        let e: Vec<f64> = rows.iter().map(|r| r.e).collect();
        let peak = rows.iter().fold(0.0, |m: f64, r| m.max(r.d.abs()));
        let plateau: Vec<&LogRow> = rows
            .iter()
            .filter(|r| peak > 0.0 && r.d.abs() >= peak * (1.0 - 1e-9))
            .collect();
        let mean_rel = |f: &dyn Fn(&LogRow) -> f64| {
            (!plateau.is_empty()).then(|| {
                plateau
                    .iter()
                    .map(|r| (f(r) - r.d).abs() / r.d.abs())
                    .sum::<f64>()
                    / plateau.len() as f64
            })
        };
        Self {
            ez_norm: two_norm(&e),
            max_dev: e.iter().fold(0.0, |m: f64, v| m.max(v.abs())),
            crashed: rows.iter().any(|r| r.z < 0.0),
            plateau_err_dhat: mean_rel(&|r| r.d_hat),
            plateau_err_comb: mean_rel(&|r| r.d_hat + r.d_f),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub scenario: Scenario,
    pub rows: Vec<LogRow>,
    pub metrics: Metrics,
    pub diverged_at: Option<usize>,
    /// Class used by the prediction in the image-based case.
    pub predicted_class: Option<usize>,
}

impl ScenarioResult {
    pub fn file_name(&self) -> String {
        log_file_name(self.scenario.case.name(), self.scenario.class)
    }

    pub fn column(&self, f: impl Fn(&LogRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }
}

pub fn log_file_name(case: &str, class: usize) -> String {
    format!("{case}_class{class}.csv")
}

pub fn export_csv(res: &ScenarioResult, path: &Path) -> Result<(), PersistError> {
    write_csv(path, &res.rows)
}

pub fn import_csv(path: &Path) -> Result<Vec<LogRow>, PersistError> {
    read_csv(path)
}

/// One line of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub case: String,
    pub class: usize,
    pub predicted_class: Option<usize>,
    pub ez_norm: f64,
    pub max_dev: f64,
    pub crashed: bool,
    pub plateau_err_dhat: Option<f64>,
    pub plateau_err_comb: Option<f64>,
    pub diverged_at: Option<usize>,
}

impl SummaryRow {
    pub fn new(case: &str, class: usize, m: &Metrics) -> Self {
        Self {
            case: case.to_string(),
            class,
            predicted_class: None,
            ez_norm: m.ez_norm,
            max_dev: m.max_dev,
            crashed: m.crashed,
            plateau_err_dhat: m.plateau_err_dhat,
            plateau_err_comb: m.plateau_err_comb,
            diverged_at: None,
        }
    }
}

impl From<&ScenarioResult> for SummaryRow {
    fn from(r: &ScenarioResult) -> Self {
        Self {
            predicted_class: r.predicted_class,
            diverged_at: r.diverged_at,
            ..SummaryRow::new(r.scenario.case.name(), r.scenario.class, &r.metrics)
        }
    }
}
