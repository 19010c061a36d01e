//! Mission scenarios, the closed-loop flight simulation, the three-case
//! comparison, logs, metrics and plot scripts.

mod cases;
mod log;
mod models;
mod plot;
mod scenario;
mod sim;

pub use cases::{compare_all_classes, compare_cases, feedforward, run_case, Feedforward};
pub use log::{
    export_csv, import_csv, log_column, log_file_name, LogRow, Metrics, ScenarioResult, SummaryRow,
    LOG_COLUMNS,
};
pub use models::{
    best_filter, design_error, synthesize, train_all, train_cnn, train_lstm, CnnOutcome,
    CnnSettings, LstmSettings, Models, TrainSettings, TrainedModels, CNN_FILE, DESIGN_CLASS,
    LSTM_FILE, L_FILE,
};
pub use plot::{emit_plot_script, find_logs, plot_script, report, write_results, SUMMARY_FILE};
pub use scenario::{quintic, Case, Scenario};
pub use sim::{fly, hover_response, Flight, FlightInputs, THRUST_LIMIT, TORQUE_LIMIT};

use thiserror::Error;

use crate::error::ErrorCategory;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("the image-based case needs trained models and a learning filter")]
    MissingModels,
    #[error("signal {signal} has {got} samples, expected {expected}")]
    LengthMismatch {
        signal: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("simulation diverged after step {step}")]
    Diverged { step: usize },
    #[error("no simulation logs in {0}")]
    NoLogs(String),
}

impl HarnessError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            HarnessError::InvalidScenario(_) | HarnessError::MissingModels => ErrorCategory::Config,
            HarnessError::LengthMismatch { .. } | HarnessError::Diverged { .. } => {
                ErrorCategory::Numerical
            }
            HarnessError::NoLogs(_) => ErrorCategory::Io,
        }
    }
}
