//! Image-based disturbance prediction: synthetic box images, a small CNN
//! weight classifier, disturbance profiles, and an LSTM that maps an
//! output-disturbance profile to the input disturbance the observer sees.

mod cnn;
mod dataset;
mod images;
mod lstm;
mod pipeline;
mod profile;

pub use cnn::{cnn_train, max_pool_2x2, relu, softmax, CnnModel, CnnTrainOptions, CnnTrainReport};
pub use dataset::{
    dataset_pair, generate_lstm_dataset, sample_profile, DatasetOptions, LstmDataset, SkippedSample,
};
pub use images::{generate_images, render_box, split_dataset, BoxImage, AUGMENT_ANGLE, IMAGE_SIZE};
pub use lstm::{lstm_train, LstmModel, LstmTrainOptions, LstmTrainReport};
pub use pipeline::{
    downsample, predict_for_class, predict_input_disturbance, upsample, Prediction,
};
pub use profile::{form_output_profile, trapezoid, DisturbanceProfile, DEFAULT_EDGES};

use thiserror::Error;

use crate::error::ErrorCategory;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PerceptionError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("training diverged at epoch {epoch}; {hint}")]
    Diverged { epoch: usize, hint: &'static str },
    #[error("dataset generation failed: {0}")]
    Dataset(String),
}

impl PerceptionError {
    pub fn category(&self) -> ErrorCategory {
        match self {
            PerceptionError::InvalidArgument(_) | PerceptionError::Shape(_) => {
                ErrorCategory::Config
            }
            PerceptionError::Diverged { .. } | PerceptionError::Dataset(_) => {
                ErrorCategory::Training
            }
        }
    }
}
