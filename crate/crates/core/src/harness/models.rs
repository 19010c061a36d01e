use std::path::Path;

use super::Scenario;
use crate::config::Config;
use crate::learnfilter::{
    nominal_run, synthesize_l, LearningFilter, LoopBlocks, Synthesis, SynthesisError,
    SynthesisOptions,
};
use crate::perception::{
    cnn_train, generate_images, generate_lstm_dataset, lstm_train, split_dataset, CnnModel,
    CnnTrainOptions, CnnTrainReport, DatasetOptions, LstmDataset, LstmModel, LstmTrainOptions,
    LstmTrainReport, IMAGE_SIZE,
};
use crate::persist::{MatrixFile, PersistError};

pub const CNN_FILE: &str = "cnn.txt";
pub const LSTM_FILE: &str = "lstm.txt";
pub const L_FILE: &str = "L.txt";

/// Everything the image-based case needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Models {
    pub cnn: CnnModel,
    pub lstm: LstmModel,
    pub l: LearningFilter,
}

impl Models {
    pub fn save(&self, dir: &Path) -> Result<(), PersistError> {
        std::fs::create_dir_all(dir).map_err(|e| PersistError::io(dir, e))?;
        self.cnn.to_matrix_file().save(&dir.join(CNN_FILE))?;
        self.lstm.to_matrix_file().save(&dir.join(LSTM_FILE))?;
        self.l.save(&dir.join(L_FILE))
    }

    pub fn load(dir: &Path) -> Result<Self, PersistError> {
        Ok(Self {
            cnn: CnnModel::from_matrix_file(&MatrixFile::load(&dir.join(CNN_FILE))?)?,
            lstm: LstmModel::from_matrix_file(&MatrixFile::load(&dir.join(LSTM_FILE))?)?,
            l: LearningFilter::load(&dir.join(L_FILE))?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnnSettings {
    pub n_images: usize,
    pub n_filters: usize,
    pub train_frac: f64,
    pub val_frac: f64,
    pub seed: u64,
    pub train: CnnTrainOptions,
}

impl Default for CnnSettings {
    fn default() -> Self {
        Self {
            n_images: 200,
            n_filters: 8,
            train_frac: 0.7,
            val_frac: 0.15,
            seed: 0,
            train: CnnTrainOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnnOutcome {
    pub report: CnnTrainReport,
    pub test_acc: f64,
    pub n_test: usize,
}

/// Generates the image set, splits it, trains and scores on the held-out
/// part.
pub fn train_cnn(cfg: &Config, s: &CnnSettings) -> Result<CnnOutcome, crate::Error> {
    let images = generate_images(s.n_images, cfg.n_classes, s.seed)?;
    let (train, val, test) =
        split_dataset(&images, s.train_frac, s.val_frac, s.seed.wrapping_add(1));
    let model = CnnModel::init(IMAGE_SIZE, IMAGE_SIZE, s.n_filters, cfg.n_classes, s.seed);
    let report = cnn_train(&train, &val, model, &s.train)?;
    let test_acc = if test.is_empty() {
        f64::NAN
    } else {
        report.model.accuracy(&test)?
    };
    Ok(CnnOutcome {
        report,
        test_acc,
        n_test: test.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmSettings {
    pub hidden: usize,
    pub dataset: DatasetOptions,
    pub train: LstmTrainOptions,
}

impl Default for LstmSettings {
    fn default() -> Self {
        Self {
            hidden: 16,
            dataset: DatasetOptions::default(),
            train: LstmTrainOptions::default(),
        }
    }
}

/// Builds the dataset and trains on it. The model's input scale is the
/// largest dataset input.
pub fn train_lstm(
    cfg: &Config,
    s: &LstmSettings,
) -> Result<(LstmDataset, LstmTrainReport), crate::Error> {
    let ds = generate_lstm_dataset(cfg, &s.dataset)?;
    let mut model = LstmModel::init(s.hidden, s.train.seed);
    model.scale = ds.max_abs_input().max(f64::MIN_POSITIVE);
    model.downsample = s.dataset.downsample;
    let report = lstm_train(&ds, model, &s.train)?;
    Ok((ds, report))
}

/// Class whose nominal error is used to fit the learning filter.
pub const DESIGN_CLASS: usize = 3;

/// Nominal error of the default mission with the design-class load.
pub fn design_error(cfg: &Config) -> Result<Vec<f64>, crate::Error> {
    let sc = Scenario::new(DESIGN_CLASS.min(cfg.n_classes), super::Case::ImageDob);
    let blocks = LoopBlocks::from_config(cfg)?;
    let d = sc.disturbance(cfg)?;
    Ok(nominal_run(&sc.reference_z(cfg.dt), &d.samples, &blocks)?.e_p)
}

/// Synthesizes `L` on the design error. A non-contractive result still
/// carries the best filter found.
pub fn synthesize(
    cfg: &Config,
    opts: &SynthesisOptions,
) -> Result<Result<Synthesis, SynthesisError>, crate::Error> {
    let blocks = LoopBlocks::from_config(cfg)?;
    let ep = design_error(cfg)?;
    Ok(synthesize_l(&blocks, &ep, opts))
}

/// The best available filter, contractive or not.
pub fn best_filter(res: Result<Synthesis, SynthesisError>) -> Result<Synthesis, SynthesisError> {
    match res {
        Ok(s) => Ok(s),
        Err(SynthesisError::NotContractive { best }) => Ok(*best),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainSettings {
    pub cnn: CnnSettings,
    pub lstm: LstmSettings,
    pub synthesis: SynthesisOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModels {
    pub models: Models,
    pub cnn: CnnOutcome,
    pub dataset: LstmDataset,
    pub lstm: LstmTrainReport,
    pub synthesis: Synthesis,
}

/// Trains both networks and synthesizes `L`.
pub fn train_all(cfg: &Config, s: &TrainSettings) -> Result<TrainedModels, crate::Error> {
    let cnn = train_cnn(cfg, &s.cnn)?;
    let (dataset, lstm) = train_lstm(cfg, &s.lstm)?;
    let synthesis = best_filter(synthesize(cfg, &s.synthesis)?)?;
    Ok(TrainedModels {
        models: Models {
            cnn: cnn.report.model.clone(),
            lstm: lstm.model.clone(),
            l: synthesis.filter.clone(),
        },
        cnn,
        dataset,
        lstm,
        synthesis,
    })
}
