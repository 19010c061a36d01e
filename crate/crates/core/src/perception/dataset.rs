use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{downsample, DisturbanceProfile, PerceptionError, DEFAULT_EDGES};
use crate::config::Config;
use crate::harness::hover_response;
use crate::par::{self, Parallelism};
use crate::persist::{read_csv, write_csv, PersistError};

/// Paired (output disturbance, recovered input disturbance) sequences at
/// the model rate.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LstmDataset {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
    pub downsample: usize,
    pub skipped: Vec<SkippedSample>,
}

/// A generated profile whose simulation failed.
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedSample {
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    sample: usize,
    step: usize,
    input: f64,
    target: f64,
}

impl LstmDataset {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn max_abs_input(&self) -> f64 {
        self.inputs
            .iter()
            .flatten()
            .fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    /// Long format: one row per (sample, step).
    pub fn save_csv(&self, path: &Path) -> Result<(), PersistError> {
        let rows: Vec<Row> = self
            .inputs
            .iter()
            .zip(&self.targets)
            .enumerate()
            .flat_map(|(sample, (x, y))| {
                x.iter()
                    .zip(y)
                    .enumerate()
                    .map(move |(step, (&input, &target))| Row {
                        sample,
                        step,
                        input,
                        target,
                    })
            })
            .collect();
        write_csv(path, &rows)
    }

    pub fn load_csv(path: &Path, downsample: usize) -> Result<Self, PersistError> {
        let rows: Vec<Row> = read_csv(path)?;
        let mut ds = LstmDataset {
            downsample,
            ..Self::default()
        };
        for r in rows {
            if r.sample == ds.inputs.len() {
                ds.inputs.push(Vec::new());
                ds.targets.push(Vec::new());
            }
            let ok = r.sample + 1 == ds.inputs.len() && r.step == ds.inputs[r.sample].len();
            if !ok {
                return Err(PersistError::Csv {
                    path: path.display().to_string(),
                    msg: format!("rows out of order at sample {} step {}", r.sample, r.step),
                });
            }
            ds.inputs[r.sample].push(r.input);
            ds.targets[r.sample].push(r.target);
        }
        Ok(ds)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetOptions {
    pub n: usize,
    pub seed: u64,
    pub downsample: usize,
    pub duration: f64,
    /// Half-width of the uniform jitter on each profile edge (s).
    pub edge_jitter: f64,
    pub parallelism: Parallelism,
}

impl Default for DatasetOptions {
    fn default() -> Self {
        Self {
            n: 1000,
            seed: 0,
            downsample: 10,
            duration: 21.0,
            edge_jitter: 0.2,
            parallelism: Parallelism::default(),
        }
    }
}

/// The `index`-th random profile: plateau scaled by `U(0.5, n_classes + 0.5)`
/// and jittered edges. Each index draws from its own stream.
pub fn sample_profile(
    cfg: &Config,
    opts: &DatasetOptions,
    index: usize,
) -> Result<DisturbanceProfile, PerceptionError> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(index as u64);
    let amp = rng.random_range(0.5..cfg.n_classes as f64 + 0.5);
    let mut edges = DEFAULT_EDGES;
    if opts.edge_jitter > 0.0 {
        for e in edges.iter_mut() {
            *e += rng.random_range(-opts.edge_jitter..opts.edge_jitter);
        }
    }
    DisturbanceProfile::new(cfg.dt, opts.duration, amp * cfg.base_plateau, edges)
}

/// Flies the hovering drone with the conventional observer under `profile`
/// and pairs the downsampled profile with the observer estimate one sample
/// later.
pub fn dataset_pair(
    profile: &DisturbanceProfile,
    cfg: &Config,
    stride: usize,
) -> Result<(Vec<f64>, Vec<f64>), crate::Error> {
    let mut d = profile.samples.clone();
    d.push(0.0);
    let d_hat = hover_response(cfg, &d)?;
    let input = downsample(&profile.samples, stride);
    let target = (0..input.len()).map(|j| d_hat[j * stride + 1]).collect();
    Ok((input, target))
}

/// Generates `opts.n` pairs. Samples whose simulation fails are recorded
/// in `skipped` and replaced by later indices.
pub fn generate_lstm_dataset(
    cfg: &Config,
    opts: &DatasetOptions,
) -> Result<LstmDataset, crate::Error> {
    if opts.downsample == 0 {
        return Err(PerceptionError::InvalidArgument("downsample must be positive".into()).into());
    }
    let mut ds = LstmDataset {
        downsample: opts.downsample,
        ..LstmDataset::default()
    };
    let mut next = 0;
    while ds.len() < opts.n {
        let need = opts.n - ds.len();
        let start = next;
        let results = par::map_range(opts.parallelism, need, |j| {
            let p = sample_profile(cfg, opts, start + j)?;
            dataset_pair(&p, cfg, opts.downsample)
        });
        next += need;
        for (j, r) in results.into_iter().enumerate() {
            match r {
                Ok((x, y)) => {
                    ds.inputs.push(x);
                    ds.targets.push(y);
                }
                Err(e) => ds.skipped.push(SkippedSample {
                    index: start + j,
                    reason: e.to_string(),
                }),
            }
        }
        if ds.skipped.len() > opts.n {
            return Err(PerceptionError::Dataset(format!(
                "{} of {next} samples diverged",
                ds.skipped.len()
            ))
            .into());
        }
    }
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_profile_zero_target() {
        let cfg = Config::default();
        let p = DisturbanceProfile::base(cfg.dt, 21.0, 0.0).unwrap();
        let (x, y) = dataset_pair(&p, &cfg, 10).unwrap();
        assert_eq!(x.len(), 211);
        assert!(x.iter().chain(&y).all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn profiles_are_reproducible_per_index() {
        let cfg = Config::default();
        let o = DatasetOptions::default();
        assert_eq!(
            sample_profile(&cfg, &o, 7).unwrap(),
            sample_profile(&cfg, &o, 7).unwrap()
        );
        assert_ne!(
            sample_profile(&cfg, &o, 7).unwrap(),
            sample_profile(&cfg, &o, 8).unwrap()
        );
    }

    #[test]
    fn csv_round_trip() {
        let ds = LstmDataset {
            inputs: vec![vec![0.0, -1.5, 0.1], vec![2.0, 1.0 / 3.0, 0.0]],
            targets: vec![vec![0.0, -1.4, 0.2], vec![1.9, 0.3, -1e-17]],
            downsample: 10,
            skipped: Vec::new(),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.csv");
        ds.save_csv(&path).unwrap();
        assert_eq!(LstmDataset::load_csv(&path, 10).unwrap(), ds);
    }
}
