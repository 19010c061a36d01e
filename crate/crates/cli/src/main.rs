use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use idob::config::Config;
use idob::harness::{
    best_filter, compare_all_classes, report, run_case, synthesize, train_all, train_cnn,
    train_lstm, write_results, Case, CnnSettings, HarnessError, LstmSettings, Models, Scenario,
    SummaryRow, TrainSettings, CNN_FILE, LSTM_FILE, L_FILE,
};
use idob::learnfilter::{SynthesisError, SynthesisOptions};
use idob::par::Parallelism;
use idob::perception::{DatasetOptions, LstmTrainOptions, PerceptionError};
use idob::Error;

#[derive(Parser)]
#[command(
    name = "idob",
    version,
    about = "Image-based disturbance observer for a delivery quadrotor"
)]
struct Cli {
    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum CaseArg {
    Nodob,
    Cdob,
    Idob,
}

impl From<CaseArg> for Case {
    fn from(c: CaseArg) -> Self {
        match c {
            CaseArg::Nodob => Case::NoDob,
            CaseArg::Cdob => Case::ConventionalDob,
            CaseArg::Idob => Case::ImageDob,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Fly one case of the delivery mission.
    Simulate {
        #[arg(long, value_enum)]
        case: CaseArg,
        #[arg(long)]
        class: usize,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Directory with cnn.txt, lstm.txt and L.txt; trained on the fly if absent.
        #[arg(long)]
        models: Option<PathBuf>,
        /// Use this class for the prediction instead of classifying the image.
        #[arg(long)]
        predicted_class: Option<usize>,
    },
    /// Fly all three cases for every class and write the comparison table.
    Compare {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        models: Option<PathBuf>,
    },
    /// Train the weight classifier on synthetic box images.
    TrainCnn {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        epochs: usize,
        #[arg(long, default_value_t = 0.01)]
        lr: f64,
        /// Must be 1: the classifier is trained by per-image SGD.
        #[arg(long, default_value_t = 1)]
        batch: usize,
        #[arg(long, default_value_t = 200)]
        images: usize,
        #[arg(long, default_value = CNN_FILE)]
        out: PathBuf,
    },
    /// Generate the disturbance dataset and train the LSTM.
    TrainLstm {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 40)]
        epochs: usize,
        #[arg(long, default_value_t = 0.01)]
        lr: f64,
        #[arg(long, default_value_t = 256)]
        batch: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value = LSTM_FILE)]
        out: PathBuf,
        /// Also write the dataset as CSV.
        #[arg(long)]
        dataset_out: Option<PathBuf>,
        /// Write the RMSE curve as CSV.
        #[arg(long)]
        curve_out: Option<PathBuf>,
    },
    /// Design the learning filter and write it as a matrix file.
    SynthesizeL {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        taps: Option<usize>,
        #[arg(long, default_value = L_FILE)]
        out: PathBuf,
        /// Exit successfully even when the peak-gain bound is not met.
        #[arg(long)]
        accept_best: bool,
    },
    /// Recompute metrics and plot scripts from the logs in a directory.
    Report {
        #[arg(long = "in")]
        dir: PathBuf,
    },
}

fn load_config(path: Option<&Path>) -> Result<Config, Error> {
    let cfg = match path {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn models_for(
    cfg: &Config,
    dir: Option<&Path>,
    seed: u64,
    mode: Parallelism,
) -> Result<Models, Error> {
    if let Some(d) = dir {
        return Ok(Models::load(d)?);
    }
    eprintln!("no --models given; training classifier, LSTM and learning filter (seed {seed})");
    let mut s = TrainSettings::default();
    s.cnn.seed = seed;
    s.lstm.dataset.seed = seed;
    s.lstm.dataset.parallelism = mode;
    s.lstm.train.seed = seed;
    s.lstm.train.parallelism = mode;
    s.synthesis.parallelism = mode;
    Ok(train_all(cfg, &s)?.models)
}

fn print_summary(rows: &[SummaryRow]) {
    println!(
        "{:<6} {:>5} {:>10} {:>10} {:>7} {:>10} {:>10}",
        "case", "class", "ez_norm", "max_dev", "crashed", "err_dhat", "err_comb"
    );
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
    for r in rows {
        println!(
            "{:<6} {:>5} {:>10.5} {:>10.5} {:>7} {:>10} {:>10}",
            r.case,
            r.class,
            r.ez_norm,
            r.max_dev,
            r.crashed,
            opt(r.plateau_err_dhat),
            opt(r.plateau_err_comb)
        );
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let mode = if cli.sequential {
        Parallelism::Sequential
    } else {
        Parallelism::Parallel
    };
    match cli.command {
        Command::Simulate {
            case,
            class,
            config,
            seed,
            out,
            models,
            predicted_class,
        } => {
            let cfg = load_config(config.as_deref())?;
            let case = Case::from(case);
            let sc = Scenario {
                seed,
                predicted_class,
                ..Scenario::new(class, case)
            };
            sc.validate(cfg.n_classes)?;
            let models = match case {
                Case::ImageDob => Some(models_for(&cfg, models.as_deref(), seed, mode)?),
                _ => None,
            };
            let res = run_case(&sc, &cfg, models.as_ref())?;
            write_results(&out, std::slice::from_ref(&res))?;
            print_summary(&[SummaryRow::from(&res)]);
            if let Some(step) = res.diverged_at {
                eprintln!("warning: simulation diverged after step {step}");
            }
            println!("wrote {}", out.join(res.file_name()).display());
        }
        Command::Compare {
            config,
            out,
            seed,
            models,
        } => {
            let cfg = load_config(config.as_deref())?;
            let models = models_for(&cfg, models.as_deref(), seed, mode)?;
            let sc = Scenario {
                seed,
                ..Scenario::new(1, Case::NoDob)
            };
            let results = compare_all_classes(&sc, &cfg, &models, mode)?;
            let scripts = write_results(&out, &results)?;
            print_summary(&results.iter().map(SummaryRow::from).collect::<Vec<_>>());
            for s in scripts {
                println!("wrote {}", s.display());
            }
        }
        Command::TrainCnn {
            config,
            seed,
            epochs,
            lr,
            batch,
            images,
            out,
        } => {
            let cfg = load_config(config.as_deref())?;
            if batch != 1 {
                return Err(PerceptionError::InvalidArgument(format!(
                    "classifier trains with batch size 1, got {batch}"
                ))
                .into());
            }
            let mut s = CnnSettings {
                n_images: images,
                seed,
                ..CnnSettings::default()
            };
            s.train.epochs = epochs;
            s.train.lr = lr;
            s.train.seed = seed;
            let o = train_cnn(&cfg, &s)?;
            for (i, (tr, va)) in o.report.train_acc.iter().zip(&o.report.val_acc).enumerate() {
                println!(
                    "epoch {:>3}  train {:.3}  val {:.3}  loss {:.4}",
                    i + 1,
                    tr,
                    va,
                    o.report.mean_loss[i]
                );
            }
            println!(
                "best epoch {}; test accuracy {:.3} on {} images",
                o.report.best_epoch, o.test_acc, o.n_test
            );
            o.report.model.to_matrix_file().save(&out)?;
            println!("wrote {}", out.display());
        }
        Command::TrainLstm {
            config,
            seed,
            epochs,
            lr,
            batch,
            samples,
            out,
            dataset_out,
            curve_out,
        } => {
            let cfg = load_config(config.as_deref())?;
            let s = LstmSettings {
                dataset: DatasetOptions {
                    n: samples,
                    seed,
                    parallelism: mode,
                    ..DatasetOptions::default()
                },
                train: LstmTrainOptions {
                    epochs,
                    lr,
                    batch,
                    seed,
                    parallelism: mode,
                    ..LstmTrainOptions::default()
                },
                ..LstmSettings::default()
            };
            let (ds, rep) = train_lstm(&cfg, &s)?;
            for sk in &ds.skipped {
                eprintln!("skipped sample {}: {}", sk.index, sk.reason);
            }
            for (i, r) in rep.rmse.iter().enumerate() {
                println!("epoch {i:>3}  rmse {r:.5}");
            }
            if let Some(p) = dataset_out {
                ds.save_csv(&p)?;
                println!("wrote {}", p.display());
            }
            if let Some(p) = curve_out {
                #[derive(serde::Serialize)]
                struct Point {
                    epoch: usize,
                    rmse: f64,
                }
                let pts: Vec<Point> = rep
                    .rmse
                    .iter()
                    .enumerate()
                    .map(|(epoch, &rmse)| Point { epoch, rmse })
                    .collect();
                idob::persist::write_csv(&p, &pts)?;
                println!("wrote {}", p.display());
            }
            rep.model.to_matrix_file().save(&out)?;
            println!("wrote {}", out.display());
        }
        Command::SynthesizeL {
            config,
            taps,
            out,
            accept_best,
        } => {
            let cfg = load_config(config.as_deref())?;
            let opts = SynthesisOptions {
                n_taps: taps.unwrap_or(cfg.n_taps),
                parallelism: mode,
                ..SynthesisOptions::default()
            };
            let res = synthesize(&cfg, &opts)?;
            let contractive = res.is_ok();
            let best = best_filter(res.clone())?;
            println!(
                "spectral radius {:.6}  peak gain {:.6} at {:.4} rad/sample  design ratio {:.6}  rank {}",
                best.rho, best.gamma, best.omega, best.design_ratio, best.rank
            );
            best.filter.save(&out)?;
            println!("wrote {}", out.display());
            if !contractive && !accept_best {
                return Err(res.expect_err("non-contractive").into());
            }
        }
        Command::Report { dir } => {
            let (rows, scripts) = report(&dir)?;
            if rows.is_empty() {
                return Err(HarnessError::NoLogs(dir.display().to_string()).into());
            }
            print_summary(&rows);
            for s in scripts {
                println!("wrote {}", s.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let cat = e.category();
            eprintln!("error [{}]: {e}", cat.name());
            if let Error::Synthesis(SynthesisError::NotContractive { .. }) = e {
                eprintln!("the best filter was written; pass --accept-best to use it");
            }
            ExitCode::from(cat.exit_code() as u8)
        }
    }
}
