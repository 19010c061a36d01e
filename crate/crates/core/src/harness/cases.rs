use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{fly, Case, FlightInputs, HarnessError, Metrics, Models, Scenario, ScenarioResult};
use crate::config::Config;
use crate::learnfilter::{nominal_run, LoopBlocks};
use crate::par::{self, Parallelism};
use crate::perception::{predict_for_class, render_box};

/// Feedforward signals of the image-based case.
#[derive(Debug, Clone, PartialEq)]
pub struct Feedforward {
    pub predicted_class: usize,
    pub d_p: Vec<f64>,
    pub e_p: Vec<f64>,
    pub d_f: Vec<f64>,
}

/// Classifies a rendered image of the true class (unless overridden),
/// predicts the input disturbance, runs the nominal loop and filters its
/// error through `L`.
pub fn feedforward(
    sc: &Scenario,
    cfg: &Config,
    models: &Models,
) -> Result<Feedforward, crate::Error> {
    let predicted_class = match sc.predicted_class {
        Some(k) => k,
        None => {
            let img = render_box(sc.class, &mut ChaCha8Rng::seed_from_u64(sc.seed));
            models.cnn.classify(&img)?
        }
    };
    let pred = predict_for_class(predicted_class, &models.lstm, &sc.base_profile(cfg)?)?;
    let blocks = LoopBlocks::from_config(cfg)?;
    let run = nominal_run(&sc.reference_z(cfg.dt), &pred.d_p.samples, &blocks)?;
    let d_f = models.l.apply(&run.e_p);
    Ok(Feedforward {
        predicted_class,
        d_p: pred.d_p.samples,
        e_p: run.e_p,
        d_f,
    })
}

pub fn run_case(
    sc: &Scenario,
    cfg: &Config,
    models: Option<&Models>,
) -> Result<ScenarioResult, crate::Error> {
    cfg.validate()?;
    sc.validate(cfg.n_classes)?;
    let d = sc.disturbance(cfg)?.samples;
    let ff = match sc.case {
        Case::ImageDob => Some(feedforward(
            sc,
            cfg,
            models.ok_or(HarnessError::MissingModels)?,
        )?),
        _ => None,
    };
    let reference = |t: f64| sc.reference(t);
    let flight = fly(
        cfg,
        &FlightInputs {
            start: sc.start,
            reference: &reference,
            d: &d,
            d_f: ff.as_ref().map(|f| f.d_f.as_slice()),
            e_p: ff.as_ref().map(|f| f.e_p.as_slice()),
            dob: sc.case != Case::NoDob,
        },
    )?;
    Ok(ScenarioResult {
        scenario: sc.clone(),
        metrics: Metrics::from_rows(&flight.rows),
        rows: flight.rows,
        diverged_at: flight.diverged_at,
        predicted_class: ff.map(|f| f.predicted_class),
    })
}

/// The three cases of `sc`, in `Case::ALL` order.
pub fn compare_cases(
    sc: &Scenario,
    cfg: &Config,
    models: &Models,
    mode: Parallelism,
) -> Result<Vec<ScenarioResult>, crate::Error> {
    par::map(mode, &Case::ALL, |&c| {
        run_case(&sc.with_case(c), cfg, Some(models))
    })
    .into_iter()
    .collect()
}

/// All cases for classes `1..=n_classes`, class-major.
pub fn compare_all_classes(
    sc: &Scenario,
    cfg: &Config,
    models: &Models,
    mode: Parallelism,
) -> Result<Vec<ScenarioResult>, crate::Error> {
    let jobs: Vec<Scenario> = (1..=cfg.n_classes)
        .flat_map(|k| {
            Case::ALL.map(|c| Scenario {
                class: k,
                ..sc.with_case(c)
            })
        })
        .collect();
    par::map(mode, &jobs, |s| run_case(s, cfg, Some(models)))
        .into_iter()
        .collect()
}
