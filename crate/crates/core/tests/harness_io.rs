use idob::config::Config;
use idob::harness::{
    compare_all_classes, export_csv, find_logs, import_csv, report, run_case, write_results, Case,
    Metrics, Models, Scenario, LOG_COLUMNS, SUMMARY_FILE,
};
use idob::learnfilter::LearningFilter;
use idob::par::Parallelism;
use idob::perception::{CnnModel, LstmModel, IMAGE_SIZE};

/// Untrained models: the prediction is identically zero.
fn null_models(cfg: &Config) -> Models {
    let mut lstm = LstmModel::zeros(4);
    lstm.downsample = 10;
    lstm.scale = 1.0;
    Models {
        cnn: CnnModel::zeros(IMAGE_SIZE, IMAGE_SIZE, 2, cfg.n_classes),
        lstm,
        l: LearningFilter::zero(cfg.n_taps, cfg.dt),
    }
}

#[test]
fn log_round_trip_preserves_metrics() {
    let cfg = Config::default();
    let res = run_case(&Scenario::new(3, Case::ConventionalDob), &cfg, None).unwrap();
    assert_eq!(res.rows.len(), 2101);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join(res.file_name());
    export_csv(&res, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next().unwrap(), LOG_COLUMNS.join(","));
    let rows = import_csv(&path).unwrap();
    assert_eq!(rows.len(), 2101);
    let m = Metrics::from_rows(&rows);
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(1.0);
    assert!(close(m.ez_norm, res.metrics.ez_norm));
    assert!(close(m.max_dev, res.metrics.max_dev));
    assert_eq!(m.crashed, res.metrics.crashed);
    assert!(close(
        m.plateau_err_dhat.unwrap(),
        res.metrics.plateau_err_dhat.unwrap()
    ));
}

#[test]
fn saturated_observer_matches_no_observer() {
    let cfg = Config {
        estimate_sat: 0.0,
        ..Config::default()
    };
    for class in [1, 4] {
        let a = run_case(&Scenario::new(class, Case::NoDob), &cfg, None).unwrap();
        let b = run_case(&Scenario::new(class, Case::ConventionalDob), &cfg, None).unwrap();
        let strip = |r: &idob::harness::ScenarioResult| {
            r.rows
                .iter()
                .map(|row| (row.z, row.e, row.u1, row.x))
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&a), strip(&b));
    }
}

#[test]
fn unloaded_flight_tracks_in_every_case() {
    let cfg = Config {
        base_plateau: 0.0,
        ..Config::default()
    };
    let models = null_models(&cfg);
    for case in Case::ALL {
        let res = run_case(&Scenario::new(2, case), &cfg, Some(&models)).unwrap();
        let n = res.rows.len() as f64;
        assert!(res.diverged_at.is_none());
        assert!(!res.metrics.crashed);
        assert!(
            res.metrics.ez_norm < 0.05 * n.sqrt(),
            "{case}: {}",
            res.metrics.ez_norm
        );
        assert!(res.metrics.plateau_err_dhat.is_none());
    }
}

#[test]
fn idob_without_models_is_rejected() {
    let err = run_case(&Scenario::new(1, Case::ImageDob), &Config::default(), None).unwrap_err();
    assert_eq!(err.category(), idob::ErrorCategory::Config);
}

#[test]
fn results_are_deterministic_and_reportable() {
    let cfg = Config::default();
    let models = null_models(&cfg);
    let sc = Scenario::new(1, Case::NoDob);
    let a = compare_all_classes(&sc, &cfg, &models, Parallelism::Parallel).unwrap();
    let b = compare_all_classes(&sc, &cfg, &models, Parallelism::Sequential).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 3 * cfg.n_classes);

    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let scripts = write_results(d1.path(), &a).unwrap();
    write_results(d2.path(), &b).unwrap();
    assert_eq!(scripts.len(), cfg.n_classes);
    let read = |d: &std::path::Path, f: &str| std::fs::read(d.join(f)).unwrap();
    assert_eq!(read(d1.path(), SUMMARY_FILE), read(d2.path(), SUMMARY_FILE));
    assert_eq!(
        read(d1.path(), "plots_class3.gp"),
        read(d2.path(), "plots_class3.gp")
    );

    assert_eq!(find_logs(d1.path()).unwrap().len(), a.len());
    let (rows, _) = report(d1.path()).unwrap();
    for (row, res) in rows.iter().zip(&a) {
        assert_eq!(row.case, res.scenario.case.name());
        assert!((row.ez_norm - res.metrics.ez_norm).abs() <= 1e-9 * res.metrics.ez_norm.max(1.0));
    }
}
