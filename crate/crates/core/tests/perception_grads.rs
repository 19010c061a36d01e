mod common;

use common::{gradient_error, toy_image};
use idob::config::Config;
use idob::par::Parallelism;
use idob::perception::{
    cnn_train, dataset_pair, generate_lstm_dataset, lstm_train, BoxImage, CnnModel,
    CnnTrainOptions, DatasetOptions, DisturbanceProfile, LstmModel, LstmTrainOptions,
};

#[test]
fn cnn_gradient_matches_finite_differences() {
    for (seed, label) in [(1, 1), (2, 3), (3, 2)] {
        let model = CnnModel::init(6, 6, 2, 3, seed);
        let img = toy_image(seed + 100, label);
        let (_, grad) = model.loss_and_grad(&img).unwrap();
        let err = gradient_error(&model.params(), &grad, |p| {
            let mut m = model.clone();
            m.set_params(p);
            m.loss_and_grad(&img).unwrap().0
        });
        assert!(err < 1e-4, "seed {seed}: {err}");
    }
}

#[test]
fn lstm_gradient_matches_finite_differences() {
    let mut model = LstmModel::init(3, 4);
    model.scale = 2.0;
    let input = [0.3, -1.2, 0.8, 1.9, -0.4];
    let target = [0.1, -0.9, 0.5, 1.5, 0.2];
    let (_, grad) = model.loss_and_grad(&input, &target);
    let err = gradient_error(&model.params(), &grad, |p| {
        let mut m = model.clone();
        m.set_params(p);
        m.loss_and_grad(&input, &target).0
    });
    assert!(err < 1e-4, "{err}");
}

#[test]
fn zero_learning_rate_is_a_null_update() {
    let imgs: Vec<BoxImage> = (0..6).map(|i| toy_image(i, 1 + i as usize % 3)).collect();
    let model = CnnModel::init(6, 6, 2, 3, 9);
    let opts = CnnTrainOptions {
        epochs: 2,
        lr: 0.0,
        seed: 0,
    };
    let rep = cnn_train(&imgs, &imgs, model.clone(), &opts).unwrap();
    assert_eq!(rep.model.params(), model.params());

    let ds = small_dataset(4);
    let mut lstm = LstmModel::init(4, 1);
    lstm.scale = ds.max_abs_input();
    let rep = lstm_train(
        &ds,
        lstm.clone(),
        &LstmTrainOptions {
            epochs: 2,
            lr: 0.0,
            batch: 2,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(rep.model.params(), lstm.params());
    assert!(rep.rmse.windows(2).all(|w| w[0] == w[1]));
}

fn small_dataset(n: usize) -> idob::perception::LstmDataset {
    generate_lstm_dataset(
        &Config::default(),
        &DatasetOptions {
            n,
            seed: 11,
            ..Default::default()
        },
    )
    .unwrap()
}

#[test]
fn dataset_is_deterministic_and_mode_independent() {
    let cfg = Config::default();
    let base = DatasetOptions {
        n: 4,
        seed: 5,
        ..Default::default()
    };
    let a = generate_lstm_dataset(&cfg, &base).unwrap();
    let b = generate_lstm_dataset(
        &cfg,
        &DatasetOptions {
            parallelism: Parallelism::Sequential,
            ..base.clone()
        },
    )
    .unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 4);
    assert!(a.skipped.is_empty());
}

#[test]
fn doubling_the_load_doubles_the_estimate() {
    let cfg = Config::default();
    let p = DisturbanceProfile::base(cfg.dt, 21.0, -1.5).unwrap();
    let (_, y1) = dataset_pair(&p, &cfg, 10).unwrap();
    let (_, y2) = dataset_pair(&p.scaled(2.0), &cfg, 10).unwrap();
    let peak = y1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (a, b) in y1.iter().zip(&y2) {
        assert!((b - 2.0 * a).abs() <= 0.02 * 2.0 * peak, "{a} {b}");
    }
}

#[test]
fn training_is_reproducible() {
    let ds = small_dataset(6);
    let opts = LstmTrainOptions {
        epochs: 3,
        batch: 3,
        seed: 2,
        ..Default::default()
    };
    let mut m = LstmModel::init(4, 2);
    m.scale = ds.max_abs_input();
    let a = lstm_train(&ds, m.clone(), &opts).unwrap();
    let b = lstm_train(
        &ds,
        m,
        &LstmTrainOptions {
            parallelism: Parallelism::Sequential,
            ..opts
        },
    )
    .unwrap();
    assert_eq!(a, b);
}
