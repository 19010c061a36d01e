mod common;

use std::f64::consts::PI;

use common::{loop_error, max_rel_diff, random_scalar_block, rng};
use idob::config::Config;
use idob::harness::{best_filter, design_error, synthesize};
use idob::learnfilter::{
    build_error_system, nominal_run, peak_gain, two_norm, ErrorSystem, LearningFilter, LoopBlocks,
};
use idob::linalg::{spectral_radius, StateSpace};
use proptest::prelude::*;
use rand::Rng;

struct Blocks {
    g: StateSpace,
    d: StateSpace,
    q: StateSpace,
    c: StateSpace,
    l: LearningFilter,
}

fn random_blocks(seed: u64) -> Blocks {
    let mut r = rng(seed);
    let g = random_scalar_block(&mut r, true);
    let d = random_scalar_block(&mut r, false);
    let q = random_scalar_block(&mut r, true);
    let c = random_scalar_block(&mut r, false);
    let taps = (0..4).map(|_| r.random_range(-0.5..0.5)).collect();
    Blocks {
        g,
        d,
        q,
        c,
        l: LearningFilter::new(taps, 0.01),
    }
}

fn signal(seed: u64, n: usize) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| r.random_range(-1.0..1.0)).collect()
}

/// Peak magnitude over `n + 1` equally spaced frequencies.
fn brute_force_peak(e: &ErrorSystem, n: usize) -> f64 {
    let sys = e.to_state_space();
    (0..=n)
        .map(|i| sys.freq_response(PI * i as f64 / n as f64).unwrap().norm())
        .fold(0.0, f64::max)
}

#[test]
fn peak_gain_matches_dense_grid_and_refines_monotonically() {
    for seed in 0..20 {
        let b = random_blocks(seed);
        let e = build_error_system(&b.g, &b.d, &b.q, &b.c, &b.l.realization()).unwrap();
        if spectral_radius(&e.a).unwrap() >= 0.97 {
            continue;
        }
        let dense = brute_force_peak(&e, 200_000);
        let mut prev = 0.0;
        for n in [64, 256, 1024, 4096] {
            let g = peak_gain(&e, n).unwrap().gamma;
            assert!(g >= prev - 1e-12, "seed {seed}: {g} < {prev} at n={n}");
            prev = g;
        }
        assert!(
            (prev - dense).abs() <= 1e-6 * dense,
            "seed {seed}: {prev} vs {dense}"
        );
        let at = peak_gain(&e, 1024).unwrap();
        let sys = e.to_state_space();
        let check = sys.freq_response(at.omega).unwrap().norm();
        assert!((check - at.gamma).abs() < 1e-12);
    }
}

#[test]
fn synthesized_filter_certificates_reproduce() {
    let cfg = Config::default();
    let syn = best_filter(synthesize(&cfg, &Default::default()).unwrap()).unwrap();
    let blocks = LoopBlocks::from_config(&cfg).unwrap();
    let e = build_error_system(
        &blocks.gn,
        &blocks.d,
        &blocks.q,
        &blocks.c,
        &syn.filter.realization(),
    )
    .unwrap();
    let rho = spectral_radius(&e.a).unwrap();
    assert!((rho - syn.rho).abs() < 1e-12);
    assert!(rho < 1.0);
    let dense = brute_force_peak(&e, 100_000);
    assert!(
        (dense - syn.gamma).abs() <= 1e-6 * dense,
        "{dense} vs {}",
        syn.gamma
    );

    // exact prediction: the realised error obeys the norm contract
    let ep = design_error(&cfg).unwrap();
    let mut padded = ep.clone();
    padded.extend(std::iter::repeat_n(0.0, 2000));
    let e_sim = e.simulate(&padded);
    assert!(two_norm(&e_sim) < two_norm(&padded));
    assert!(two_norm(&e_sim) <= syn.gamma * two_norm(&padded) + 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn error_system_matches_loop_simulation(seed in any::<u64>()) {
        let b = random_blocks(seed);
        let e_sys = build_error_system(&b.g, &b.d, &b.q, &b.c, &b.l.realization()).unwrap();
        prop_assume!(spectral_radius(&e_sys.a).unwrap() < 1.0);
        let n = 500;
        let r = signal(seed ^ 1, n);
        let d = signal(seed ^ 2, n);
        let zero = vec![0.0; n];
        let e_p = loop_error(&b.g, &b.d, &b.q, &b.c, &r, &d, &zero);
        let d_f = b.l.apply(&e_p);
        let e_direct = loop_error(&b.g, &b.d, &b.q, &b.c, &r, &d, &d_f);
        let e_block = e_sys.simulate(&e_p);
        prop_assert!(max_rel_diff(&e_direct, &e_block) <= 1e-9);
    }

    #[test]
    fn norm_contract_holds_for_stable_systems(seed in any::<u64>()) {
        let b = random_blocks(seed);
        let e = build_error_system(&b.g, &b.d, &b.q, &b.c, &b.l.realization()).unwrap();
        prop_assume!(spectral_radius(&e.a).unwrap() < 0.95);
        let gamma = peak_gain(&e, 4096).unwrap().gamma;
        let mut e_p = signal(seed ^ 7, 300);
        e_p.extend(std::iter::repeat_n(0.0, 1500));
        let out = e.simulate(&e_p);
        prop_assert!(two_norm(&out) <= gamma * two_norm(&e_p) + 1e-6);
    }

    #[test]
    fn nominal_run_is_linear_in_disturbance(k in -3.0f64..3.0) {
        let blocks = LoopBlocks::from_config(&Config::default()).unwrap();
        let d = signal(5, 400);
        let r = vec![0.0; 400];
        let base = nominal_run(&r, &d, &blocks).unwrap();
        let scaled: Vec<f64> = d.iter().map(|v| k * v).collect();
        let run = nominal_run(&r, &scaled, &blocks).unwrap();
        let scale = base.e_p.iter().fold(1e-12f64, |m, v| m.max(v.abs()));
        for (a, b) in run.e_p.iter().zip(&base.e_p) {
            prop_assert!((a - k * b).abs() <= 1e-9 * scale);
        }
    }
}
