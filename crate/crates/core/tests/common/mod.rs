//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use idob::dynamics::{rk4_step, ControlInput, Model, PhysParams, QuadState};
use idob::linalg::StateSpace;
use idob::perception::BoxImage;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Characteristic polynomial coefficients `[c0, c1, .., cn]` (monic, `cn = 1`)
/// by the Faddeev-LeVerrier recursion.
pub fn char_poly(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut m = DMatrix::<f64>::zeros(n, n);
    for k in 1..=n {
        m = a * &m + DMatrix::identity(n, n) * c[n - k + 1];
        c[n - k] = -(a * &m).trace() / k as f64;
    }
    c
}

/// Roots of a monic polynomial by Durand-Kerner iteration.
pub fn poly_roots(c: &[f64]) -> Vec<Complex64> {
    let n = c.len() - 1;
    let eval = |z: Complex64| {
        c.iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &ci| acc * z + ci)
    };
    let bound = 1.0 + c[..n].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| seed.powu(k as u32) * (bound / 2.0))
        .collect();
    for _ in 0..5000 {
        let mut delta = 0.0f64;
        for i in 0..n {
            let mut den = Complex64::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    den *= z[i] - z[j];
                }
            }
            let step = eval(z[i]) / den;
            z[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 * bound {
            break;
        }
    }
    z
}

pub fn random_matrix(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0))
}

pub fn random_scalar_block(rng: &mut ChaCha8Rng, strictly_proper: bool) -> StateSpace {
    let mut r = || rng.random_range(-0.6..0.6);
    let (a, b, c, d) = (r(), r(), r(), r());
    StateSpace::scalar(a, b, c, if strictly_proper { 0.0 } else { d })
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Signal-level closed loop: plant `g` with observer `D`/`Q`, controller
/// `C`, reference `r`, input disturbance `d` and feedforward `d_f`.
/// Returns the tracking error `r − z`.
pub fn loop_error(
    g: &StateSpace,
    d_blk: &StateSpace,
    q: &StateSpace,
    c: &StateSpace,
    r: &[f64],
    d: &[f64],
    d_f: &[f64],
) -> Vec<f64> {
    let (mut g, mut d_blk, mut q, mut c) = (g.clone(), d_blk.clone(), q.clone(), c.clone());
    for b in [&mut g, &mut d_blk, &mut q, &mut c] {
        b.reset();
    }
    let mut e = Vec::with_capacity(r.len());
    for k in 0..r.len() {
        let z = g.state_output();
        let ek = r[k] - z;
        let u_bar = c.step_scalar(ek);
        let alpha = d_blk.step_scalar(z - r[k]);
        let beta = q.state_output();
        let u = u_bar - alpha + beta - d_f[k];
        q.step_scalar(u);
        g.step_scalar(u + d[k]);
        e.push(ek);
    }
    e
}

/// Largest relative deviation between two series, floored at unit scale.
pub fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1.0))
        .fold(0.0, f64::max)
}

/// Largest componentwise relative error between `grad` and central
/// differences of `loss` at `params`.
pub fn gradient_error(params: &[f64], grad: &[f64], loss: impl Fn(&[f64]) -> f64) -> f64 {
    const H: f64 = 1e-5;
    let mut p = params.to_vec();
    let mut worst = 0.0f64;
    for i in 0..p.len() {
        let orig = p[i];
        p[i] = orig + H;
        let up = loss(&p);
        p[i] = orig - H;
        let down = loss(&p);
        p[i] = orig;
        let fd = (up - down) / (2.0 * H);
        let err = (fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1e-6);
        worst = worst.max(err);
    }
    worst
}

/// Random 6x6 image with the given label.
pub fn toy_image(seed: u64, label: usize) -> BoxImage {
    let mut r = rng(seed);
    BoxImage {
        h: 6,
        w: 6,
        pixels: (0..36).map(|_| r.random_range(0.0..1.0)).collect(),
        label,
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// One second of a tumbling, drifting flight.
fn flight_end(dt: f64) -> [f64; 12] {
    let p = PhysParams::default();
    let mut s = QuadState([
        0.3, 1.0, -0.2, 0.5, 0.1, -0.8, 0.0, 1.0, 0.0, -0.5, 1.0, 0.2,
    ]);
    let u = ControlInput::new(12.0, 0.02, -0.01, 0.005);
    let n = (1.0 / dt).round() as usize;
    for _ in 0..n {
        s = rk4_step(&s, &u, &p, -0.7, dt, Model::Full).unwrap();
    }
    s.0
}

/// Observed RK4 order from step sizes 0.02 and 0.01 against a fine
/// reference.
pub fn rk4_order() -> f64 {
    let reference = flight_end(0.02 / 64.0);
    let coarse = max_abs_diff(&flight_end(0.02), &reference);
    let fine = max_abs_diff(&flight_end(0.01), &reference);
    (coarse / fine).log2()
}
