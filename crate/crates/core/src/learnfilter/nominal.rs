use super::{LearnError, LearningFilter};
use crate::config::Config;
use crate::dob::build_inverse_d;
use crate::dynamics::z_nominal_model;
use crate::linalg::StateSpace;

/// The altitude loop as four LTI blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopBlocks {
    pub gn: StateSpace,
    pub d: StateSpace,
    pub q: StateSpace,
    pub c: StateSpace,
}

impl LoopBlocks {
    pub fn from_config(cfg: &Config) -> Result<Self, crate::Error> {
        let p = cfg.phys();
        let gn = z_nominal_model(&p, cfg.dt)?;
        let d = build_inverse_d(&gn, cfg.dob().rolloff)?;
        let c = controller_block(p.mass, cfg.kz_p, cfg.kz_d, cfg.dt);
        Ok(Self {
            gn,
            d,
            q: StateSpace::delay(),
            c,
        })
    }
}

/// Altitude PD law on the tracking error with a backward-difference
/// derivative: `ū = m (kp e + kd (e − e₋₁)/dt)`.
pub fn controller_block(mass: f64, kp: f64, kd: f64, dt: f64) -> StateSpace {
    StateSpace::scalar(0.0, 1.0, -mass * kd / dt, mass * (kp + kd / dt))
}

/// Signals of the nominal tracking loop.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NominalRun {
    pub r: Vec<f64>,
    pub z_p: Vec<f64>,
    pub e_p: Vec<f64>,
    pub u_bar_p: Vec<f64>,
    pub u_p: Vec<f64>,
    pub alpha_p: Vec<f64>,
    pub beta_p: Vec<f64>,
    pub d_p: Vec<f64>,
}

/// Simulates the linear loop with the conventional observer under `d_p`.
///
/// Signals are deviations from hover; `D` is fed the output deviation from
/// the reference, matching the flight loop.
pub fn nominal_run(r: &[f64], d_p: &[f64], blocks: &LoopBlocks) -> Result<NominalRun, LearnError> {
    if r.len() != d_p.len() {
        return Err(LearnError::LengthMismatch(r.len(), d_p.len()));
    }
    let mut g = blocks.gn.clone();
    let mut d = blocks.d.clone();
    let mut q = blocks.q.clone();
    let mut c = blocks.c.clone();
    for b in [&mut g, &mut d, &mut q, &mut c] {
        b.reset();
    }
    let n = r.len();
    let mut run = NominalRun {
        r: r.to_vec(),
        d_p: d_p.to_vec(),
        ..NominalRun::default()
    };
    for k in 0..n {
        let z = g.state_output();
        let e = r[k] - z;
        let u_bar = c.step_scalar(e);
        let alpha = d.step_scalar(z - r[k]);
        let beta = q.state_output();
        let u = u_bar - (alpha - beta);
        q.step_scalar(u);
        g.step_scalar(u + d_p[k]);
        if !z.is_finite() || z.abs() > 1e6 {
            return Err(LearnError::Diverged { step: k });
        }
        run.z_p.push(z);
        run.e_p.push(e);
        run.u_bar_p.push(u_bar);
        run.u_p.push(u);
        run.alpha_p.push(alpha);
        run.beta_p.push(beta);
    }
    Ok(run)
}

/// Offline feedforward correction `d̂ᶠ = L e_p`.
pub fn learning_signal(run: &NominalRun, l: &LearningFilter) -> Vec<f64> {
    l.apply(&run.e_p)
}

pub fn two_norm(series: &[f64]) -> f64 {
    series.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blocks() -> LoopBlocks {
        LoopBlocks::from_config(&Config::default()).unwrap()
    }

    #[test]
    fn norms() {
        assert_eq!(two_norm(&[3.0, 4.0]), 5.0);
        assert_eq!(two_norm(&[0.0; 7]), 0.0);
        assert!((two_norm(&[2.0; 16]) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn unexcited_loop_is_silent() {
        let run = nominal_run(&[0.0; 300], &[0.0; 300], &blocks()).unwrap();
        assert!(run.e_p.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn constant_disturbance_is_rejected() {
        let n = 500;
        let run = nominal_run(&vec![0.0; n], &vec![-3.0; n], &blocks()).unwrap();
        let peak = run.e_p.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(peak > 0.0);
        assert!(run.e_p[n - 1].abs() < 0.02 * peak);
    }

    #[test]
    fn error_scales_with_amplitude() {
        let d1: Vec<f64> = (0..400)
            .map(|k| if (100..300).contains(&k) { 1.0 } else { 0.0 })
            .collect();
        let d2: Vec<f64> = d1.iter().map(|v| 2.5 * v).collect();
        let r = vec![0.0; 400];
        let a = two_norm(&nominal_run(&r, &d1, &blocks()).unwrap().e_p);
        let b = two_norm(&nominal_run(&r, &d2, &blocks()).unwrap().e_p);
        assert!((b / a - 2.5).abs() < 1e-9);
    }

    #[test]
    fn identity_and_shift_filters() {
        let run = NominalRun {
            e_p: vec![1.0, -2.0, 0.5],
            ..NominalRun::default()
        };
        assert_eq!(
            learning_signal(&run, &LearningFilter::new(vec![1.0], 0.01)),
            run.e_p
        );
        assert_eq!(
            learning_signal(&run, &LearningFilter::new(vec![0.0, 1.0], 0.01)),
            vec![0.0, 1.0, -2.0]
        );
        let zero = NominalRun {
            e_p: vec![0.0; 5],
            ..NominalRun::default()
        };
        assert!(
            learning_signal(&zero, &LearningFilter::new(vec![0.3, 2.0], 0.01))
                .iter()
                .all(|v| *v == 0.0)
        );
    }

    #[test]
    fn length_mismatch() {
        assert_eq!(
            nominal_run(&[0.0; 3], &[0.0; 4], &blocks()),
            Err(LearnError::LengthMismatch(3, 4))
        );
    }
}
