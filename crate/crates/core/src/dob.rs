//! Conventional discrete disturbance observer on the altitude channel.
//!
//! `Q` is a pure unit delay and `D` approximates the inverse of the
//! double-integrator altitude model. The estimate is `d̂ = α − β` with `α`
//! the output of `D` and `β` the output of `Q`.

use thiserror::Error;

use crate::linalg::{spectral_radius, LinalgError, StateSpace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DobError {
    #[error("rolloff {cutoff} rad/s is not below the Nyquist frequency {nyquist} rad/s")]
    InvalidCutoff { cutoff: f64, nyquist: f64 },
    #[error("nominal model must be a second-order SISO double integrator")]
    NotDoubleIntegrator,
    #[error("non-finite observer signal; estimate held at {held}")]
    EstimatorFault { held: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DobConfig {
    pub enabled: bool,
    /// Optional second-order low-pass cutoff on `D` (rad/s).
    pub rolloff: Option<f64>,
    /// Clamp on the applied estimate as a multiple of hover thrust.
    pub estimate_sat: f64,
}

impl Default for DobConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            rolloff: None,
            estimate_sat: 2.0,
        }
    }
}

/// One observer step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DobSignals {
    pub d_hat: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// Approximate inverse of the altitude model.
///
/// The mass and sample time are read off `gn` (`B = [dt²/2m, dt/m]`). The
/// core is the causal second difference `(m/dt²)(1 − z⁻¹)²`, optionally in
/// series with a critically damped ZOH low-pass.
pub fn build_inverse_d(gn: &StateSpace, rolloff: Option<f64>) -> Result<StateSpace, DobError> {
    if gn.order() != 2 || !gn.is_siso() || gn.a[(0, 1)] <= 0.0 || gn.b[(1, 0)] <= 0.0 {
        return Err(DobError::NotDoubleIntegrator);
    }
    let dt = gn.a[(0, 1)];
    let mass = dt / gn.b[(1, 0)];
    let h = mass / (dt * dt);
    let diff = StateSpace::siso(2, &[0.0, 0.0, 1.0, 0.0], &[1.0, 0.0], &[-2.0 * h, h], h)?;
    match rolloff {
        None => Ok(diff),
        Some(wc) => {
            let nyquist = std::f64::consts::PI / dt;
            if !(wc > 0.0 && wc < nyquist) {
                return Err(DobError::InvalidCutoff {
                    cutoff: wc,
                    nyquist,
                });
            }
            Ok(diff.series(&lowpass2(wc, dt))?)
        }
    }
}

/// ZOH discretization of `wc² / (s + wc)²`, unit DC gain.
pub fn lowpass2(wc: f64, dt: f64) -> StateSpace {
    // Closed-form exp of the repeated-pole companion matrix.
    let e = (-wc * dt).exp();
    let a = [
        e * (1.0 + wc * dt),
        e * dt,
        -wc * wc * dt * e,
        e * (1.0 - wc * dt),
    ];
    // B_d = A^{-1}(Φ − I)B with B = [0, wc²]
    let b = [1.0 - e * (1.0 + wc * dt), wc * wc * dt * e];
    StateSpace::siso(2, &a, &b, &[1.0, 0.0], 0.0).expect("fixed 2x2 realization")
}

#[derive(Debug, Clone)]
pub struct Dob {
    pub config: DobConfig,
    q: StateSpace,
    d: StateSpace,
    held: f64,
}

impl Dob {
    pub fn new(gn: &StateSpace, config: DobConfig) -> Result<Self, DobError> {
        let d = build_inverse_d(gn, config.rolloff)?;
        let rho = spectral_radius(&d.a)?;
        debug_assert!(rho < 1.0, "inverse block must be stable, got {rho}");
        Ok(Self {
            config,
            q: StateSpace::delay(),
            d,
            held: 0.0,
        })
    }

    pub fn q_block(&self) -> &StateSpace {
        &self.q
    }

    pub fn d_block(&self) -> &StateSpace {
        &self.d
    }

    pub fn reset(&mut self) {
        self.q.reset();
        self.d.reset();
        self.held = 0.0;
    }

    /// Advances `Q` with the previous applied input and `D` with the
    /// current output deviation. Disabled observers return zeros and keep
    /// their state untouched.
    pub fn step(&mut self, z_meas: f64, u_prev: f64) -> Result<DobSignals, DobError> {
        if !self.config.enabled {
            return Ok(DobSignals::default());
        }
        if !(z_meas.is_finite() && u_prev.is_finite()) {
            return Err(DobError::EstimatorFault { held: self.held });
        }
        self.q.step_scalar(u_prev);
        let beta = self.q.state_output();
        let alpha = self.d.step_scalar(z_meas);
        let d_hat = alpha - beta;
        self.held = d_hat;
        Ok(DobSignals { d_hat, alpha, beta })
    }

    /// Estimate after the configured clamp.
    pub fn applied(&self, d_hat: f64, hover_thrust: f64) -> f64 {
        let lim = self.config.estimate_sat * hover_thrust;
        d_hat.clamp(-lim, lim)
    }
}

pub fn compensated_input(u_bar: f64, d_hat: f64, d_f: f64) -> f64 {
    u_bar - d_hat - d_f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{z_nominal_model, PhysParams};

    fn gn() -> StateSpace {
        z_nominal_model(&PhysParams::default(), 0.01).unwrap()
    }

    #[test]
    fn zero_history_zero_estimate() {
        let mut dob = Dob::new(&gn(), DobConfig::default()).unwrap();
        for _ in 0..10 {
            assert_eq!(dob.step(0.0, 0.0).unwrap().d_hat, 0.0);
        }
    }

    #[test]
    fn delay_bookkeeping() {
        let mut dob = Dob::new(&gn(), DobConfig::default()).unwrap();
        let s = dob.step(0.0, 1.0).unwrap();
        assert_eq!(s.beta, 1.0);
        assert_eq!(s.d_hat, -1.0);
        assert_eq!(s.d_hat, s.alpha - s.beta);
    }

    #[test]
    fn inverse_of_step_response() {
        let g = gn();
        let z = g.simulate(&[1.0; 200]);
        let d = build_inverse_d(&g, None).unwrap();
        let y = d.simulate(&z);
        assert!(y[3..].iter().all(|v| (v - 1.0).abs() < 1e-9));
        assert!(spectral_radius(&d.a).unwrap() < 1.0);
    }

    #[test]
    fn inverse_with_rolloff_settles() {
        let g = gn();
        let wc = 20.0;
        let d = build_inverse_d(&g, Some(wc)).unwrap();
        assert!(spectral_radius(&d.a).unwrap() < 1.0);
        let z = g.simulate(&[1.0; 200]);
        let y = d.simulate(&z);
        let k = (7.0 / wc / 0.01).ceil() as usize;
        assert!(y[k..].iter().all(|v| (v - 1.0).abs() < 0.01));
        assert!(d.simulate(&[0.0; 20]).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn lowpass_unit_dc_gain() {
        let lp = lowpass2(20.0, 0.01);
        let h = lp.freq_response(0.0).unwrap();
        assert!((h.re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cutoff_beyond_nyquist() {
        assert!(matches!(
            build_inverse_d(&gn(), Some(400.0)),
            Err(DobError::InvalidCutoff { .. })
        ));
    }

    #[test]
    fn non_finite_holds_estimate() {
        let mut dob = Dob::new(&gn(), DobConfig::default()).unwrap();
        dob.step(0.0, 2.0).unwrap();
        let held = dob.step(0.0, 0.0).unwrap().d_hat;
        assert_eq!(
            dob.step(f64::NAN, 0.0),
            Err(DobError::EstimatorFault { held })
        );
    }

    #[test]
    fn disabled_is_silent() {
        let cfg = DobConfig {
            enabled: false,
            ..DobConfig::default()
        };
        let mut dob = Dob::new(&gn(), cfg).unwrap();
        assert_eq!(dob.step(3.0, 4.0).unwrap(), DobSignals::default());
    }

    #[test]
    fn compensation_arithmetic() {
        assert_eq!(compensated_input(10.0, 3.0, 1.0), 6.0);
        assert_eq!(compensated_input(4.2, 0.0, 0.0), 4.2);
    }

    #[test]
    fn applied_estimate_clamped() {
        let dob = Dob::new(&gn(), DobConfig::default()).unwrap();
        assert_eq!(dob.applied(100.0, 9.81), 19.62);
        assert_eq!(dob.applied(-1.0, 9.81), -1.0);
    }
}
