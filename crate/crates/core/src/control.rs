//! Backstepping baseline controller.
//!
//! The altitude loop produces the net thrust; the horizontal loop turns the
//! desired accelerations into roll/pitch references, which the torque laws
//! then track.

use std::f64::consts::FRAC_PI_4;

use thiserror::Error;

use crate::dynamics::{ControlInput, PhysParams, QuadState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("degenerate virtual-reference denominator {denominator}")]
    DegenerateDenominator { denominator: f64 },
    #[error("non-finite controller input")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BacksteppingGains {
    pub k: [f64; 6],
    pub kz_p: f64,
    pub kz_d: f64,
    /// Horizontal position and velocity weights of the virtual references.
    pub kxy_p: f64,
    pub kxy_d: f64,
}

impl Default for BacksteppingGains {
    fn default() -> Self {
        Self {
            k: [4.0, 4.0, 4.0, 4.0, 2.0, 2.0],
            kz_p: 4.0,
            kz_d: 3.0,
            kxy_p: 2.0,
            kxy_d: 3.0,
        }
    }
}

impl BacksteppingGains {
    /// Unit gains everywhere: the untuned textbook law.
    pub fn unit() -> Self {
        Self {
            k: [1.0; 6],
            kz_p: 1.0,
            kz_d: 1.0,
            kxy_p: 1.0,
            kxy_d: 1.0,
        }
    }
}

/// Position reference with its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Reference {
    pub pos: [f64; 3],
    pub vel: [f64; 3],
    pub acc: [f64; 3],
}

impl Reference {
    pub fn hold(pos: [f64; 3]) -> Self {
        Self {
            pos,
            ..Self::default()
        }
    }
}

/// Desired roll, pitch, yaw and their discrete derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VirtualRefs {
    pub angle: [f64; 3],
    pub rate: [f64; 3],
    pub accel: [f64; 3],
}

pub fn thrust_law(
    s: &QuadState,
    r_z: f64,
    r_zdot: f64,
    p: &PhysParams,
    g: &BacksteppingGains,
) -> f64 {
    p.mass * (p.gravity + g.kz_p * (r_z - s.0[10]) + g.kz_d * (r_zdot - s.0[11]))
}

/// Roll/pitch/yaw references before differencing, clamped to ±π/4.
pub fn virtual_angles(
    s: &QuadState,
    r: &Reference,
    p: &PhysParams,
    g: &BacksteppingGains,
) -> Result<[f64; 3], ControlError> {
    let den = thrust_law(s, r.pos[2], r.vel[2], p, g) / p.mass;
    if !den.is_finite() {
        return Err(ControlError::NonFinite);
    }
    if den.abs() < 0.1 * p.gravity {
        return Err(ControlError::DegenerateDenominator { denominator: den });
    }
    let x = &s.0;
    let ax = r.acc[0] + g.kxy_p * (r.pos[0] - x[6]) + g.kxy_d * (r.vel[0] - x[7]);
    let ay = r.acc[1] + g.kxy_p * (r.pos[1] - x[8]) + g.kxy_d * (r.vel[1] - x[9]);
    let roll = (-ay / den).clamp(-FRAC_PI_4, FRAC_PI_4);
    let pitch = (ax / den).clamp(-FRAC_PI_4, FRAC_PI_4);
    Ok([roll, pitch, 0.0])
}

pub fn torque_laws(
    s: &QuadState,
    v: &VirtualRefs,
    p: &PhysParams,
    g: &BacksteppingGains,
) -> (f64, f64, f64) {
    let c = p.coeffs();
    let x = &s.0;
    let axis = |i: usize, ka: f64, kb: f64, coupling: f64, lever: f64| {
        let e1 = x[2 * i] - v.angle[i];
        let e1_dot = x[2 * i + 1] - v.rate[i];
        let e2 = x[2 * i + 1] - (v.rate[i] - ka * e1);
        (v.accel[i] - ka * e1_dot - kb * e2 - coupling) / lever
    };
    (
        axis(0, g.k[0], g.k[1], c.c1 * x[3] * x[5], c.c4),
        axis(1, g.k[2], g.k[3], c.c2 * x[1] * x[5], c.c5),
        axis(2, g.k[4], g.k[5], c.c3 * x[1] * x[3], c.c6),
    )
}

/// Stateful controller: keeps the reference history for differencing.
#[derive(Debug, Clone)]
pub struct Controller {
    pub params: PhysParams,
    pub gains: BacksteppingGains,
    pub dt: f64,
    prev: Option<VirtualRefs>,
}

impl Controller {
    pub fn new(params: PhysParams, gains: BacksteppingGains, dt: f64) -> Self {
        Self {
            params,
            gains,
            dt,
            prev: None,
        }
    }

    pub fn reset(&mut self) {
        self.prev = None;
    }

    /// Virtual references with backward-difference derivatives. On a
    /// degenerate denominator the previous references are kept.
    pub fn virtual_refs(
        &mut self,
        s: &QuadState,
        r: &Reference,
    ) -> Result<VirtualRefs, ControlError> {
        let angle = virtual_angles(s, r, &self.params, &self.gains)?;
        let v = match self.prev {
            None => VirtualRefs {
                angle,
                ..VirtualRefs::default()
            },
            Some(prev) => {
                let mut v = VirtualRefs {
                    angle,
                    ..VirtualRefs::default()
                };
                for (i, a) in angle.iter().enumerate() {
                    v.rate[i] = (a - prev.angle[i]) / self.dt;
                    v.accel[i] = (v.rate[i] - prev.rate[i]) / self.dt;
                }
                v
            }
        };
        self.prev = Some(v);
        Ok(v)
    }

    pub fn step(&mut self, s: &QuadState, r: &Reference) -> Result<ControlInput, ControlError> {
        if !s.is_finite() {
            return Err(ControlError::NonFinite);
        }
        let u1 = thrust_law(s, r.pos[2], r.vel[2], &self.params, &self.gains);
        let v = self.virtual_refs(s, r)?;
        let (u2, u3, u4) = torque_laws(s, &v, &self.params, &self.gains);
        Ok(ControlInput { u1, u2, u3, u4 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> PhysParams {
        PhysParams::default()
    }

    #[test]
    fn thrust_at_zero_error_is_hover() {
        let s = QuadState::at_rest([0.0, 0.0, 2.0]);
        assert_eq!(
            thrust_law(&s, 2.0, 0.0, &p(), &BacksteppingGains::default()),
            9.81
        );
    }

    #[test]
    fn thrust_reduces_to_regulator() {
        let mut s = QuadState::default();
        s.0[10] = 1.0;
        let u1 = thrust_law(&s, 0.0, 0.0, &p(), &BacksteppingGains::unit());
        assert!((u1 - 8.81).abs() < 1e-12);
        s.0[11] = 0.5;
        let u1 = thrust_law(&s, 0.0, 0.0, &p(), &BacksteppingGains::unit());
        assert_eq!(u1, p().mass * (p().gravity - s.0[10] - s.0[11]));
    }

    #[test]
    fn thrust_is_linear_in_position_error() {
        let g = BacksteppingGains {
            kz_d: 1.0,
            ..BacksteppingGains::default()
        };
        let s = QuadState::default();
        let a = thrust_law(&s, 0.3, 0.0, &p(), &g) - 9.81;
        let b = thrust_law(&s, 0.6, 0.0, &p(), &g) - 9.81;
        assert!((b - 2.0 * a).abs() < 1e-12);
    }

    #[test]
    fn virtual_refs_hand_value() {
        let mut s = QuadState::default();
        s.0[8] = 0.981;
        let a =
            virtual_angles(&s, &Reference::default(), &p(), &BacksteppingGains::unit()).unwrap();
        assert!((a[0] - 0.1).abs() < 1e-12);
        assert_eq!(a[1], 0.0);
        assert_eq!(a[2], 0.0);
        let zero = virtual_angles(
            &QuadState::default(),
            &Reference::default(),
            &p(),
            &BacksteppingGains::unit(),
        )
        .unwrap();
        assert_eq!(zero, [0.0; 3]);
    }

    #[test]
    fn virtual_refs_pitch_sign_and_clamp() {
        let mut s = QuadState::default();
        s.0[6] = 0.5;
        s.0[7] = 0.2;
        let a =
            virtual_angles(&s, &Reference::default(), &p(), &BacksteppingGains::unit()).unwrap();
        assert!((a[1] + 0.7 / 9.81).abs() < 1e-12);
        s.0[6] = 100.0;
        let a =
            virtual_angles(&s, &Reference::default(), &p(), &BacksteppingGains::unit()).unwrap();
        assert_eq!(a[1], -FRAC_PI_4);
    }

    #[test]
    fn degenerate_denominator() {
        let mut s = QuadState::default();
        s.0[10] = 5.0;
        s.0[11] = 4.81;
        assert!(matches!(
            virtual_angles(&s, &Reference::default(), &p(), &BacksteppingGains::unit()),
            Err(ControlError::DegenerateDenominator { .. })
        ));
    }

    #[test]
    fn controller_holds_refs_on_degenerate_step() {
        let mut c = Controller::new(p(), BacksteppingGains::unit(), 0.01);
        let mut s = QuadState::default();
        s.0[8] = 0.981;
        let first = c.virtual_refs(&s, &Reference::default()).unwrap();
        s.0[10] = 5.0;
        s.0[11] = 4.81;
        assert!(c.step(&s, &Reference::default()).is_err());
        assert_eq!(c.prev, Some(first));
    }

    #[test]
    fn torque_zero_at_rest() {
        let (a, b, c) = torque_laws(
            &QuadState::default(),
            &VirtualRefs::default(),
            &p(),
            &BacksteppingGains::default(),
        );
        assert_eq!((a, b, c), (0.0, 0.0, 0.0));
    }

    #[test]
    fn torque_hand_values() {
        let g = BacksteppingGains {
            k: [2.0, 2.0, 4.0, 4.0, 2.0, 2.0],
            ..BacksteppingGains::default()
        };
        let mut s = QuadState::default();
        s.0[0] = 0.1;
        // e1 = 0.1 with x2 = 0 gives e1_dot = 0, e2 = 0.2
        let (u2, _, _) = torque_laws(&s, &VirtualRefs::default(), &p(), &g);
        assert!((u2 + 0.02).abs() < 1e-12);

        // c1 = 0.5 with c4 = 20: Jx = 0.01, arm = 0.2, Jy - Jz = 0.005
        let pp = PhysParams {
            jy: 0.025,
            jz: 0.02,
            ..p()
        };
        let mut s = QuadState::default();
        s.0[3] = 1.0;
        s.0[5] = 1.0;
        let zero_gain = BacksteppingGains {
            k: [0.0, 0.0, 4.0, 4.0, 2.0, 2.0],
            ..g
        };
        let (u2, _, _) = torque_laws(&s, &VirtualRefs::default(), &pp, &zero_gain);
        assert!((u2 + 0.025).abs() < 1e-12);
    }

    #[test]
    fn hover_control() {
        let mut c = Controller::new(p(), BacksteppingGains::default(), 0.01);
        let s = QuadState::at_rest([1.0, 1.0, 1.0]);
        let u = c.step(&s, &Reference::hold([1.0, 1.0, 1.0])).unwrap();
        assert_eq!(u, ControlInput::hover(&p()));
    }

    #[test]
    fn derivatives_start_at_zero() {
        let mut c = Controller::new(p(), BacksteppingGains::unit(), 0.01);
        let mut s = QuadState::default();
        s.0[8] = 0.5;
        let v = c.virtual_refs(&s, &Reference::default()).unwrap();
        assert_eq!(v.rate, [0.0; 3]);
        assert_eq!(v.accel, [0.0; 3]);
        s.0[8] = 0.6;
        let v2 = c.virtual_refs(&s, &Reference::default()).unwrap();
        assert!((v2.rate[0] - (v2.angle[0] - v.angle[0]) / 0.01).abs() < 1e-9);
    }
}
