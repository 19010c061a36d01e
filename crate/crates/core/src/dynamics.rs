//! Quadrotor rigid-body model, rotor mixing and the linear altitude model.
//!
//! State layout: roll, roll rate, pitch, pitch rate, yaw, yaw rate,
//! x, ẋ, y, ẏ, z, ż. The input disturbance enters additively on the
//! net-thrust channel.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::StateSpace;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("invalid physical parameter {name} = {value}")]
    InvalidParam { name: &'static str, value: f64 },
    #[error("non-finite {what}")]
    NonFinite { what: &'static str },
    #[error("time step must be positive, got {0}")]
    InvalidStep(f64),
    #[error("integration blew up at step {step}")]
    IntegrationBlowup { step: usize },
    #[error("infeasible thrust: rotor {rotor} needs squared speed {value}")]
    InfeasibleThrust { rotor: usize, value: f64 },
}

impl DynamicsError {
    /// Attaches a step index to an integration failure.
    pub fn at_step(self, step: usize) -> Self {
        match self {
            DynamicsError::IntegrationBlowup { .. } => DynamicsError::IntegrationBlowup { step },
            other => other,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysParams {
    pub mass: f64,
    /// Rotor-to-center distance.
    pub arm: f64,
    pub gravity: f64,
    pub jx: f64,
    pub jy: f64,
    pub jz: f64,
    pub kf: f64,
    pub km: f64,
}

impl Default for PhysParams {
    fn default() -> Self {
        Self {
            mass: 1.0,
            arm: 0.2,
            gravity: 9.81,
            jx: 0.01,
            jy: 0.01,
            jz: 0.02,
            kf: 1e-5,
            km: 1e-6,
        }
    }
}

/// Inertia coupling and lever constants c1..c6.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coeffs {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
}

impl PhysParams {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let fields = [
            ("mass", self.mass),
            ("arm", self.arm),
            ("gravity", self.gravity),
            ("jx", self.jx),
            ("jy", self.jy),
            ("jz", self.jz),
            ("kf", self.kf),
            ("km", self.km),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(DynamicsError::InvalidParam { name, value });
            }
        }
        Ok(())
    }

    pub fn coeffs(&self) -> Coeffs {
        Coeffs {
            c1: (self.jy - self.jz) / self.jx,
            c2: (self.jz - self.jx) / self.jy,
            c3: (self.jx - self.jy) / self.jz,
            c4: self.arm / self.jx,
            c5: self.arm / self.jy,
            c6: self.arm / self.jz,
        }
    }

    pub fn hover_thrust(&self) -> f64 {
        self.mass * self.gravity
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QuadState(pub [f64; 12]);

impl QuadState {
    pub const ROLL: usize = 0;
    pub const PITCH: usize = 2;
    pub const YAW: usize = 4;
    pub const X: usize = 6;
    pub const Y: usize = 8;
    pub const Z: usize = 10;

    pub fn at_rest(pos: [f64; 3]) -> Self {
        let mut s = [0.0; 12];
        s[Self::X] = pos[0];
        s[Self::Y] = pos[1];
        s[Self::Z] = pos[2];
        QuadState(s)
    }

    pub fn position(&self) -> [f64; 3] {
        [self.0[6], self.0[8], self.0[10]]
    }

    pub fn velocity(&self) -> [f64; 3] {
        [self.0[7], self.0[9], self.0[11]]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlInput {
    pub u1: f64,
    pub u2: f64,
    pub u3: f64,
    pub u4: f64,
}

impl ControlInput {
    pub fn new(u1: f64, u2: f64, u3: f64, u4: f64) -> Self {
        Self { u1, u2, u3, u4 }
    }

    pub fn hover(p: &PhysParams) -> Self {
        Self::new(p.hover_thrust(), 0.0, 0.0, 0.0)
    }

    fn is_finite(&self) -> bool {
        self.u1.is_finite() && self.u2.is_finite() && self.u3.is_finite() && self.u4.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MotorSpeeds(pub [f64; 4]);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    #[default]
    Full,
    Simplified,
}

fn check_inputs(s: &QuadState, u: &ControlInput, d_force: f64) -> Result<(), DynamicsError> {
    if !s.is_finite() {
        return Err(DynamicsError::NonFinite { what: "state" });
    }
    if !u.is_finite() {
        return Err(DynamicsError::NonFinite {
            what: "control input",
        });
    }
    if !d_force.is_finite() {
        return Err(DynamicsError::NonFinite {
            what: "disturbance",
        });
    }
    Ok(())
}

fn rotational(x: &[f64; 12], u: &ControlInput, c: &Coeffs, dx: &mut [f64; 12]) {
    dx[0] = x[1];
    dx[1] = c.c1 * x[3] * x[5] + c.c4 * u.u2;
    dx[2] = x[3];
    dx[3] = c.c2 * x[1] * x[5] + c.c5 * u.u3;
    dx[4] = x[5];
    dx[5] = c.c3 * x[1] * x[3] + c.c6 * u.u4;
    dx[6] = x[7];
    dx[8] = x[9];
    dx[10] = x[11];
}

fn full_rhs(
    x: &[f64; 12],
    u: &ControlInput,
    p: &PhysParams,
    c: &Coeffs,
    d_force: f64,
) -> [f64; 12] {
    let mut dx = [0.0; 12];
    rotational(x, u, c, &mut dx);
    let f = (u.u1 + d_force) / p.mass;
    let (s1, c1) = x[0].sin_cos();
    let (s3, c3) = x[2].sin_cos();
    let (s5, c5) = x[4].sin_cos();
    dx[7] = f * (c1 * s3 * c5 + s1 * s5);
    dx[9] = f * (c1 * s3 * s5 - s1 * c5);
    dx[11] = f * c1 * c3 - p.gravity;
    dx
}

fn simplified_rhs(
    x: &[f64; 12],
    u: &ControlInput,
    p: &PhysParams,
    c: &Coeffs,
    d_force: f64,
) -> [f64; 12] {
    let mut dx = [0.0; 12];
    rotational(x, u, c, &mut dx);
    let f = (u.u1 + d_force) / p.mass;
    dx[7] = f * (x[2] + x[0] * x[4]);
    dx[9] = f * (x[2] * x[4] - x[0]);
    dx[11] = f - p.gravity;
    dx
}

pub fn full_derivative(
    s: &QuadState,
    u: &ControlInput,
    p: &PhysParams,
    d_force: f64,
) -> Result<QuadState, DynamicsError> {
    check_inputs(s, u, d_force)?;
    Ok(QuadState(full_rhs(&s.0, u, p, &p.coeffs(), d_force)))
}

pub fn simplified_derivative(
    s: &QuadState,
    u: &ControlInput,
    p: &PhysParams,
    d_force: f64,
) -> Result<QuadState, DynamicsError> {
    check_inputs(s, u, d_force)?;
    Ok(QuadState(simplified_rhs(&s.0, u, p, &p.coeffs(), d_force)))
}

/// One classical Runge-Kutta step of `ẋ = f(x)`.
pub fn rk4<const N: usize>(x: &[f64; N], dt: f64, f: impl Fn(&[f64; N]) -> [f64; N]) -> [f64; N] {
    let axpy = |a: &[f64; N], h: f64, k: &[f64; N]| -> [f64; N] {
        let mut out = *a;
        for i in 0..N {
            out[i] += h * k[i];
        }
        out
    };
    let k1 = f(x);
    let k2 = f(&axpy(x, 0.5 * dt, &k1));
    let k3 = f(&axpy(x, 0.5 * dt, &k2));
    let k4 = f(&axpy(x, dt, &k3));
    let mut out = *x;
    for i in 0..N {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Advances the quadrotor by `dt` with `u` and `d_force` held constant.
pub fn rk4_step(
    s: &QuadState,
    u: &ControlInput,
    p: &PhysParams,
    d_force: f64,
    dt: f64,
    model: Model,
) -> Result<QuadState, DynamicsError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(DynamicsError::InvalidStep(dt));
    }
    check_inputs(s, u, d_force)?;
    let c = p.coeffs();
    let next = match model {
        Model::Full => rk4(&s.0, dt, |x| full_rhs(x, u, p, &c, d_force)),
        Model::Simplified => rk4(&s.0, dt, |x| simplified_rhs(x, u, p, &c, d_force)),
    };
    let next = QuadState(next);
    if !next.is_finite() {
        return Err(DynamicsError::IntegrationBlowup { step: 0 });
    }
    Ok(next)
}

pub fn mix_motors(w: &MotorSpeeds, p: &PhysParams) -> Result<ControlInput, DynamicsError> {
    if w.0.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(DynamicsError::NonFinite {
            what: "motor speeds",
        });
    }
    let [a, b, c, d] = w.0.map(|v| v * v);
    let (kf, km, l) = (p.kf, p.km, p.arm);
    Ok(ControlInput {
        u1: kf * (a + b + c + d),
        u2: kf * l * (b - d),
        u3: kf * l * (c - a),
        u4: km * (a - b + c - d),
    })
}

/// Inverts the mixing matrix in closed form.
pub fn unmix_motors(u: &ControlInput, p: &PhysParams) -> Result<MotorSpeeds, DynamicsError> {
    if !u.is_finite() {
        return Err(DynamicsError::NonFinite {
            what: "control input",
        });
    }
    let sum = u.u1 / p.kf;
    let alt = u.u4 / p.km;
    let r2 = u.u2 / (p.kf * p.arm);
    let r3 = u.u3 / (p.kf * p.arm);
    let odd = 0.5 * (sum + alt);
    let even = 0.5 * (sum - alt);
    let sq = [
        0.5 * (odd - r3),
        0.5 * (even + r2),
        0.5 * (odd + r3),
        0.5 * (even - r2),
    ];
    // Roundoff can push an exactly-zero rotor slightly negative.
    let tol = 1e-12 * sum.abs().max(1.0);
    let mut w = [0.0; 4];
    for (i, &v) in sq.iter().enumerate() {
        if v < -tol {
            return Err(DynamicsError::InfeasibleThrust {
                rotor: i + 1,
                value: v,
            });
        }
        w[i] = v.max(0.0).sqrt();
    }
    Ok(MotorSpeeds(w))
}

/// Discrete altitude model around hover: force deviation (N) in, z out.
///
/// Exact zero-order-hold discretization of `m z̈ = δu`.
pub fn z_nominal_model(p: &PhysParams, dt: f64) -> Result<StateSpace, DynamicsError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(DynamicsError::InvalidStep(dt));
    }
    p.validate()?;
    let a = DMatrix::from_row_slice(2, 2, &[1.0, dt, 0.0, 1.0]);
    let b = DMatrix::from_row_slice(2, 1, &[0.5 * dt * dt / p.mass, dt / p.mass]);
    let c = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
    let d = DMatrix::zeros(1, 1);
    Ok(StateSpace::new(a, b, c, d).expect("fixed 2x2 realization"))
}
