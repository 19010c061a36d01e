use super::{HarnessError, LogRow};
use crate::config::Config;
use crate::control::{Controller, Reference};
use crate::dob::{compensated_input, Dob, DobConfig};
use crate::dynamics::{rk4_step, z_nominal_model, ControlInput, QuadState};

/// Torque limit (N·m).
pub const TORQUE_LIMIT: f64 = 1.0;
/// Thrust limit as a multiple of hover thrust.
pub const THRUST_LIMIT: f64 = 4.0;

/// Signals driving one closed-loop flight.
pub struct FlightInputs<'a> {
    pub start: [f64; 3],
    pub reference: &'a dyn Fn(f64) -> Reference,
    /// True load force per sample; also fixes the number of samples.
    pub d: &'a [f64],
    /// Offline feedforward correction.
    pub d_f: Option<&'a [f64]>,
    /// Predicted nominal error, logged only.
    pub e_p: Option<&'a [f64]>,
    pub dob: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Flight {
    pub rows: Vec<LogRow>,
    /// First sample whose successor could not be computed.
    pub diverged_at: Option<usize>,
}

/// Closed-loop simulation. Construction errors are returned; numerical
/// failures during flight truncate the log and set `diverged_at`.
pub fn fly(cfg: &Config, inputs: &FlightInputs) -> Result<Flight, crate::Error> {
    let p = cfg.phys();
    p.validate()?;
    let dt = cfg.dt;
    let n = inputs.d.len();
    for (name, s) in [("d_f", inputs.d_f), ("e_p", inputs.e_p)] {
        if let Some(s) = s {
            if s.len() != n {
                return Err(HarnessError::LengthMismatch {
                    signal: name,
                    got: s.len(),
                    expected: n,
                }
                .into());
            }
        }
    }
    let mut ctrl = Controller::new(p, cfg.gains(), dt);
    let gn = z_nominal_model(&p, dt)?;
    let mut dob = Dob::new(
        &gn,
        DobConfig {
            enabled: inputs.dob,
            ..cfg.dob()
        },
    )?;
    let hover = p.hover_thrust();
    let mut s = QuadState::at_rest(inputs.start);
    let mut u_prev = 0.0;
    let mut rows = Vec::with_capacity(n);
    let mut diverged_at = None;
    for k in 0..n {
        let t = k as f64 * dt;
        let r = (inputs.reference)(t);
        let u_bar = match ctrl.step(&s, &r) {
            Ok(u) => u,
            Err(_) => {
                diverged_at = Some(k.saturating_sub(1));
                break;
            }
        };
        let z = s.0[10];
        let sig = match dob.step(z - r.pos[2], u_prev) {
            Ok(sig) => sig,
            Err(_) => {
                diverged_at = Some(k.saturating_sub(1));
                break;
            }
        };
        let d_hat = dob.applied(sig.d_hat, hover);
        let d_f = inputs.d_f.map_or(0.0, |v| v[k]);
        let u = ControlInput {
            u1: compensated_input(u_bar.u1, d_hat, d_f).clamp(0.0, THRUST_LIMIT * hover),
            u2: u_bar.u2.clamp(-TORQUE_LIMIT, TORQUE_LIMIT),
            u3: u_bar.u3.clamp(-TORQUE_LIMIT, TORQUE_LIMIT),
            u4: u_bar.u4.clamp(-TORQUE_LIMIT, TORQUE_LIMIT),
        };
        u_prev = u.u1 - hover;
        let x = &s.0;
        rows.push(LogRow {
            t,
            rx: r.pos[0],
            ry: r.pos[1],
            rz: r.pos[2],
            x: x[6],
            y: x[8],
            z,
            vx: x[7],
            vy: x[9],
            vz: x[11],
            u1: u.u1,
            u2: u.u2,
            u3: u.u3,
            u4: u.u4,
            d: inputs.d[k],
            d_hat,
            d_f,
            e: r.pos[2] - z,
            e_p: inputs.e_p.map_or(0.0, |v| v[k]),
        });
        if k + 1 == n {
            break;
        }
        match rk4_step(&s, &u, &p, inputs.d[k], dt, cfg.model) {
            Ok(next) => s = next,
            Err(_) => {
                diverged_at = Some(k);
                break;
            }
        }
    }
    Ok(Flight { rows, diverged_at })
}

/// Observer estimate while holding position at (1, 1, 1) under the load
/// force `d`.
pub fn hover_response(cfg: &Config, d: &[f64]) -> Result<Vec<f64>, crate::Error> {
    let hold = [1.0; 3];
    let reference = move |_t: f64| Reference::hold(hold);
    let flight = fly(
        cfg,
        &FlightInputs {
            start: hold,
            reference: &reference,
            d,
            d_f: None,
            e_p: None,
            dob: true,
        },
    )?;
    if let Some(step) = flight.diverged_at {
        return Err(HarnessError::Diverged { step }.into());
    }
    Ok(flight.rows.iter().map(|r| r.d_hat).collect())
}
