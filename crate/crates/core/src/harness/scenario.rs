use std::fmt;
use std::str::FromStr;

use super::HarnessError;
use crate::config::Config;
use crate::control::Reference;
use crate::perception::{form_output_profile, DisturbanceProfile, DEFAULT_EDGES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Case {
    NoDob,
    ConventionalDob,
    ImageDob,
}

impl Case {
    pub const ALL: [Case; 3] = [Case::NoDob, Case::ConventionalDob, Case::ImageDob];

    pub fn name(self) -> &'static str {
        match self {
            Case::NoDob => "nodob",
            Case::ConventionalDob => "cdob",
            Case::ImageDob => "idob",
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Case {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Case::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| HarnessError::InvalidScenario(format!("unknown case {s:?}")))
    }
}

/// Take off, climb to the waypoint, hover, grasp, carry, release, settle.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub start: [f64; 3],
    pub waypoint: [f64; 3],
    /// Duration of the quintic climb (s).
    pub t_climb: f64,
    /// Grasp start, grasp end, release start, release end (s).
    pub edges: [f64; 4],
    pub duration: f64,
    /// True disturbance class.
    pub class: usize,
    pub case: Case,
    /// Hover time at the waypoint before the box is imaged (s).
    pub hover_before_imaging: f64,
    /// Forces the class used by the prediction instead of classifying.
    pub predicted_class: Option<usize>,
    /// Seed for the rendered box image.
    pub seed: u64,
}

impl Scenario {
    pub fn new(class: usize, case: Case) -> Self {
        Self {
            start: [0.0; 3],
            waypoint: [1.0; 3],
            t_climb: 3.0,
            edges: DEFAULT_EDGES,
            duration: 21.0,
            class,
            case,
            hover_before_imaging: 1.0,
            predicted_class: None,
            seed: 0,
        }
    }

    pub fn with_case(&self, case: Case) -> Self {
        Self {
            case,
            ..self.clone()
        }
    }

    pub fn validate(&self, n_classes: usize) -> Result<(), HarnessError> {
        let [gs, _, rs, re] = self.edges;
        let bad = |msg: String| Err(HarnessError::InvalidScenario(msg));
        if !(0.0 < gs && gs < rs && re <= self.duration) {
            return bad(format!(
                "need 0 < grasp {gs} < release {rs} and release end {re} <= duration {}",
                self.duration
            ));
        }
        if !(self.t_climb > 0.0
            && self.hover_before_imaging >= 0.0
            && self.t_climb + self.hover_before_imaging <= gs)
        {
            return bad(format!(
                "climb {} s plus hover {} s must finish before the grasp at {gs} s",
                self.t_climb, self.hover_before_imaging
            ));
        }
        for k in std::iter::once(self.class).chain(self.predicted_class) {
            if k == 0 || k > n_classes {
                return bad(format!("class {k} outside 1..={n_classes}"));
            }
        }
        Ok(())
    }

    pub fn n_samples(&self, dt: f64) -> usize {
        (self.duration / dt).round() as usize + 1
    }

    /// Time at which the box is imaged.
    pub fn t_imaging(&self) -> f64 {
        self.t_climb + self.hover_before_imaging
    }

    pub fn reference(&self, t: f64) -> Reference {
        let mut r = Reference::default();
        for i in 0..3 {
            let (p, v, a) = quintic(self.start[i], self.waypoint[i], self.t_climb, t);
            r.pos[i] = p;
            r.vel[i] = v;
            r.acc[i] = a;
        }
        r
    }

    pub fn reference_z(&self, dt: f64) -> Vec<f64> {
        (0..self.n_samples(dt))
            .map(|k| self.reference(k as f64 * dt).pos[2])
            .collect()
    }

    /// Unit-class profile on this scenario's time grid.
    pub fn base_profile(&self, cfg: &Config) -> Result<DisturbanceProfile, HarnessError> {
        DisturbanceProfile::new(cfg.dt, self.duration, cfg.base_plateau, self.edges)
            .map_err(|e| HarnessError::InvalidScenario(e.to_string()))
    }

    /// The true load force.
    pub fn disturbance(&self, cfg: &Config) -> Result<DisturbanceProfile, HarnessError> {
        form_output_profile(self.class, &self.base_profile(cfg)?)
            .map_err(|e| HarnessError::InvalidScenario(e.to_string()))
    }
}

/// Rest-to-rest quintic from `p0` to `p1` over `t_f`; position, velocity
/// and acceleration at `t`. Holds `p1` afterwards.
pub fn quintic(p0: f64, p1: f64, t_f: f64, t: f64) -> (f64, f64, f64) {
    let s = (t / t_f).clamp(0.0, 1.0);
    let dp = p1 - p0;
    let (s2, s3) = (s * s, s * s * s);
    (
        p0 + dp * (10.0 * s3 - 15.0 * s3 * s + 6.0 * s3 * s2),
        dp * (30.0 * s2 - 60.0 * s3 + 30.0 * s2 * s2) / t_f,
        dp * (60.0 * s - 180.0 * s2 + 120.0 * s3) / (t_f * t_f),
    )
}
