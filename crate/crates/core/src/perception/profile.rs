use super::PerceptionError;

/// Load force over time: zero, linear ramp, plateau, linear ramp, zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceProfile {
    pub dt: f64,
    pub samples: Vec<f64>,
    pub t_grasp_start: f64,
    pub t_grasp_end: f64,
    pub t_release_start: f64,
    pub t_release_end: f64,
}

/// Default transition instants (s).
pub const DEFAULT_EDGES: [f64; 4] = [5.0, 6.0, 15.0, 16.0];

/// Unit trapezoid at time `t`.
pub fn trapezoid(t: f64, edges: [f64; 4]) -> f64 {
    let [gs, ge, rs, re] = edges;
    if t <= gs || t >= re {
        0.0
    } else if t < ge {
        (t - gs) / (ge - gs)
    } else if t <= rs {
        1.0
    } else {
        (re - t) / (re - rs)
    }
}

impl DisturbanceProfile {
    pub fn new(
        dt: f64,
        duration: f64,
        plateau: f64,
        edges: [f64; 4],
    ) -> Result<Self, PerceptionError> {
        let [gs, ge, rs, re] = edges;
        if !(dt > 0.0 && 0.0 <= gs && gs < ge && ge <= rs && rs < re && re <= duration) {
            return Err(PerceptionError::InvalidArgument(format!(
                "profile edges {edges:?} must be increasing within [0, {duration}]"
            )));
        }
        let n = (duration / dt).round() as usize + 1;
        let samples = (0..n)
            .map(|k| plateau * trapezoid(k as f64 * dt, edges))
            .collect();
        Ok(Self {
            dt,
            samples,
            t_grasp_start: gs,
            t_grasp_end: ge,
            t_release_start: rs,
            t_release_end: re,
        })
    }

    /// Grasp at 5 s, release at 15 s, one-second ramps.
    pub fn base(dt: f64, duration: f64, plateau: f64) -> Result<Self, PerceptionError> {
        Self::new(dt, duration, plateau, DEFAULT_EDGES)
    }

    pub fn edges(&self) -> [f64; 4] {
        [
            self.t_grasp_start,
            self.t_grasp_end,
            self.t_release_start,
            self.t_release_end,
        ]
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }

    /// Same edges, new samples.
    pub fn with_samples(&self, samples: Vec<f64>) -> Self {
        Self {
            samples,
            ..self.clone()
        }
    }

    /// Indices whose time lies on the plateau.
    pub fn plateau_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.samples.len()).filter(move |&k| {
            let t = k as f64 * self.dt;
            t >= self.t_grasp_end - 1e-9 && t <= self.t_release_start + 1e-9
        })
    }
}

/// The output-disturbance profile for a predicted weight class.
pub fn form_output_profile(
    weight_class: usize,
    base: &DisturbanceProfile,
) -> Result<DisturbanceProfile, PerceptionError> {
    if weight_class == 0 {
        return Err(PerceptionError::InvalidArgument(
            "weight classes start at 1".into(),
        ));
    }
    Ok(base.scaled(weight_class as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> DisturbanceProfile {
        DisturbanceProfile::base(0.01, 21.0, -1.5).unwrap()
    }

    #[test]
    fn shape_invariants() {
        let p = base();
        assert_eq!(p.len(), 2101);
        for (k, v) in p.samples.iter().enumerate() {
            let t = k as f64 * 0.01;
            if t <= 5.0 || t >= 16.0 {
                assert_eq!(*v, 0.0, "t = {t}");
            }
        }
        assert!(p.plateau_indices().all(|k| p.samples[k] == -1.5));
        assert!((p.samples[550] + 0.75).abs() < 1e-9);
        assert!((p.samples[1550] + 0.75).abs() < 1e-9);
    }

    #[test]
    fn class_scaling() {
        let p = base();
        assert_eq!(form_output_profile(1, &p).unwrap(), p);
        let p3 = form_output_profile(3, &p).unwrap();
        assert_eq!(p3.edges(), [5.0, 6.0, 15.0, 16.0]);
        for (a, b) in p3.samples.iter().zip(&p.samples) {
            assert_eq!(*a, 3.0 * b);
        }
        let zero = DisturbanceProfile::base(0.01, 21.0, 0.0).unwrap();
        assert!(form_output_profile(4, &zero)
            .unwrap()
            .samples
            .iter()
            .all(|v| *v == 0.0));
        assert!(form_output_profile(0, &p).is_err());
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(DisturbanceProfile::new(0.01, 21.0, 1.0, [6.0, 5.0, 15.0, 16.0]).is_err());
        assert!(DisturbanceProfile::new(0.01, 10.0, 1.0, DEFAULT_EDGES).is_err());
    }
}
