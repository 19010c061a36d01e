use nalgebra::DMatrix;

use crate::linalg::StateSpace;

/// FIR learning filter `L(z) = t₀ + t₁ z⁻¹ + … + tₙ z⁻ⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningFilter {
    /// Feedthrough first, then the delayed taps.
    pub taps: Vec<f64>,
    pub dt: f64,
}

impl LearningFilter {
    pub fn new(taps: Vec<f64>, dt: f64) -> Self {
        assert!(
            !taps.is_empty(),
            "a learning filter needs at least the feedthrough"
        );
        Self { taps, dt }
    }

    pub fn zero(n_taps: usize, dt: f64) -> Self {
        Self::new(vec![0.0; n_taps + 1], dt)
    }

    pub fn n_taps(&self) -> usize {
        self.taps.len() - 1
    }

    /// Shift-register realization; `A_L` is nilpotent.
    pub fn realization(&self) -> StateSpace {
        let n = self.n_taps();
        let mut a = DMatrix::zeros(n, n);
        for i in 1..n {
            a[(i, i - 1)] = 1.0;
        }
        let mut b = DMatrix::zeros(n, 1);
        if n > 0 {
            b[(0, 0)] = 1.0;
        }
        let c = DMatrix::from_row_slice(1, n, &self.taps[1..]);
        let d = DMatrix::from_element(1, 1, self.taps[0]);
        StateSpace::new(a, b, c, d).expect("shift register is consistent")
    }

    /// Direct convolution with `input`, zero initial state.
    pub fn apply(&self, input: &[f64]) -> Vec<f64> {
        (0..input.len())
            .map(|k| {
                self.taps
                    .iter()
                    .enumerate()
                    .take(k + 1)
                    .map(|(i, t)| t * input[k - i])
                    .sum()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn realization_matches_convolution() {
        let l = LearningFilter::new(vec![0.5, -1.0, 2.0, 0.25], 0.01);
        let x: Vec<f64> = (0..30).map(|k| (k as f64 * 0.7).sin()).collect();
        for (a, b) in l.realization().simulate(&x).iter().zip(l.apply(&x)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn unit_shift() {
        let l = LearningFilter::new(vec![0.0, 1.0], 0.01);
        assert_eq!(l.apply(&[1.0, 2.0, 3.0]), vec![0.0, 1.0, 2.0]);
        let ev = crate::linalg::spectral_radius(&l.realization().a).unwrap();
        assert_eq!(ev, 0.0);
    }
}
