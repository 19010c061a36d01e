use std::f64::consts::PI;

use num_complex::Complex64;

use super::{ErrorSystem, LearnError};
use crate::linalg::{spectral_radius, statespace_transfer};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakGain {
    pub gamma: f64,
    pub omega: f64,
}

/// Peak magnitude of `E` on the unit circle.
///
/// Samples `ω = πi/n` for `i = 0..=n`, then resamples four times denser
/// around the coarse maximum.
pub fn peak_gain(e: &ErrorSystem, n_grid: usize) -> Result<PeakGain, LearnError> {
    if n_grid < 2 {
        return Err(LearnError::GridTooSmall(n_grid));
    }
    let rho = spectral_radius(&e.a)?;
    if rho >= 1.0 {
        return Err(LearnError::Unstable { rho });
    }
    let mag = |w: f64| -> Result<f64, LearnError> {
        Ok(statespace_transfer(&e.a, &e.b, &e.c, e.d, Complex64::from_polar(1.0, w))?.norm())
    };
    let h = PI / n_grid as f64;
    let mut best = PeakGain {
        gamma: -1.0,
        omega: 0.0,
    };
    let mut best_i = 0;
    for i in 0..=n_grid {
        let w = h * i as f64;
        let g = mag(w)?;
        if g > best.gamma {
            best = PeakGain { gamma: g, omega: w };
            best_i = i;
        }
    }
    let lo = h * best_i.saturating_sub(1) as f64;
    let hi = (h * (best_i + 1) as f64).min(PI);
    let fine = h / 4.0;
    let mut w = lo;
    while w <= hi + 1e-15 {
        let g = mag(w)?;
        if g > best.gamma {
            best = PeakGain { gamma: g, omega: w };
        }
        w += fine;
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learnfilter::build_error_system;
    use crate::linalg::StateSpace;
    use nalgebra::DMatrix;

    fn raw(a: f64, b: f64, c: f64, d: f64) -> ErrorSystem {
        ErrorSystem {
            a: DMatrix::from_element(1, 1, a),
            b: DMatrix::from_element(1, 1, b),
            c: DMatrix::from_element(1, 1, c),
            d,
            block_dims: [1, 0, 0, 0, 0],
        }
    }

    #[test]
    fn feedthrough_only() {
        let e = raw(0.2, 1.0, 0.0, 1.0);
        assert!((peak_gain(&e, 64).unwrap().gamma - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pure_delay_is_all_pass() {
        for n in [8, 64, 513] {
            let e = raw(0.0, 1.0, 1.0, 0.0);
            assert!((peak_gain(&e, n).unwrap().gamma - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lag_peaks_at_dc() {
        let e = raw(0.5, 1.0, 1.0, 0.0);
        let p = peak_gain(&e, 256).unwrap();
        assert!((p.gamma - 2.0).abs() < 1e-12);
        assert_eq!(p.omega, 0.0);
    }

    #[test]
    fn unstable_rejected() {
        let e = raw(1.5, 1.0, 1.0, 0.0);
        assert!(matches!(
            peak_gain(&e, 16),
            Err(LearnError::Unstable { .. })
        ));
    }

    #[test]
    fn zero_filter_gives_unit_gain() {
        let g = StateSpace::scalar(0.5, 1.0, 1.0, 0.0);
        let z = StateSpace::scalar(0.0, 0.0, 0.0, 0.0);
        let e = build_error_system(&g, &z, &z, &z, &z).unwrap();
        assert!((peak_gain(&e, 128).unwrap().gamma - 1.0).abs() < 1e-12);
    }
}
