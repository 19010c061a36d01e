use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use super::{build_error_system, peak_gain, two_norm, LearnError, LearningFilter, LoopBlocks};
use crate::linalg::spectral_radius;
use crate::par::{self, Parallelism};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisOptions {
    pub n_taps: usize,
    /// Singular values below this fraction of the largest are dropped.
    pub svd_rtol: f64,
    pub max_iters: usize,
    pub n_grid: usize,
    pub barrier_weight: f64,
    pub parallelism: Parallelism,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self {
            n_taps: 8,
            svd_rtol: 1e-4,
            max_iters: 400,
            n_grid: 2048,
            barrier_weight: 1e-6,
            parallelism: Parallelism::default(),
        }
    }
}

/// A synthesized filter with its certificates.
#[derive(Debug, Clone, PartialEq)]
pub struct Synthesis {
    pub filter: LearningFilter,
    pub gamma: f64,
    pub omega: f64,
    pub rho: f64,
    /// `‖E e_p‖ / ‖e_p‖` on the design signal.
    pub design_ratio: f64,
    /// Number of singular directions kept in the fit.
    pub rank: usize,
}

impl Synthesis {
    pub fn is_contractive(&self) -> bool {
        self.rho < 1.0 && self.gamma < 1.0
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthesisError {
    #[error("need at least one tap")]
    ZeroTaps,
    #[error("design error signal is empty or identically zero")]
    EmptyDesign,
    #[error("observer loop is unstable (spectral radius {rho})")]
    LoopUnstable { rho: f64 },
    #[error("no contractive filter found: best peak gain {}, spectral radius {}", best.gamma, best.rho)]
    NotContractive { best: Box<Synthesis> },
    #[error(transparent)]
    Learn(#[from] LearnError),
}

impl SynthesisError {
    /// The best filter found, when the search ran to completion.
    pub fn best(&self) -> Option<&Synthesis> {
        match self {
            SynthesisError::NotContractive { best } => Some(best),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iters: usize,
}

/// Nelder-Mead simplex minimization with standard coefficients.
///
/// The initial simplex and shrink steps are evaluated through `par`.
pub fn nelder_mead<F>(
    f: F,
    x0: &[f64],
    step: f64,
    max_iters: usize,
    ftol: f64,
    mode: Parallelism,
) -> NelderMeadResult
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    let n = x0.len();
    let mut pts: Vec<Vec<f64>> = (0..=n)
        .map(|i| {
            let mut p = x0.to_vec();
            if i > 0 {
                p[i - 1] += step;
            }
            p
        })
        .collect();
    let mut vals = par::map(mode, &pts, |p| f(p));
    let mut iters = 0;
    while iters < max_iters {
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = idx.iter().map(|&i| pts[i].clone()).collect();
        vals = idx.iter().map(|&i| vals[i]).collect();
        if (vals[n] - vals[0]).abs() <= ftol * (vals[0].abs() + 1e-300) {
            break;
        }
        iters += 1;
        let centroid: Vec<f64> = (0..n)
            .map(|j| pts[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            (0..n)
                .map(|j| centroid[j] + t * (pts[n][j] - centroid[j]))
                .collect()
        };
        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = f(&xe);
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < vals[n] {
            let x = along(-0.5);
            let v = f(&x);
            (x, v)
        } else {
            let x = along(0.5);
            let v = f(&x);
            (x, v)
        };
        if fc < vals[n].min(fr) {
            pts[n] = xc;
            vals[n] = fc;
            continue;
        }
        let best = pts[0].clone();
        let shrunk: Vec<Vec<f64>> = pts[1..]
            .iter()
            .map(|p| (0..n).map(|j| best[j] + 0.5 * (p[j] - best[j])).collect())
            .collect();
        let fs = par::map(mode, &shrunk, |p| f(p));
        for (i, (p, v)) in shrunk.into_iter().zip(fs).enumerate() {
            pts[i + 1] = p;
            vals[i + 1] = v;
        }
    }
    let best = (0..=n)
        .min_by(|&a, &b| vals[a].total_cmp(&vals[b]))
        .unwrap();
    NelderMeadResult {
        x: pts[best].clone(),
        fx: vals[best],
        iters,
    }
}

fn unit_filter(n_taps: usize, i: usize, dt: f64) -> LearningFilter {
    let mut taps = vec![0.0; n_taps + 1];
    taps[i] = 1.0;
    LearningFilter::new(taps, dt)
}

/// Designs an FIR learning filter for the loop in `blocks`.
///
/// The taps are fitted so that `E e_p` is small on the design error
/// `design_ep` (truncated-SVD least squares), then polished by Nelder-Mead
/// in the retained subspace with a barrier on the spectral radius. The
/// result is returned as `Ok` only when both stability and `γ < 1` hold;
/// otherwise the best filter travels inside `NotContractive`.
pub fn synthesize_l(
    blocks: &LoopBlocks,
    design_ep: &[f64],
    opts: &SynthesisOptions,
) -> Result<Synthesis, SynthesisError> {
    let n = opts.n_taps;
    if n == 0 {
        return Err(SynthesisError::ZeroTaps);
    }
    let ep_norm = two_norm(design_ep);
    if design_ep.is_empty() || ep_norm == 0.0 {
        return Err(SynthesisError::EmptyDesign);
    }
    let dt = blocks.gn.a[(0, 1)];
    let build = |l: &LearningFilter| {
        build_error_system(
            &blocks.gn,
            &blocks.d,
            &blocks.q,
            &blocks.c,
            &l.realization(),
        )
    };

    let e0 = build(&LearningFilter::zero(n, dt))?;
    let rho0 = spectral_radius(&e0.a).map_err(LearnError::from)?;
    if rho0 >= 1.0 {
        return Err(SynthesisError::LoopUnstable { rho: rho0 });
    }

    // Column i: response of e - e_p to the correction z^{-i} e_p.
    let cols: Vec<Result<Vec<f64>, LearnError>> = par::map_range(opts.parallelism, n + 1, |i| {
        let e = build(&unit_filter(n, i, dt))?;
        Ok(e.simulate(design_ep)
            .iter()
            .zip(design_ep)
            .map(|(a, b)| a - b)
            .collect())
    });
    let m = design_ep.len();
    let mut phi = DMatrix::zeros(m, n + 1);
    for (j, col) in cols.into_iter().enumerate() {
        let col = col?;
        for i in 0..m {
            phi[(i, j)] = col[i];
        }
    }
    let target = -DVector::from_column_slice(design_ep);
    let svd = phi.clone().svd(true, true);
    let u = svd.u.as_ref().expect("requested U");
    let vt = svd.v_t.as_ref().expect("requested V^T");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > opts.svd_rtol * smax)
        .collect();
    let mut c0 = DVector::zeros(n + 1);
    for &i in &keep {
        let coef = u.column(i).dot(&target) / svd.singular_values[i];
        c0 += vt.row(i).transpose() * coef;
    }
    let basis: Vec<DVector<f64>> = keep.iter().map(|&i| vt.row(i).transpose()).collect();

    let taps_of = |y: &[f64]| -> Vec<f64> {
        let mut c = c0.clone();
        for (b, yi) in basis.iter().zip(y) {
            c += b * *yi;
        }
        c.iter().copied().collect()
    };
    let objective = |y: &[f64]| -> f64 {
        let taps = taps_of(y);
        let resid = &phi * DVector::from_column_slice(&taps) - &target;
        let ratio = resid.norm() / ep_norm;
        let rho = build(&LearningFilter::new(taps, dt))
            .ok()
            .and_then(|e| spectral_radius(&e.a).ok())
            .unwrap_or(f64::INFINITY);
        if rho >= 1.0 {
            return f64::INFINITY;
        }
        ratio + opts.barrier_weight / (1.0 - rho)
    };
    let step = 0.05 * c0.norm().max(1.0);
    let nm = nelder_mead(
        objective,
        &vec![0.0; basis.len()],
        step,
        opts.max_iters,
        1e-12,
        opts.parallelism,
    );
    let filter = LearningFilter::new(taps_of(&nm.x), dt);

    let e = build(&filter)?;
    let rho = spectral_radius(&e.a).map_err(LearnError::from)?;
    let pg = peak_gain(&e, opts.n_grid)?;
    let design_ratio = two_norm(&e.simulate(design_ep)) / ep_norm;
    let out = Synthesis {
        filter,
        gamma: pg.gamma,
        omega: pg.omega,
        rho,
        design_ratio,
        rank: keep.len(),
    };
    if out.is_contractive() {
        Ok(out)
    } else {
        Err(SynthesisError::NotContractive {
            best: Box::new(out),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nelder_mead_rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = nelder_mead(f, &[-1.2, 1.0], 0.5, 2000, 1e-15, Parallelism::Sequential);
        assert!(
            (r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4,
            "{:?}",
            r
        );
    }

    #[test]
    fn nelder_mead_modes_agree() {
        let f = |x: &[f64]| {
            x.iter()
                .enumerate()
                .map(|(i, v)| (i as f64 + 1.0) * (v - 0.3).powi(2))
                .sum::<f64>()
        };
        let a = nelder_mead(f, &[0.0; 4], 0.2, 300, 1e-14, Parallelism::Sequential);
        let b = nelder_mead(f, &[0.0; 4], 0.2, 300, 1e-14, Parallelism::Parallel);
        assert_eq!(a, b);
    }
}
