use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::LinalgError;

/// Discrete LTI block `x(k+1) = A x(k) + B u(k)`, `y(k) = C x(k) + D u(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    state: DVector<f64>,
}

impl StateSpace {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
    ) -> Result<Self, LinalgError> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(LinalgError::NotSquare {
                rows: a.nrows(),
                cols: a.ncols(),
            });
        }
        if b.nrows() != n {
            return Err(LinalgError::dims(
                "B",
                format!("{} rows, A is {n}x{n}", b.nrows()),
            ));
        }
        if c.ncols() != n {
            return Err(LinalgError::dims(
                "C",
                format!("{} cols, A is {n}x{n}", c.ncols()),
            ));
        }
        if d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(LinalgError::dims(
                "D",
                format!(
                    "{}x{}, expected {}x{}",
                    d.nrows(),
                    d.ncols(),
                    c.nrows(),
                    b.ncols()
                ),
            ));
        }
        Ok(Self {
            a,
            b,
            c,
            d,
            state: DVector::zeros(n),
        })
    }

    /// First-order SISO block.
    pub fn scalar(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self::new(
            DMatrix::from_element(1, 1, a),
            DMatrix::from_element(1, 1, b),
            DMatrix::from_element(1, 1, c),
            DMatrix::from_element(1, 1, d),
        )
        .expect("1x1 blocks are always consistent")
    }

    /// SISO block from row-major slices.
    pub fn siso(n: usize, a: &[f64], b: &[f64], c: &[f64], d: f64) -> Result<Self, LinalgError> {
        if a.len() != n * n || b.len() != n || c.len() != n {
            return Err(LinalgError::dims(
                "siso",
                format!("order {n} with slices {}/{}/{}", a.len(), b.len(), c.len()),
            ));
        }
        Self::new(
            DMatrix::from_row_slice(n, n, a),
            DMatrix::from_row_slice(n, 1, b),
            DMatrix::from_row_slice(1, n, c),
            DMatrix::from_element(1, 1, d),
        )
    }

    /// Pure unit delay `[0, 1, 1, 0]`.
    pub fn delay() -> Self {
        Self::scalar(0.0, 1.0, 1.0, 0.0)
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn is_siso(&self) -> bool {
        self.inputs() == 1 && self.outputs() == 1
    }

    pub fn state(&self) -> &DVector<f64> {
        &self.state
    }

    pub fn set_state(&mut self, x: DVector<f64>) -> Result<(), LinalgError> {
        if x.len() != self.order() {
            return Err(LinalgError::dims(
                "state",
                format!("{} entries for order {}", x.len(), self.order()),
            ));
        }
        self.state = x;
        Ok(())
    }

    pub fn reset(&mut self) {
        self.state.fill(0.0);
    }

    /// `C x + D u` without advancing.
    pub fn output(&self, u: &DVector<f64>) -> DVector<f64> {
        &self.c * &self.state + &self.d * u
    }

    /// Output of a SISO block with its current state and zero feedthrough input.
    pub fn state_output(&self) -> f64 {
        (&self.c * &self.state)[0]
    }

    /// Computes the output for `u`, then advances the state.
    pub fn step(&mut self, u: &DVector<f64>) -> DVector<f64> {
        let y = self.output(u);
        self.state = &self.a * &self.state + &self.b * u;
        y
    }

    pub fn step_scalar(&mut self, u: f64) -> f64 {
        let uv = DVector::from_element(1, u);
        self.step(&uv)[0]
    }

    /// Runs a SISO block from zero state over `input`.
    pub fn simulate(&self, input: &[f64]) -> Vec<f64> {
        let mut blk = self.clone();
        blk.reset();
        input.iter().map(|&u| blk.step_scalar(u)).collect()
    }

    /// Series connection: `self` feeds `next`.
    pub fn series(&self, next: &StateSpace) -> Result<StateSpace, LinalgError> {
        if self.outputs() != next.inputs() {
            return Err(LinalgError::dims(
                "series",
                format!("{} outputs into {} inputs", self.outputs(), next.inputs()),
            ));
        }
        let (n1, n2) = (self.order(), next.order());
        let n = n1 + n2;
        let mut a = DMatrix::zeros(n, n);
        a.view_mut((0, 0), (n1, n1)).copy_from(&self.a);
        a.view_mut((n1, 0), (n2, n1))
            .copy_from(&(&next.b * &self.c));
        a.view_mut((n1, n1), (n2, n2)).copy_from(&next.a);
        let mut b = DMatrix::zeros(n, self.inputs());
        b.view_mut((0, 0), (n1, self.inputs())).copy_from(&self.b);
        b.view_mut((n1, 0), (n2, self.inputs()))
            .copy_from(&(&next.b * &self.d));
        let mut c = DMatrix::zeros(next.outputs(), n);
        c.view_mut((0, 0), (next.outputs(), n1))
            .copy_from(&(&next.d * &self.c));
        c.view_mut((0, n1), (next.outputs(), n2)).copy_from(&next.c);
        let d = &next.d * &self.d;
        StateSpace::new(a, b, c, d)
    }

    /// SISO transfer value `C (z I - A)^{-1} B + D` at `z = e^{jω}`.
    pub fn freq_response(&self, omega: f64) -> Result<Complex64, LinalgError> {
        transfer_at(
            &self.a,
            &self.b,
            &self.c,
            self.d[(0, 0)],
            Complex64::from_polar(1.0, omega),
        )
    }
}

/// SISO transfer value at an arbitrary complex point.
pub fn transfer_at(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d: f64,
    z: Complex64,
) -> Result<Complex64, LinalgError> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Complex64::new(d, 0.0));
    }
    let m = DMatrix::from_fn(n, n, |i, j| {
        let diag = if i == j { z } else { Complex64::new(0.0, 0.0) };
        diag - Complex64::new(a[(i, j)], 0.0)
    });
    let rhs = DVector::from_fn(n, |i, _| Complex64::new(b[(i, 0)], 0.0));
    let x = m.lu().solve(&rhs).ok_or(LinalgError::dims(
        "transfer",
        "zI - A singular on the evaluation point",
    ))?;
    let mut y = Complex64::new(d, 0.0);
    for i in 0..n {
        y += c[(0, i)] * x[i];
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delay_shifts_by_one() {
        let q = StateSpace::delay();
        assert_eq!(q.simulate(&[1.0, 2.0, 3.0]), vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn rejects_inconsistent_dims() {
        let r = StateSpace::new(
            DMatrix::zeros(2, 2),
            DMatrix::zeros(3, 1),
            DMatrix::zeros(1, 2),
            DMatrix::zeros(1, 1),
        );
        assert!(matches!(r, Err(LinalgError::DimensionMismatch { .. })));
    }

    #[test]
    fn series_matches_cascade() {
        let g1 = StateSpace::scalar(0.5, 1.0, 1.0, 0.2);
        let g2 = StateSpace::scalar(-0.3, 2.0, 0.7, 1.0);
        let s = g1.series(&g2).unwrap();
        let u: Vec<f64> = (0..20).map(|k| ((k * 7) % 5) as f64 - 2.0).collect();
        let direct = g2.simulate(&g1.simulate(&u));
        for (a, b) in s.simulate(&u).iter().zip(direct) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn lag_dc_gain() {
        let g = StateSpace::scalar(0.5, 1.0, 1.0, 0.0);
        let h = g.freq_response(0.0).unwrap();
        assert!((h.re - 2.0).abs() < 1e-12 && h.im.abs() < 1e-12);
    }
}
