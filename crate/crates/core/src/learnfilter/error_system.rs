use nalgebra::DMatrix;

use super::LearnError;
use crate::linalg::StateSpace;

/// LTI map from the predicted error `e_p` to the actual error `e`.
///
/// States are ordered as the plant, `D`, `Q`, `C` and `L` differences.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: f64,
    pub block_dims: [usize; 5],
}

impl ErrorSystem {
    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn to_state_space(&self) -> StateSpace {
        StateSpace::new(
            self.a.clone(),
            self.b.clone(),
            self.c.clone(),
            DMatrix::from_element(1, 1, self.d),
        )
        .expect("error system blocks are consistent by construction")
    }

    /// Runs `E` from zero state over `e_p`.
    pub fn simulate(&self, e_p: &[f64]) -> Vec<f64> {
        self.to_state_space().simulate(e_p)
    }
}

fn check_siso(blk: &StateSpace, name: &'static str) -> Result<(), LearnError> {
    if !blk.is_siso() {
        return Err(LearnError::Dimension {
            block: name,
            detail: format!(
                "expected SISO, got {} in / {} out",
                blk.inputs(),
                blk.outputs()
            ),
        });
    }
    Ok(())
}

/// Assembles `E` from the plant model, the observer blocks `D` and `Q`,
/// the controller `C` and the learning filter `L`.
pub fn build_error_system(
    gn: &StateSpace,
    d_blk: &StateSpace,
    q_blk: &StateSpace,
    c_blk: &StateSpace,
    l_blk: &StateSpace,
) -> Result<ErrorSystem, LearnError> {
    for (blk, name) in [
        (gn, "G"),
        (d_blk, "D"),
        (q_blk, "Q"),
        (c_blk, "C"),
        (l_blk, "L"),
    ] {
        check_siso(blk, name)?;
    }
    if gn.d[(0, 0)] != 0.0 {
        return Err(LearnError::Dimension {
            block: "G",
            detail: "plant must be strictly proper".into(),
        });
    }
    if q_blk.d[(0, 0)] != 0.0 {
        return Err(LearnError::Dimension {
            block: "Q",
            detail: "Q must be strictly proper".into(),
        });
    }
    let dims = [
        gn.order(),
        d_blk.order(),
        q_blk.order(),
        c_blk.order(),
        l_blk.order(),
    ];
    let mut off = [0usize; 5];
    for i in 1..5 {
        off[i] = off[i - 1] + dims[i - 1];
    }
    let n: usize = dims.iter().sum();

    let (ag, bg, cg) = (&gn.a, &gn.b, &gn.c);
    let (ad, bd, cd, dd) = (&d_blk.a, &d_blk.b, &d_blk.c, d_blk.d[(0, 0)]);
    let (aq, bq, cq) = (&q_blk.a, &q_blk.b, &q_blk.c);
    let (ac, bc, cc, dc) = (&c_blk.a, &c_blk.b, &c_blk.c, c_blk.d[(0, 0)]);
    let (al, bl, cl, dl) = (&l_blk.a, &l_blk.b, &l_blk.c, l_blk.d[(0, 0)]);

    let mut a = DMatrix::zeros(n, n);
    let mut put = |r: usize, c: usize, m: DMatrix<f64>| {
        if m.nrows() > 0 && m.ncols() > 0 {
            a.view_mut((off[r], off[c]), (m.nrows(), m.ncols()))
                .copy_from(&m);
        }
    };
    let fb = dc + dd;
    // Plant row: the plant input difference is ū − α + β − d̂ᶠ.
    put(0, 0, ag - bg * cg * fb);
    put(0, 1, -(bg * cd));
    put(0, 2, bg * cq);
    put(0, 3, bg * cc);
    put(0, 4, -(bg * cl));
    // D sees the plant output.
    put(1, 0, bd * cg);
    put(1, 1, ad.clone());
    // Q sees the plant input.
    put(2, 0, -(bq * cg) * fb);
    put(2, 1, -(bq * cd));
    put(2, 2, aq + bq * cq);
    put(2, 3, bq * cc);
    put(2, 4, -(bq * cl));
    // C sees the tracking error.
    put(3, 0, -(bc * cg));
    put(3, 3, ac.clone());
    put(4, 4, al.clone());

    let mut b = DMatrix::zeros(n, 1);
    let mut putb = |r: usize, m: DMatrix<f64>| {
        if m.nrows() > 0 {
            b.view_mut((off[r], 0), (m.nrows(), 1)).copy_from(&m);
        }
    };
    putb(0, -(bg * dl));
    putb(2, -(bq * dl));
    putb(4, bl.clone());

    let mut c = DMatrix::zeros(1, n);
    c.view_mut((0, 0), (1, dims[0])).copy_from(&(-cg));

    Ok(ErrorSystem {
        a,
        b,
        c,
        d: 1.0,
        block_dims: dims,
    })
}
