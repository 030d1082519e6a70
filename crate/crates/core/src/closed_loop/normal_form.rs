use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use super::{no_disturbance, ClosedLoopError, History, NonlinearFunctionalDae};
use crate::linalg::Mat;
use crate::operators::{affine_combine, make_lti_filter, OperatorWarning, Part};

/// A linear system in the normal form for truncated vector relative degree:
///
/// ```text
/// η̇      = Q η + A₁₂ y
/// y_I^{(r)} = R₁ X_I + S₁ X_II + P₁ η + Γ₁₁ u_I
/// 0       = R₂ X_I + S₂ X_II + P₂ η + Γ₂₁ u_I + u_II
/// ```
///
/// where `R₁ = [R_{1,1} ⋯ R_{q,1}]` and `R₂ = [R_{1,2} ⋯ R_{q,2}]` act on the
/// stacked `X_I`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearNormalForm {
    pub m: usize,
    pub r: Vec<usize>,
    pub q_mat: Mat,
    pub a12: Mat,
    pub eta0: Vec<f64>,
    pub r1: Mat,
    pub s1: Mat,
    pub p1: Mat,
    pub gamma11: Mat,
    pub r2: Mat,
    pub s2: Mat,
    pub p2: Mat,
    pub gamma21: Mat,
}

impl LinearNormalForm {
    /// The plant with `f₁(d, η) = η`, `Γ_I = Γ₁₁`, `f₂ = R₂X_I + S₂X_II`,
    /// `f₃ = P₂η`, `Γ_II = Γ₂₁`, `f₄ = 1` and `T₁ζ = R₁X_I + S₁X_II + P₁T₂y`.
    pub fn into_plant(
        self,
        history: Vec<History>,
    ) -> Result<(NonlinearFunctionalDae, Option<OperatorWarning>), ClosedLoopError> {
        let q = self.r.len();
        let m = self.m;
        let rb: usize = self.r.iter().sum();
        let n_ii = m
            .checked_sub(q)
            .ok_or(ClosedLoopError::Config("q exceeds m"))?;
        let n1 = self.q_mat.rows;
        let shapes = [
            ("A₁₂", &self.a12, n1, m),
            ("R₁", &self.r1, q, rb),
            ("S₁", &self.s1, q, n_ii),
            ("P₁", &self.p1, q, n1),
            ("Γ₁₁", &self.gamma11, q, q),
            ("R₂", &self.r2, n_ii, rb),
            ("S₂", &self.s2, n_ii, n_ii),
            ("P₂", &self.p2, n_ii, n1),
            ("Γ₂₁", &self.gamma21, n_ii, q),
        ];
        for (what, mat, rows, cols) in shapes {
            if mat.rows != rows {
                return Err(ClosedLoopError::Dimension {
                    what,
                    expected: rows,
                    found: mat.rows,
                });
            }
            if mat.cols != cols {
                return Err(ClosedLoopError::Dimension {
                    what,
                    expected: cols,
                    found: mat.cols,
                });
            }
        }

        let (t2, warning) =
            make_lti_filter(self.q_mat.clone(), self.a12.clone(), self.eta0.clone())?;
        // y = select(ζ): first slot of each channel, then X_II
        let mut select = Mat::zeros(m, rb + n_ii);
        let mut o = 0;
        for (i, &ri) in self.r.iter().enumerate() {
            select.set(i, o, 1.0);
            o += ri;
        }
        for k in 0..n_ii {
            select.set(q + k, rb + k, 1.0);
        }
        let mut direct = Mat::zeros(q, rb + n_ii);
        for i in 0..q {
            for j in 0..rb {
                direct.set(i, j, self.r1.get(i, j));
            }
            for j in 0..n_ii {
                direct.set(i, rb + j, self.s1.get(i, j));
            }
        }
        let t1 = affine_combine(
            vec![Part {
                op: t2.clone(),
                selection: select,
                mix: self.p1.clone(),
            }],
            direct,
        )?;

        let f2_jac_sup = self.s2.norm2();
        let (r2, s2, p2, g11, g21) = (
            self.r2,
            self.s2.clone(),
            self.p2,
            self.gamma11,
            self.gamma21,
        );
        let s2_jac = self.s2;
        let plant = NonlinearFunctionalDae {
            m,
            r: self.r,
            f1: Arc::new(|_, eta| eta.to_vec()),
            gamma_i: Arc::new(move |_, _| g11.clone()),
            f2: Arc::new(move |x_i, x_ii| {
                let mut v = r2.mul_vec(x_i);
                s2.mul_vec_add(x_ii, &mut v);
                v
            }),
            f2_jac_xii: Arc::new(move |_, _| s2_jac.clone()),
            f3: Arc::new(move |_, eta| p2.mul_vec(eta)),
            gamma_ii: Arc::new(move |_, _| g21.clone()),
            f4: Arc::new(|_, _| 1.0),
            d: core::array::from_fn(|_| no_disturbance()),
            t1,
            t2,
            alpha: 1.0,
            f2_jac_sup,
            history,
        };
        plant.validate()?;
        Ok((plant, warning))
    }
}
