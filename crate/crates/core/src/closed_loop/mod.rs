//! Nonlinear functional DAE plants under funnel control.
//!
//! The plant is
//!
//! ```text
//! y_I^{(r)} = f₁(d₁, T₁ζ) + Γ_I(d₂, T₁ζ) u_I
//! 0         = f₂(X_I, X_II) + f₃(d₃, T₂y) + Γ_II(d₄, T₂y) u_I + f₄(d₅, T₂y) u_II
//! ```
//!
//! with `X_I` the stacked `y_i, …, y_i^{(r_i−1)}`, `X_II = (y_{q+1}, …, y_m)` and
//! `ζ = (X_I, X_II)`. Closed with the funnel controller it is a semi-explicit
//! index-1 DAE in the differential state `(X_I, w₁, w₂)` (`w` the operator
//! states) and the algebraic state `X_II`.

mod integrate;
mod monitor;
mod normal_form;

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

pub use integrate::{
    integrate, LevelValue, Method, Outcome, Sample, SimulationConfig, StepStats, Trajectory,
};
pub use monitor::{monitor_funnel, LevelFloor, MarginReport, DEFAULT_T_MIN};
pub use normal_form::LinearNormalForm;

use crate::funnel::{
    check_gain_condition, check_initial_funnel, error_cascade, CascadeInput, CascadeResult,
    FunnelError, FunnelFunction, InitialPhi, Jet, Level, Signal,
};
use crate::linalg::{norm, norm_inf, symmetric_part_positive_definite, Mat};
use crate::operators::{OperatorError, RealizedOperator};

pub type Disturbance = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;
/// `(d, η) ↦ vector`, or `(X_I, X_II) ↦ vector` for `f₂`.
pub type VecFn = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;
pub type MatFn = Arc<dyn Fn(&[f64], &[f64]) -> Mat + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

pub fn no_disturbance() -> Disturbance {
    Arc::new(|_| Vec::new())
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ClosedLoopError {
    #[error(transparent)]
    Funnel(#[from] FunnelError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("{what}: expected {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error(
        "channel {channel}: initial history provides {found} derivative values, {required} needed"
    )]
    InsufficientHistory {
        channel: usize,
        required: usize,
        found: usize,
    },
    #[error("gain condition fails: k̂ = {k_hat} must exceed {bound}")]
    GainCondition { k_hat: f64, bound: f64 },
    #[error("initial value outside the funnel at {0}")]
    InitialFunnel(Level),
    #[error("inconsistent initial value, residual norm {norm}")]
    Inconsistent { residual: Vec<f64>, norm: f64 },
    #[error("∂F_II/∂X_II is singular at t = {t}")]
    SingularJacobian { t: f64 },
    #[error("T₂ must not depend on its current input")]
    T2Feedthrough,
    #[error("invalid configuration: {0}")]
    Config(&'static str),
}

/// Initial history of one output on `[−h, 0]`, only its jet at `0` matters.
#[derive(Clone, Debug, PartialEq)]
pub enum History {
    Constant(f64),
    /// `y(0), ẏ(0), …`.
    Derivatives(Vec<f64>),
    /// Ascending coefficients in `t`.
    Polynomial(Vec<f64>),
}

impl History {
    fn derivatives(&self, count: usize, channel: usize) -> Result<Vec<f64>, ClosedLoopError> {
        match self {
            History::Constant(c) => {
                let mut d = vec![0.0; count.max(1)];
                d[0] = *c;
                d.truncate(count);
                Ok(d)
            }
            History::Derivatives(d) if d.len() >= count => Ok(d[..count].to_vec()),
            History::Derivatives(d) => Err(ClosedLoopError::InsufficientHistory {
                channel,
                required: count,
                found: d.len(),
            }),
            History::Polynomial(c) => {
                let jet = Signal::Polynomial(c.clone()).jet(0.0, count.saturating_sub(1));
                Ok((0..count).map(|j| jet.derivative(j)).collect())
            }
        }
    }
}

#[derive(Clone)]
pub struct NonlinearFunctionalDae {
    pub m: usize,
    /// Relative degrees of the first `q = r.len()` outputs.
    pub r: Vec<usize>,
    pub f1: VecFn,
    pub gamma_i: MatFn,
    pub f2: VecFn,
    pub f2_jac_xii: MatFn,
    pub f3: VecFn,
    pub gamma_ii: MatFn,
    pub f4: ScalarFn,
    /// `d₁, …, d₅`.
    pub d: [Disturbance; 5],
    /// Acts on `ζ = (X_I, X_II)`.
    pub t1: RealizedOperator,
    /// Acts on `y`; must be free of feedthrough.
    pub t2: RealizedOperator,
    /// Lower bound of `f₄`.
    pub alpha: f64,
    /// Declared `sup ‖∂f₂/∂X_II‖`.
    pub f2_jac_sup: f64,
    pub history: Vec<History>,
}

impl NonlinearFunctionalDae {
    pub fn q(&self) -> usize {
        self.r.len()
    }

    pub fn r_bar(&self) -> usize {
        self.r.iter().sum()
    }

    /// Offsets of the channels inside `X_I`.
    pub fn offsets(&self) -> Vec<usize> {
        let mut o = Vec::with_capacity(self.r.len());
        let mut acc = 0;
        for &ri in &self.r {
            o.push(acc);
            acc += ri;
        }
        o
    }

    pub fn output(&self, x_i: &[f64], x_ii: &[f64]) -> Vec<f64> {
        self.offsets()
            .iter()
            .map(|&o| x_i[o])
            .chain(x_ii.iter().copied())
            .collect()
    }

    pub fn validate(&self) -> Result<(), ClosedLoopError> {
        let q = self.q();
        let dim = |what, expected, found| {
            if expected == found {
                Ok(())
            } else {
                Err(ClosedLoopError::Dimension {
                    what,
                    expected,
                    found,
                })
            }
        };
        if q > self.m {
            return Err(ClosedLoopError::Config(
                "more differential channels than outputs",
            ));
        }
        if self.r.contains(&0) {
            return Err(ClosedLoopError::Config(
                "relative degrees of the first q outputs must be positive",
            ));
        }
        dim("T₁ input", self.r_bar() + self.m - q, self.t1.input_dim())?;
        dim("T₂ input", self.m, self.t2.input_dim())?;
        dim("initial histories", self.m, self.history.len())?;
        if self.t2.has_feedthrough() {
            return Err(ClosedLoopError::T2Feedthrough);
        }
        if !(self.alpha > 0.0) {
            return Err(FunnelError::NonpositiveAlpha(self.alpha).into());
        }
        Ok(())
    }
}

/// Reference signals, funnel functions and `k̂`.
#[derive(Clone)]
pub struct Controller {
    pub k_hat: f64,
    pub y_ref: Vec<Signal>,
    /// `phi_inner[i][j]` for `j = 0, …, r_i − 2`.
    pub phi_inner: Vec<Vec<Arc<dyn FunnelFunction>>>,
    pub phi_i: Arc<dyn FunnelFunction>,
    pub phi_ii: Arc<dyn FunnelFunction>,
}

impl Controller {
    /// The same `φ` at every level.
    pub fn uniform(
        k_hat: f64,
        y_ref: Vec<Signal>,
        phi: Arc<dyn FunnelFunction>,
        r: &[usize],
    ) -> Self {
        let phi_inner = r
            .iter()
            .map(|&ri| vec![phi.clone(); ri.saturating_sub(1)])
            .collect();
        Self {
            k_hat,
            y_ref,
            phi_inner,
            phi_i: phi.clone(),
            phi_ii: phi,
        }
    }

    fn validate(&self, sys: &NonlinearFunctionalDae) -> Result<(), ClosedLoopError> {
        if self.y_ref.len() != sys.m {
            return Err(ClosedLoopError::Dimension {
                what: "references",
                expected: sys.m,
                found: self.y_ref.len(),
            });
        }
        for (i, &ri) in sys.r.iter().enumerate() {
            let found = self.phi_inner.get(i).map_or(0, |v| v.len());
            if found < ri - 1 {
                return Err(ClosedLoopError::Dimension {
                    what: "inner funnel functions",
                    expected: ri - 1,
                    found,
                });
            }
        }
        Ok(())
    }

    pub fn phi_at(&self, sys: &NonlinearFunctionalDae, t: f64) -> InitialPhi {
        InitialPhi {
            inner: sys
                .r
                .iter()
                .enumerate()
                .map(|(i, &ri)| (0..ri - 1).map(|j| self.phi_inner[i][j].value(t)).collect())
                .collect(),
            i: self.phi_i.value(t),
            ii: self.phi_ii.value(t),
        }
    }
}

/// `X_II − y_ref,II(t)`.
fn e_ii(sys: &NonlinearFunctionalDae, ctrl: &Controller, t: f64, x_ii: &[f64]) -> Vec<f64> {
    x_ii.iter()
        .zip(&ctrl.y_ref[sys.q()..])
        .map(|(x, s)| x - s.value(t))
        .collect()
}

/// The controller at `(t, X_I, X_II)`.
pub fn cascade_at(
    sys: &NonlinearFunctionalDae,
    ctrl: &Controller,
    t: f64,
    x_i: &[f64],
    x_ii: &[f64],
) -> Result<CascadeResult, FunnelError> {
    let offsets = sys.offsets();
    let y: Vec<Jet> = sys
        .r
        .iter()
        .zip(&offsets)
        .map(|(&ri, &o)| Jet::from_derivatives(&x_i[o..o + ri]))
        .collect();
    let y_ref: Vec<Jet> = sys
        .r
        .iter()
        .enumerate()
        .map(|(i, &ri)| ctrl.y_ref[i].jet(t, ri - 1))
        .collect();
    let phi_inner: Vec<Vec<Jet>> = sys
        .r
        .iter()
        .enumerate()
        .map(|(i, &ri)| {
            (0..ri - 1)
                .map(|j| ctrl.phi_inner[i][j].jet(t, ri - 1 - j))
                .collect()
        })
        .collect();
    let e = e_ii(sys, ctrl, t, x_ii);
    error_cascade(&CascadeInput {
        t,
        r: &sys.r,
        y: &y,
        y_ref: &y_ref,
        phi_inner: &phi_inner,
        e_ii: &e,
        phi_i: ctrl.phi_i.value(t),
        phi_ii: ctrl.phi_ii.value(t),
        k_hat: ctrl.k_hat,
    })
}

/// `u_II = −k̂ e_II / (1 − φ_II² ‖e_II‖²)` and the slack `1 − φ_II² ‖e_II‖²`.
fn u_ii(ctrl: &Controller, t: f64, e: &[f64]) -> Result<(Vec<f64>, f64), FunnelError> {
    let phi = ctrl.phi_ii.value(t);
    let n = norm(e);
    let w = 1.0 - phi * phi * n * n;
    if !(w > 0.0) {
        return Err(FunnelError::Violation {
            level: Level::II,
            t,
        });
    }
    Ok((e.iter().map(|x| -ctrl.k_hat * x / w).collect(), w))
}

/// `F_II(t, X_I, X_II)` with `u_I` from the cascade and `u_II` in closed form.
/// `eta2` is the output of `T₂`.
pub fn residual_fii(
    sys: &NonlinearFunctionalDae,
    ctrl: &Controller,
    t: f64,
    x_i: &[f64],
    x_ii: &[f64],
    eta2: &[f64],
    u_i: &[f64],
) -> Result<Vec<f64>, FunnelError> {
    let (u2, _) = u_ii(ctrl, t, &e_ii(sys, ctrl, t, x_ii))?;
    let mut f = (sys.f2)(x_i, x_ii);
    let f3 = (sys.f3)(&(sys.d[2])(t), eta2);
    let g2 = (sys.gamma_ii)(&(sys.d[3])(t), eta2);
    let f4 = (sys.f4)(&(sys.d[4])(t), eta2);
    for (k, fk) in f.iter_mut().enumerate() {
        *fk += f3[k] + f4 * u2[k];
    }
    if !u_i.is_empty() {
        g2.mul_vec_add(u_i, &mut f);
    }
    Ok(f)
}

/// `∂f₂/∂X_II − k̂ f₄ / (1 − φ_II²‖e_II‖²) · (I + 2φ_II² e_II e_IIᵀ / (1 − φ_II²‖e_II‖²))`.
pub fn jacobian_fii_xii(
    sys: &NonlinearFunctionalDae,
    ctrl: &Controller,
    t: f64,
    x_i: &[f64],
    x_ii: &[f64],
    eta2: &[f64],
) -> Result<Mat, FunnelError> {
    let e = e_ii(sys, ctrl, t, x_ii);
    let (_, w) = u_ii(ctrl, t, &e)?;
    let phi = ctrl.phi_ii.value(t);
    let f4 = (sys.f4)(&(sys.d[4])(t), eta2);
    let c = ctrl.k_hat * f4 / w;
    let mut j = (sys.f2_jac_xii)(x_i, x_ii);
    let n = e.len();
    for a in 0..n {
        for b in 0..n {
            let g = 2.0 * phi * phi * e[a] * e[b] / w;
            let id = if a == b { 1.0 } else { 0.0 };
            j.set(a, b, j.get(a, b) - c * (id + g));
        }
    }
    Ok(j)
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitialState {
    pub x_i: Vec<f64>,
    pub x_ii: Vec<f64>,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
}

pub fn assemble_initial_state(
    sys: &NonlinearFunctionalDae,
) -> Result<InitialState, ClosedLoopError> {
    sys.validate()?;
    let mut x_i = Vec::with_capacity(sys.r_bar());
    for (i, &ri) in sys.r.iter().enumerate() {
        x_i.extend(sys.history[i].derivatives(ri, i)?);
    }
    let x_ii = (sys.q()..sys.m)
        .map(|i| sys.history[i].derivatives(1, i).map(|d| d[0]))
        .collect::<Result<_, _>>()?;
    Ok(InitialState {
        x_i,
        x_ii,
        w1: sys.t1.initial_state().to_vec(),
        w2: sys.t2.initial_state().to_vec(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencyReport {
    pub consistent: bool,
    pub residual: Vec<f64>,
    pub norm: f64,
    pub cascade: CascadeResult,
}

/// Evaluates the algebraic equation at `t = 0` under the initial control.
pub fn check_consistency(
    sys: &NonlinearFunctionalDae,
    ctrl: &Controller,
    tol: f64,
) -> Result<ConsistencyReport, ClosedLoopError> {
    ctrl.validate(sys)?;
    let init = assemble_initial_state(sys)?;
    let cascade = cascade_at(sys, ctrl, 0.0, &init.x_i, &init.x_ii)?;
    check_initial_funnel(&cascade, &ctrl.phi_at(sys, 0.0))
        .map_err(ClosedLoopError::InitialFunnel)?;
    let y = sys.output(&init.x_i, &init.x_ii);
    let eta2 = sys.t2.output(&init.w2, &y, 0.0);
    let residual = residual_fii(sys, ctrl, 0.0, &init.x_i, &init.x_ii, &eta2, cascade.u_i())?;
    let n = norm_inf(&residual);
    Ok(ConsistencyReport {
        consistent: n <= tol,
        residual,
        norm: n,
        cascade,
    })
}

/// All preconditions of [`integrate`]: shapes, gain condition, initial funnel
/// and consistency.
pub fn check_preconditions(
    sys: &NonlinearFunctionalDae,
    ctrl: &Controller,
    tol: f64,
) -> Result<ConsistencyReport, ClosedLoopError> {
    sys.validate()?;
    ctrl.validate(sys)?;
    if sys.q() < sys.m && !check_gain_condition(ctrl.k_hat, sys.alpha, sys.f2_jac_sup)? {
        return Err(ClosedLoopError::GainCondition {
            k_hat: ctrl.k_hat,
            bound: sys.f2_jac_sup / sys.alpha,
        });
    }
    let report = check_consistency(sys, ctrl, tol)?;
    if !report.consistent {
        return Err(ClosedLoopError::Inconsistent {
            residual: report.residual,
            norm: report.norm,
        });
    }
    Ok(report)
}

/// Sampled checks of the structural assumptions on the plant callbacks.
#[derive(Clone, Debug, PartialEq)]
pub struct AssumptionReport {
    pub pass: bool,
    /// Smallest sampled `f₄`, which must stay `≥ α`.
    pub min_f4: f64,
    pub gamma_i_definite: bool,
    /// Largest sampled `‖∂f₂/∂X_II‖₂`, which must stay `≤` the declared bound.
    pub max_f2_jac: f64,
}

/// Evaluates the callbacks on `samples` points of a fixed pseudo-random box
/// `[−radius, radius]`; this can falsify, never prove, the assumptions.
pub fn spot_check_assumptions(
    sys: &NonlinearFunctionalDae,
    samples: usize,
    radius: f64,
) -> AssumptionReport {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
    let mut draw =
        |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-radius..=radius)).collect() };
    let (rb, nii) = (sys.r_bar(), sys.m - sys.q());
    let mut report = AssumptionReport {
        pass: true,
        min_f4: f64::INFINITY,
        gamma_i_definite: true,
        max_f2_jac: 0.0,
    };
    for _ in 0..samples {
        let t = draw(1)[0].abs();
        let (x_i, x_ii) = (draw(rb), draw(nii));
        let eta1 = draw(sys.t1.output_dim());
        let eta2 = draw(sys.t2.output_dim());
        if sys.q() > 0 {
            let g = (sys.gamma_i)(&(sys.d[1])(t), &eta1);
            report.gamma_i_definite &= symmetric_part_positive_definite(&g);
        }
        if nii > 0 {
            report.min_f4 = report.min_f4.min((sys.f4)(&(sys.d[4])(t), &eta2));
            report.max_f2_jac = report.max_f2_jac.max((sys.f2_jac_xii)(&x_i, &x_ii).norm2());
        }
    }
    report.pass = report.gamma_i_definite
        && (nii == 0 || report.min_f4 >= sys.alpha)
        && report.max_f2_jac <= sys.f2_jac_sup * (1.0 + 1e-9);
    report
}
