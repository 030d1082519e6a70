//! Half-explicit embedded Runge–Kutta integration of the closed loop.
//!
//! Each stage takes the explicit predictor for the differential state, solves
//! `F_II = 0` for `X_II` by damped Newton warm-started from the previous stage,
//! and evaluates the rates with the solved `X_II`. Only the differential state
//! enters the error estimate; `X_II` is a function of it.

use alloc::vec;
use alloc::vec::Vec;

use super::{
    assemble_initial_state, cascade_at, check_preconditions, jacobian_fii_xii, residual_fii,
    ClosedLoopError, Controller, NonlinearFunctionalDae,
};
use crate::funnel::{FunnelError, Level};
use crate::linalg::{norm, norm_inf, solve};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Method {
    /// Bogacki–Shampine 3(2), first same as last.
    #[default]
    BogackiShampine,
    /// Dormand–Prince 5(4), first same as last.
    DormandPrince,
}

struct Tableau {
    c: &'static [f64],
    a: &'static [&'static [f64]],
    /// Weights of the embedded lower-order solution; the propagated solution
    /// is the last stage.
    b_low: &'static [f64],
    /// Exponent denominator for step control.
    order: f64,
}

const BS23: Tableau = Tableau {
    c: &[0.0, 0.5, 0.75, 1.0],
    a: &[
        &[],
        &[0.5],
        &[0.0, 0.75],
        &[2.0 / 9.0, 1.0 / 3.0, 4.0 / 9.0],
    ],
    b_low: &[7.0 / 24.0, 0.25, 1.0 / 3.0, 0.125],
    order: 3.0,
};

const DP54: Tableau = Tableau {
    c: &[0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0],
    a: &[
        &[],
        &[0.2],
        &[3.0 / 40.0, 9.0 / 40.0],
        &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
        &[
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
        ],
        &[
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
        ],
        &[
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ],
    b_low: &[
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        0.025,
    ],
    order: 5.0,
};

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationConfig {
    pub t_end: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    /// Relative and absolute local error tolerance.
    pub tol: f64,
    /// Bound on `‖F_II‖∞` at every accepted stage; also the consistency tolerance.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Record every `stride`-th accepted step (plus the first, the last and
    /// every output time).
    pub stride: usize,
    pub method: Method,
    /// Times the integrator lands on exactly.
    pub output_times: Vec<f64>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            t_end: 10.0,
            h_init: 1e-4,
            h_min: 1e-12,
            h_max: 0.05,
            tol: 1e-10,
            newton_tol: 1e-10,
            newton_max_iter: 25,
            stride: 1,
            method: Method::default(),
            output_times: Vec::new(),
        }
    }
}

impl SimulationConfig {
    fn validate(&self) -> Result<(), ClosedLoopError> {
        let ok = self.t_end > 0.0
            && self.h_init > 0.0
            && self.h_min > 0.0
            && self.h_max >= self.h_min
            && self.tol > 0.0
            && self.newton_tol > 0.0
            && self.newton_max_iter > 0
            && self.stride > 0;
        if ok {
            Ok(())
        } else {
            Err(ClosedLoopError::Config(
                "steps, tolerances, horizon and stride must be positive",
            ))
        }
    }
}

/// Funnel function value and error norm of one level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelValue {
    pub level: Level,
    pub phi: f64,
    pub error: f64,
}

impl LevelValue {
    /// `1/φ − |e|`, infinite where `φ = 0`.
    pub fn margin(&self) -> f64 {
        if self.phi > 0.0 {
            1.0 / self.phi - self.error
        } else {
            f64::INFINITY
        }
    }

    /// `φ |e|`, below one inside the funnel.
    pub fn scaled(&self) -> f64 {
        self.phi * self.error
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub y: Vec<f64>,
    /// `X_I`: per channel `y_i, …, y_i^{(r_i−1)}`.
    pub x_i: Vec<f64>,
    /// `d/dt X_II`, from differentiating the constraint.
    pub x_ii_rate: Vec<f64>,
    pub u: Vec<f64>,
    pub e: Vec<Vec<f64>>,
    pub e_i: Vec<f64>,
    pub e_ii: Vec<f64>,
    pub k: Vec<Vec<f64>>,
    pub k_i: f64,
    pub k_ii: f64,
    /// `‖F_II‖∞`.
    pub residual: f64,
    pub levels: Vec<LevelValue>,
    /// States of `T₁` followed by those of `T₂`.
    pub operator_states: Vec<f64>,
    /// Size of the step that ended here.
    pub h: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected_error: usize,
    pub rejected_funnel: usize,
    pub rejected_newton: usize,
    pub newton_iterations: usize,
    pub h_smallest: f64,
    pub h_largest: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Completed,
    FunnelViolation { level: Level, t: f64 },
    NewtonFailure { t: f64, residual: f64 },
    StepUnderflow { t: f64, h: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub m: usize,
    pub r: Vec<usize>,
    pub samples: Vec<Sample>,
    pub stats: StepStats,
    pub outcome: Outcome,
}

impl Trajectory {
    pub fn completed(&self) -> bool {
        self.outcome == Outcome::Completed
    }

    /// The sample recorded exactly at `t`, if any.
    pub fn at(&self, t: f64) -> Option<&Sample> {
        self.samples.iter().find(|s| s.t == t)
    }
}

enum Failure {
    Funnel(Level, f64),
    Newton(f64, f64),
}

impl From<FunnelError> for Failure {
    fn from(e: FunnelError) -> Self {
        match e {
            FunnelError::Violation { level, t } => Failure::Funnel(level, t),
            // remaining cascade errors are configuration bugs caught by validation
            _ => Failure::Newton(f64::NAN, f64::NAN),
        }
    }
}

struct Stage {
    z: Vec<f64>,
    rate: Vec<f64>,
    residual: f64,
    iterations: usize,
}

struct Loop<'a> {
    sys: &'a NonlinearFunctionalDae,
    ctrl: &'a Controller,
    cfg: &'a SimulationConfig,
    n_xi: usize,
    n_w1: usize,
}

impl Loop<'_> {
    fn split<'x>(&self, x: &'x [f64]) -> (&'x [f64], &'x [f64], &'x [f64]) {
        let (x_i, rest) = x.split_at(self.n_xi);
        let (w1, w2) = rest.split_at(self.n_w1);
        (x_i, w1, w2)
    }

    /// `u_I` and the `T₂` output, neither of which depends on `X_II`.
    fn explicit_part(&self, t: f64, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>), FunnelError> {
        let (x_i, _, w2) = self.split(x);
        let cascade = cascade_at(self.sys, self.ctrl, t, x_i, &[])?;
        let y = self.sys.output(x_i, &vec![0.0; self.sys.m - self.sys.q()]);
        Ok((cascade.u, self.sys.t2.output(w2, &y, t)))
    }

    fn residual(
        &self,
        t: f64,
        x: &[f64],
        z: &[f64],
        u_i: &[f64],
        eta2: &[f64],
    ) -> Result<Vec<f64>, FunnelError> {
        residual_fii(self.sys, self.ctrl, t, self.split(x).0, z, eta2, u_i)
    }

    fn newton(&self, t: f64, x: &[f64], z0: &[f64]) -> Result<(Vec<f64>, f64, usize), Failure> {
        if z0.is_empty() {
            return Ok((Vec::new(), 0.0, 0));
        }
        let (u_i, eta2) = self.explicit_part(t, x)?;
        let x_i = self.split(x).0;
        let mut z = z0.to_vec();
        let mut f = self.residual(t, x, &z, &u_i, &eta2)?;
        let mut fnorm = norm_inf(&f);
        for iter in 0..=self.cfg.newton_max_iter {
            if fnorm <= self.cfg.newton_tol {
                return Ok((z, fnorm, iter));
            }
            if iter == self.cfg.newton_max_iter {
                break;
            }
            let jac = jacobian_fii_xii(self.sys, self.ctrl, t, x_i, &z, &eta2)?;
            let neg: Vec<f64> = f.iter().map(|v| -v).collect();
            let dz = solve(&jac, &neg).ok_or(Failure::Newton(t, fnorm))?;
            // backtrack until the iterate stays inside the funnel and the residual drops
            let mut lambda = 1.0;
            let mut next = None;
            for _ in 0..30 {
                let trial: Vec<f64> = z.iter().zip(&dz).map(|(a, d)| a + lambda * d).collect();
                if let Ok(ft) = self.residual(t, x, &trial, &u_i, &eta2) {
                    let n = norm_inf(&ft);
                    if n < fnorm {
                        next = Some((trial, ft, n));
                        break;
                    }
                }
                lambda *= 0.5;
            }
            let (zn, fnext, nn) = next.ok_or(Failure::Newton(t, fnorm))?;
            z = zn;
            f = fnext;
            fnorm = nn;
        }
        Err(Failure::Newton(t, fnorm))
    }

    fn rates(&self, t: f64, x: &[f64], z: &[f64]) -> Result<Vec<f64>, FunnelError> {
        let sys = self.sys;
        let (x_i, w1, w2) = self.split(x);
        let cascade = cascade_at(sys, self.ctrl, t, x_i, z)?;
        let zeta: Vec<f64> = x_i.iter().chain(z).copied().collect();
        let eta1 = sys.t1.output(w1, &zeta, t);
        let mut top = (sys.f1)(&(sys.d[0])(t), &eta1);
        if sys.q() > 0 {
            (sys.gamma_i)(&(sys.d[1])(t), &eta1).mul_vec_add(cascade.u_i(), &mut top);
        }
        let mut rate = Vec::with_capacity(x.len());
        for (i, &ri) in sys.r.iter().enumerate() {
            let o = sys.offsets()[i];
            rate.extend_from_slice(&x_i[o + 1..o + ri]);
            rate.push(top[i]);
        }
        rate.extend(sys.t1.state_derivative(w1, &zeta, t));
        rate.extend(sys.t2.state_derivative(w2, &sys.output(x_i, z), t));
        Ok(rate)
    }

    fn stage(&self, t: f64, x: &[f64], z0: &[f64]) -> Result<Stage, Failure> {
        let (z, residual, iterations) = self.newton(t, x, z0)?;
        let rate = self.rates(t, x, &z)?;
        Ok(Stage {
            z,
            rate,
            residual,
            iterations,
        })
    }

    /// `d/dt X_II = −J⁻¹ (∂F/∂t + ∂F/∂x ẋ)`, the directional derivative by
    /// central differences.
    fn x_ii_rate(&self, t: f64, x: &[f64], z: &[f64], xdot: &[f64]) -> Vec<f64> {
        let nan = || vec![f64::NAN; z.len()];
        if z.is_empty() {
            return Vec::new();
        }
        let delta = 1e-6;
        let eval = |s: f64| -> Option<Vec<f64>> {
            let xs: Vec<f64> = x.iter().zip(xdot).map(|(a, d)| a + s * d).collect();
            let (u_i, eta2) = self.explicit_part(t + s, &xs).ok()?;
            self.residual(t + s, &xs, z, &u_i, &eta2).ok()
        };
        let (Some(fp), Some(fm)) = (eval(delta), eval(-delta)) else {
            return nan();
        };
        let df: Vec<f64> = fp
            .iter()
            .zip(&fm)
            .map(|(a, b)| -(a - b) / (2.0 * delta))
            .collect();
        let Ok((_, eta2)) = self.explicit_part(t, x) else {
            return nan();
        };
        let Ok(jac) = jacobian_fii_xii(self.sys, self.ctrl, t, self.split(x).0, z, &eta2) else {
            return nan();
        };
        solve(&jac, &df).unwrap_or_else(nan)
    }

    fn sample(&self, t: f64, h: f64, x: &[f64], stage: &Stage) -> Sample {
        let sys = self.sys;
        let ctrl = self.ctrl;
        let (x_i, w1, w2) = self.split(x);
        let c =
            cascade_at(sys, ctrl, t, x_i, &stage.z).expect("accepted states lie inside the funnel");
        let mut levels = Vec::new();
        for (i, ei) in c.e.iter().enumerate() {
            for (j, e) in ei.iter().take(ei.len() - 1).enumerate() {
                let phi = ctrl.phi_inner[i][j].value(t);
                levels.push(LevelValue {
                    level: Level::Inner { channel: i, j },
                    phi,
                    error: e.abs(),
                });
            }
        }
        if sys.q() > 0 {
            levels.push(LevelValue {
                level: Level::I,
                phi: ctrl.phi_i.value(t),
                error: norm(&c.e_i),
            });
        }
        if sys.q() < sys.m {
            levels.push(LevelValue {
                level: Level::II,
                phi: ctrl.phi_ii.value(t),
                error: norm(&c.e_ii),
            });
        }
        Sample {
            t,
            y: sys.output(x_i, &stage.z),
            x_i: x_i.to_vec(),
            x_ii_rate: self.x_ii_rate(t, x, &stage.z, &stage.rate),
            u: c.u,
            e: c.e,
            e_i: c.e_i,
            e_ii: c.e_ii,
            k: c.k,
            k_i: c.k_i,
            k_ii: c.k_ii,
            residual: stage.residual,
            levels,
            operator_states: w1.iter().chain(w2).copied().collect(),
            h,
        }
    }
}

/// Integrates the closed loop on `[0, t_end]`. Precondition failures are
/// errors; breakdowns during the run end the trajectory with the matching
/// [`Outcome`].
pub fn integrate(
    sys: &NonlinearFunctionalDae,
    ctrl: &Controller,
    cfg: &SimulationConfig,
) -> Result<Trajectory, ClosedLoopError> {
    cfg.validate()?;
    check_preconditions(sys, ctrl, cfg.newton_tol)?;
    let init = assemble_initial_state(sys)?;
    let lp = Loop {
        sys,
        ctrl,
        cfg,
        n_xi: init.x_i.len(),
        n_w1: init.w1.len(),
    };
    let tab = match cfg.method {
        Method::BogackiShampine => &BS23,
        Method::DormandPrince => &DP54,
    };

    let mut x: Vec<f64> = init
        .x_i
        .iter()
        .chain(&init.w1)
        .chain(&init.w2)
        .copied()
        .collect();
    let mut first = match lp.stage(0.0, &x, &init.x_ii) {
        Ok(s) => s,
        Err(Failure::Funnel(level, _)) => return Err(ClosedLoopError::InitialFunnel(level)),
        Err(Failure::Newton(..)) => return Err(ClosedLoopError::SingularJacobian { t: 0.0 }),
    };
    let mut traj = Trajectory {
        m: sys.m,
        r: sys.r.clone(),
        samples: vec![lp.sample(0.0, 0.0, &x, &first)],
        stats: StepStats {
            h_smallest: f64::INFINITY,
            ..StepStats::default()
        },
        outcome: Outcome::Completed,
    };

    let mut outputs: Vec<f64> = cfg
        .output_times
        .iter()
        .copied()
        .filter(|&s| s > 0.0 && s < cfg.t_end)
        .collect();
    outputs.sort_by(f64::total_cmp);
    outputs.push(cfg.t_end);
    let mut next_out = 0;

    let mut t = 0.0;
    let mut h = cfg.h_init.min(cfg.h_max);
    let mut err_prev: f64 = 1.0;
    let n = x.len();
    let s_count = tab.c.len();
    while next_out < outputs.len() {
        let target = outputs[next_out];
        let landing = h >= target - t;
        if landing {
            h = target - t;
        }
        let t_new = if landing { target } else { t + h };

        let mut k: Vec<Vec<f64>> = Vec::with_capacity(s_count);
        k.push(first.rate.clone());
        let mut z = first.z.clone();
        let mut last = None;
        let mut failure = None;
        for s in 1..s_count {
            let mut xs = x.clone();
            for (j, a) in tab.a[s].iter().enumerate() {
                if *a != 0.0 {
                    for (xi, kj) in xs.iter_mut().zip(&k[j]) {
                        *xi += h * a * kj;
                    }
                }
            }
            let ts = if tab.c[s] == 1.0 {
                t_new
            } else {
                t + tab.c[s] * h
            };
            match lp.stage(ts, &xs, &z) {
                Ok(st) => {
                    traj.stats.newton_iterations += st.iterations;
                    z = st.z.clone();
                    k.push(st.rate.clone());
                    last = Some((xs, st));
                }
                Err(f) => {
                    failure = Some(f);
                    break;
                }
            }
        }

        if let Some(f) = failure {
            let cause = match f {
                Failure::Funnel(level, ft) => {
                    traj.stats.rejected_funnel += 1;
                    Outcome::FunnelViolation { level, t: ft }
                }
                Failure::Newton(ft, r) => {
                    traj.stats.rejected_newton += 1;
                    Outcome::NewtonFailure { t: ft, residual: r }
                }
            };
            h *= 0.25;
            if h < cfg.h_min {
                traj.outcome = cause;
                return Ok(traj);
            }
            continue;
        }

        let (x_new, stage_new) = last.expect("tableau has more than one stage");
        let mut err: f64 = 0.0;
        for i in 0..n {
            let est: f64 = h
                * (0..s_count)
                    .map(|j| {
                        (tab.a[s_count - 1].get(j).copied().unwrap_or(0.0) - tab.b_low[j]) * k[j][i]
                    })
                    .sum::<f64>();
            let scale = cfg.tol * (1.0 + x[i].abs().max(x_new[i].abs()));
            err = err.max(est.abs() / scale);
        }
        if !err.is_finite() {
            err = 1e10;
        }

        if err <= 1.0 {
            t = t_new;
            x = x_new;
            first = stage_new;
            traj.stats.accepted += 1;
            traj.stats.h_smallest = traj.stats.h_smallest.min(h);
            traj.stats.h_largest = traj.stats.h_largest.max(h);
            if landing || traj.stats.accepted.is_multiple_of(cfg.stride) {
                traj.samples.push(lp.sample(t, h, &x, &first));
            }
            if landing {
                next_out += 1;
            }
            let e = err.max(1e-10);
            let fac = 0.9 * libm::pow(e, -0.7 / tab.order) * libm::pow(err_prev, 0.4 / tab.order);
            err_prev = e;
            h = (h * fac.clamp(0.2, 5.0)).min(cfg.h_max);
        } else {
            traj.stats.rejected_error += 1;
            h *= (0.9 * libm::pow(err, -1.0 / tab.order)).max(0.2);
            if h < cfg.h_min {
                traj.outcome = Outcome::StepUnderflow { t, h };
                return Ok(traj);
            }
        }
    }
    Ok(traj)
}
