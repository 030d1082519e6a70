//! The golden-example battery behind `funnel-dae selftest`.

use std::io::Write;

use funnel_dae_core::closed_loop::{
    assemble_initial_state, cascade_at, check_consistency, integrate, monitor_funnel,
    SimulationConfig, DEFAULT_T_MIN,
};
use funnel_dae_core::dae_analysis::{
    apply_output_feedback, compute_h, gamma_decomposition, is_regular, is_right_invertible,
    system_pencil, transfer_function, truncated_vrd, vector_rd, zero_dynamics_autonomous,
    LinearDae,
};
use funnel_dae_core::funnel::{check_gain_condition, default_phi, FunnelFunction};
use funnel_dae_core::polyrat::{
    limit_at_infinity, ratvec_degree, Degree, Matrix, QMatrix, RatFun, RatMat, Rational,
};
use funnel_dae_core::registry::{self, ClosedLoopExample};

type LinearLookup = Box<dyn Fn(&str) -> Option<LinearDae> + Send + Sync>;
type NonlinearLookup = Box<dyn Fn(&str) -> Option<ClosedLoopExample> + Send + Sync>;

/// Where the battery gets its systems from; tests swap in corrupted entries.
pub struct Fixtures {
    pub linear: LinearLookup,
    pub nonlinear: NonlinearLookup,
}

impl Default for Fixtures {
    fn default() -> Self {
        Self {
            linear: Box::new(registry::linear),
            nonlinear: Box::new(registry::nonlinear),
        }
    }
}

impl Fixtures {
    fn linear(&self, name: &str) -> Result<LinearDae, String> {
        (self.linear)(name).ok_or_else(|| format!("registry has no linear entry {name:?}"))
    }

    fn nonlinear(&self, name: &str) -> Result<ClosedLoopExample, String> {
        (self.nonlinear)(name).ok_or_else(|| format!("registry has no plant {name:?}"))
    }
}

type Check = fn(&Fixtures) -> Result<(), String>;

pub struct Case {
    pub group: &'static str,
    pub name: &'static str,
    check: Check,
}

impl Case {
    /// `group/name`, which `--filter` matches against.
    pub fn id(&self) -> String {
        format!("{}/{}", self.group, self.name)
    }

    pub fn run(&self, fx: &Fixtures) -> Result<(), String> {
        (self.check)(fx)
    }
}

fn expect<T: PartialEq + std::fmt::Debug>(what: &str, found: T, expected: T) -> Result<(), String> {
    if found == expected {
        Ok(())
    } else {
        Err(format!("{what}: found {found:?}, expected {expected:?}"))
    }
}

fn close(what: &str, found: f64, expected: f64) -> Result<(), String> {
    if (found - expected).abs() <= 1e-12 {
        Ok(())
    } else {
        Err(format!("{what}: found {found}, expected {expected}"))
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn rf(num: &[i64], den: &[i64]) -> RatFun {
    RatFun::from_i64_parts(num, den).expect("nonzero denominator")
}

fn qm(rows: &[&[i64]]) -> QMatrix {
    QMatrix::from_i64_rows(rows).expect("rectangular")
}

fn rm(rows: Vec<Vec<RatFun>>) -> RatMat {
    Matrix::from_rows(rows).expect("rectangular")
}

fn exlin_h() -> RatMat {
    rm(vec![
        vec![rf(&[-8, -4, 1, 1, 1], &[1, 1]), rf(&[6], &[1, 1])],
        vec![rf(&[0, -1], &[1]), RatFun::zero()],
    ])
}

fn sec5_run(fx: &Fixtures) -> Result<(), String> {
    let ex = fx.nonlinear("paper-sec5")?;
    let traj = integrate(&ex.plant, &ex.controller, &SimulationConfig::default()).map_err(err)?;
    if !traj.completed() {
        return Err(format!("run ended with {:?}", traj.outcome));
    }
    let report = monitor_funnel(&traj, DEFAULT_T_MIN);
    if !report.inside {
        return Err(format!("left a funnel: {:?}", report.levels));
    }
    Ok(())
}

/// Every golden case, in battery order.
pub fn golden_cases() -> Vec<Case> {
    vec![
        Case {
            group: "polyrat",
            name: "degree-of-first-H-column",
            check: |_| {
                let d = ratvec_degree(&[rf(&[-1, 1], &[1]), rf(&[-1, 1], &[1])]).map_err(err)?;
                expect("degree", d, Degree::Finite(1))
            },
        },
        Case {
            group: "polyrat",
            name: "gamma-hat-limits",
            check: |_| {
                expect(
                    "lim (s−1)/s",
                    limit_at_infinity(&rf(&[-1, 1], &[1]), -1),
                    Some(Rational::from_integer(1.into())),
                )?;
                expect(
                    "lim 6/(s+1)",
                    limit_at_infinity(&rf(&[6], &[1, 1]), 0),
                    Some(Rational::from_integer(0.into())),
                )
            },
        },
        Case {
            group: "analysis",
            name: "strict-rd-one-pencil",
            check: |fx| {
                let p = system_pencil(&fx.linear("strict-rd-one")?);
                let one = RatFun::one();
                let expected = rm(vec![
                    vec![rf(&[0, -1], &[1]), one.clone(), one.clone()],
                    vec![one, RatFun::zero(), RatFun::zero()],
                ]);
                expect("pencil", p, expected)
            },
        },
        Case {
            group: "analysis",
            name: "tvrd-nonexist-pencil-shape",
            check: |fx| {
                let p = system_pencil(&fx.linear("tvrd-nonexist")?);
                expect("shape", p.shape(), (6, 6))
            },
        },
        Case {
            group: "analysis",
            name: "feedback-minus-s-regular",
            check: |fx| expect("regular", is_regular(&fx.linear("feedback-minus-s")?), true),
        },
        Case {
            group: "analysis",
            name: "exlin-autonomous",
            check: |fx| {
                expect(
                    "autonomous",
                    zero_dynamics_autonomous(&fx.linear("exlin")?),
                    true,
                )
            },
        },
        Case {
            group: "analysis",
            name: "strict-rd-one-not-autonomous",
            check: |fx| {
                let sys = fx.linear("strict-rd-one")?;
                expect("autonomous", zero_dynamics_autonomous(&sys), false)
            },
        },
        Case {
            group: "analysis",
            name: "exlin-right-invertible",
            check: |fx| {
                expect(
                    "right-invertible",
                    is_right_invertible(&fx.linear("exlin")?),
                    true,
                )
            },
        },
        Case {
            group: "transfer",
            name: "feedback-minus-s",
            check: |fx| {
                let g = transfer_function(&fx.linear("feedback-minus-s")?).map_err(err)?;
                expect("G", g, rm(vec![vec![rf(&[0, -1], &[1])]]))
            },
        },
        Case {
            group: "transfer",
            name: "exlin",
            check: |fx| {
                let g = transfer_function(&fx.linear("exlin")?).map_err(err)?;
                let expected = rm(vec![
                    vec![RatFun::zero(), rf(&[-1], &[0, 1])],
                    vec![rf(&[1, 1], &[6]), rf(&[-8, -4, 1, 1, 1], &[0, 6])],
                ]);
                expect("G", g, expected)
            },
        },
        Case {
            group: "transfer",
            name: "output-feedback-minus-s-over-1-plus-ks",
            check: |fx| {
                let sys = fx.linear("feedback-minus-s")?;
                let fb = apply_output_feedback(&sys, &qm(&[&[3]])).map_err(err)?;
                let g = transfer_function(&fb).map_err(err)?;
                expect("G_K", g, rm(vec![vec![rf(&[0, -1], &[1, 3])]]))
            },
        },
        Case {
            group: "tvrd",
            name: "nonexist-H",
            check: |fx| {
                let h = compute_h(&fx.linear("tvrd-nonexist")?).map_err(err)?;
                let expected = rm(vec![
                    vec![rf(&[-1, 1], &[1]), rf(&[1, 1], &[1])],
                    vec![rf(&[-1, 1], &[1]), rf(&[-2, 1], &[1])],
                ]);
                expect("H", h, expected)
            },
        },
        Case {
            group: "tvrd",
            name: "nonexist-report",
            check: |fx| {
                let t = truncated_vrd(&fx.linear("tvrd-nonexist")?).map_err(err)?;
                expect("exists", t.exists, false)?;
                expect("r", t.r, vec![1, 1])?;
                expect("gamma_hat", t.gamma_hat, qm(&[&[1, 1], &[1, 1]]))?;
                expect("rank", t.rank_gamma_hat_q, 1)
            },
        },
        Case {
            group: "tvrd",
            name: "exlin-H",
            check: |fx| {
                expect(
                    "H",
                    compute_h(&fx.linear("exlin")?).map_err(err)?,
                    exlin_h(),
                )
            },
        },
        Case {
            group: "tvrd",
            name: "exlin-report",
            check: |fx| {
                let t = truncated_vrd(&fx.linear("exlin")?).map_err(err)?;
                expect("exists", t.exists, true)?;
                expect("r", t.r, vec![3, 0])?;
                expect("gamma_hat", t.gamma_hat, qm(&[&[1, 0], &[0, 0]]))?;
                expect("gamma_hat_q", t.gamma_hat_q, qm(&[&[1], &[0]]))
            },
        },
        Case {
            group: "tvrd",
            name: "exlin-gamma-decomposition",
            check: |fx| {
                let t = truncated_vrd(&fx.linear("exlin")?).map_err(err)?;
                let g = gamma_decomposition(&t.gamma_hat, &t.r).map_err(err)?;
                expect("gamma", g.gamma, qm(&[&[1, 0], &[0, 1]]))?;
                expect("reordering", g.reordering, vec![0, 1])
            },
        },
        Case {
            group: "vrd",
            name: "feedback-minus-s",
            check: |fx| {
                let v = vector_rd(&fx.linear("feedback-minus-s")?).map_err(err)?;
                expect("exists", v.exists, true)?;
                expect("r", v.r, vec![Some(-1)])?;
                expect("gamma", v.gamma, qm(&[&[-1]]))
            },
        },
        Case {
            group: "vrd",
            name: "exlin-nonexist",
            check: |fx| {
                let v = vector_rd(&fx.linear("exlin")?).map_err(err)?;
                expect("exists", v.exists, false)?;
                let sixth = Rational::new(1.into(), 6.into());
                let expected = QMatrix::from_rows(vec![
                    vec![
                        Rational::from_integer(0.into()),
                        Rational::from_integer((-1).into()),
                    ],
                    vec![Rational::from_integer(0.into()), sixth],
                ])
                .map_err(err)?;
                expect("gamma", v.gamma, expected)?;
                expect("rank", v.rank_gamma, 1)
            },
        },
        Case {
            group: "vrd",
            name: "strict-rd-one",
            check: |fx| {
                let v = vector_rd(&fx.linear("strict-rd-one")?).map_err(err)?;
                expect("strict", v.strict, Some(1))?;
                expect("gamma", v.gamma, qm(&[&[1, 1]]))
            },
        },
        Case {
            group: "operators",
            name: "sec5-T1-output-dim",
            check: |fx| expect("dim", fx.nonlinear("paper-sec5")?.plant.t1.output_dim(), 4),
        },
        Case {
            group: "funnel",
            name: "phi-vanishes-at-zero",
            check: |_| expect("φ(0)", default_phi().value(0.0), 0.0),
        },
        Case {
            group: "funnel",
            name: "sec5-gain-condition",
            check: |fx| {
                let ex = fx.nonlinear("paper-sec5")?;
                let ok =
                    check_gain_condition(ex.controller.k_hat, ex.plant.alpha, ex.plant.f2_jac_sup)
                        .map_err(err)?;
                expect("k̂ > 1", ok, true)
            },
        },
        Case {
            group: "closed-loop",
            name: "sec5-initial-state",
            check: |fx| {
                let init =
                    assemble_initial_state(&fx.nonlinear("paper-sec5")?.plant).map_err(err)?;
                expect("X_I(0)", init.x_i, vec![0.0, 0.0])?;
                expect("X_II(0)", init.x_ii, vec![0.0])?;
                expect("T(0)", init.w2, vec![0.0])
            },
        },
        Case {
            group: "closed-loop",
            name: "sec5-controller-at-zero",
            check: |fx| {
                let ex = fx.nonlinear("paper-sec5")?;
                let c =
                    cascade_at(&ex.plant, &ex.controller, 0.0, &[0.0, 0.0], &[0.0]).map_err(err)?;
                close("k_10", c.k[0][0], 1.0)?;
                close("e_10", c.e[0][0], -1.0)?;
                close("e_I", c.e_i[0], -1.0)?;
                close("e_II", c.e_ii[0], 0.0)?;
                close("k_I", c.k_i, 1.0)?;
                close("k_II", c.k_ii, 2.0)?;
                close("u_I", c.u[0], 1.0)?;
                close("u_II", c.u[1], 0.0)
            },
        },
        Case {
            group: "closed-loop",
            name: "sec5-consistent",
            check: |fx| {
                let ex = fx.nonlinear("paper-sec5")?;
                let rep = check_consistency(&ex.plant, &ex.controller, 1e-10).map_err(err)?;
                expect("consistent", rep.consistent, true)?;
                expect("residual", rep.residual, vec![0.0])
            },
        },
        Case {
            group: "closed-loop",
            name: "sec5-funnel-invariance",
            check: sec5_run,
        },
    ]
}

/// Outcome of one case.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaseResult {
    pub id: String,
    pub error: Option<String>,
}

/// Runs the cases whose id contains `filter`, printing one line each.
pub fn run_battery(
    fx: &Fixtures,
    filter: Option<&str>,
    out: &mut dyn Write,
) -> std::io::Result<Vec<CaseResult>> {
    let mut results = Vec::new();
    for case in golden_cases() {
        let id = case.id();
        if filter.is_some_and(|f| !id.contains(f)) {
            continue;
        }
        let error = case.run(fx).err();
        match &error {
            None => writeln!(out, "pass  {id}")?,
            Some(e) => writeln!(out, "FAIL  {id}: {e}")?,
        }
        results.push(CaseResult { id, error });
    }
    let failed = results.iter().filter(|r| r.error.is_some()).count();
    writeln!(out, "{} passed, {failed} failed", results.len() - failed)?;
    Ok(results)
}
