//! Closed-loop runs, trajectory CSV and run summaries.

use std::io::Write;

use funnel_dae_core::closed_loop::{
    integrate, monitor_funnel, ClosedLoopError, MarginReport, Outcome, SimulationConfig, StepStats,
    Trajectory, DEFAULT_T_MIN,
};
use funnel_dae_core::registry::ClosedLoopExample;
use serde::{Deserialize, Serialize};

use crate::{exit, CliError};

/// Runs the closed loop. Precondition failures become [`CliError::Precondition`].
pub fn run(ex: &ClosedLoopExample, cfg: &SimulationConfig) -> Result<Trajectory, CliError> {
    integrate(&ex.plant, &ex.controller, cfg).map_err(|e| match e {
        ClosedLoopError::GainCondition { .. }
        | ClosedLoopError::InitialFunnel(_)
        | ClosedLoopError::Inconsistent { .. }
        | ClosedLoopError::SingularJacobian { .. } => CliError::Precondition(e.to_string()),
        other => CliError::Parse(other.to_string()),
    })
}

/// Exit status of a finished run: completion inside every funnel is success.
pub fn exit_code(traj: &Trajectory, margins: &MarginReport) -> i32 {
    match traj.outcome {
        Outcome::Completed if margins.inside => exit::OK,
        Outcome::Completed | Outcome::FunnelViolation { .. } => exit::FUNNEL,
        Outcome::NewtonFailure { .. } => exit::NEWTON,
        Outcome::StepUnderflow { .. } => exit::UNDERFLOW,
    }
}

fn level_name(level: &impl std::fmt::Display) -> String {
    level.to_string()
}

pub fn csv_header(traj: &Trajectory) -> Vec<String> {
    let q = traj.r.len();
    let m = traj.m;
    let mut h = vec!["t".to_string()];
    h.extend((1..=m).map(|i| format!("y{i}")));
    for (i, &ri) in traj.r.iter().enumerate() {
        h.extend((1..ri).map(|j| format!("y{}_d{j}", i + 1)));
    }
    h.extend((q + 1..=m).map(|i| format!("y{i}_d1")));
    h.extend((1..=m).map(|i| format!("u{i}")));
    for (i, &ri) in traj.r.iter().enumerate() {
        h.extend((0..ri).map(|j| format!("e_{}{j}", i + 1)));
    }
    h.extend((1..=m - q).map(|k| format!("e_II_{k}")));
    for (i, &ri) in traj.r.iter().enumerate() {
        h.extend((0..ri.saturating_sub(1)).map(|j| format!("k_{}{j}", i + 1)));
    }
    h.push("k_I".into());
    h.push("k_II".into());
    h.push("residual".into());
    if let Some(s) = traj.samples.first() {
        h.extend(
            s.levels
                .iter()
                .map(|l| format!("margin_{}", level_name(&l.level))),
        );
    }
    h
}

fn num(x: f64) -> String {
    // adding zero folds −0 into +0
    format!("{:.16e}", x + 0.0)
}

/// One row per recorded sample, every float with 17 significant digits.
pub fn write_csv(traj: &Trajectory, out: impl Write) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(csv_header(traj))?;
    for s in &traj.samples {
        let mut row = vec![num(s.t)];
        row.extend(s.y.iter().map(|&v| num(v)));
        let mut o = 0;
        for &ri in &traj.r {
            row.extend(s.x_i[o + 1..o + ri].iter().map(|&v| num(v)));
            o += ri;
        }
        row.extend(s.x_ii_rate.iter().map(|&v| num(v)));
        row.extend(s.u.iter().map(|&v| num(v)));
        for ei in &s.e {
            row.extend(ei.iter().map(|&v| num(v)));
        }
        row.extend(s.e_ii.iter().map(|&v| num(v)));
        for ki in &s.k {
            row.extend(ki.iter().map(|&v| num(v)));
        }
        row.push(num(s.k_i));
        row.push(num(s.k_ii));
        row.push(num(s.residual));
        row.extend(s.levels.iter().map(|l| num(l.margin())));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OutcomeJson {
    Completed,
    FunnelViolation {
        level: String,
        t: f64,
    },
    NewtonFailure {
        t: Option<f64>,
        residual: Option<f64>,
    },
    StepUnderflow {
        t: f64,
        h: f64,
    },
}

impl From<&Outcome> for OutcomeJson {
    fn from(o: &Outcome) -> Self {
        match o {
            Outcome::Completed => OutcomeJson::Completed,
            Outcome::FunnelViolation { level, t } => OutcomeJson::FunnelViolation {
                level: level_name(level),
                t: *t,
            },
            Outcome::NewtonFailure { t, residual } => OutcomeJson::NewtonFailure {
                t: finite(*t),
                residual: finite(*residual),
            },
            Outcome::StepUnderflow { t, h } => OutcomeJson::StepUnderflow { t: *t, h: *h },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginJson {
    pub level: String,
    /// `min (1/φ − |e|)` after `t_min`; `null` if unbounded.
    pub floor: Option<f64>,
    pub at: Option<f64>,
    pub max_scaled: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatsJson {
    pub accepted: usize,
    pub rejected_error: usize,
    pub rejected_funnel: usize,
    pub rejected_newton: usize,
    pub newton_iterations: usize,
    pub h_smallest: Option<f64>,
    pub h_largest: Option<f64>,
}

impl From<&StepStats> for StatsJson {
    fn from(s: &StepStats) -> Self {
        Self {
            accepted: s.accepted,
            rejected_error: s.rejected_error,
            rejected_funnel: s.rejected_funnel,
            rejected_newton: s.rejected_newton,
            newton_iterations: s.newton_iterations,
            h_smallest: finite(s.h_smallest),
            h_largest: finite(s.h_largest),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub system: String,
    pub outcome: OutcomeJson,
    pub exit_code: i32,
    /// Completed with every level strictly inside its funnel.
    pub inside: bool,
    pub t_end: f64,
    pub tol: f64,
    pub t_min: f64,
    pub margins: Vec<MarginJson>,
    /// `max k_{ij}` per channel.
    pub max_k_inner: Vec<Vec<f64>>,
    pub max_k_i: f64,
    pub max_k_ii: f64,
    pub max_abs_u: Vec<f64>,
    pub max_residual: f64,
    pub samples: usize,
    pub stats: StatsJson,
}

pub fn summarize(label: &str, traj: &Trajectory, cfg: &SimulationConfig) -> Summary {
    let margins = monitor_funnel(traj, DEFAULT_T_MIN);
    let fold = |f: &dyn Fn(&funnel_dae_core::closed_loop::Sample) -> f64| {
        traj.samples.iter().map(f).fold(0.0f64, f64::max)
    };
    let first = traj.samples.first();
    let max_k_inner = first
        .map(|s0| {
            s0.k.iter()
                .enumerate()
                .map(|(i, ki)| {
                    (0..ki.len())
                        .map(|j| fold(&|s| s.k[i][j]))
                        .collect::<Vec<_>>()
                })
                .collect()
        })
        .unwrap_or_default();
    let max_abs_u = (0..traj.m).map(|i| fold(&|s| s.u[i].abs())).collect();
    Summary {
        system: label.to_string(),
        outcome: (&traj.outcome).into(),
        exit_code: exit_code(traj, &margins),
        inside: traj.completed() && margins.inside,
        t_end: cfg.t_end,
        tol: cfg.tol,
        t_min: margins.t_min,
        margins: margins
            .levels
            .iter()
            .map(|l| MarginJson {
                level: level_name(&l.level),
                floor: finite(l.floor),
                at: finite(l.at),
                max_scaled: l.max_scaled,
            })
            .collect(),
        max_k_inner,
        max_k_i: fold(&|s| s.k_i),
        max_k_ii: fold(&|s| s.k_ii),
        max_abs_u,
        max_residual: fold(&|s| s.residual),
        samples: traj.samples.len(),
        stats: (&traj.stats).into(),
    }
}
