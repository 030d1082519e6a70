use alloc::vec::Vec;

use super::Trajectory;
use crate::funnel::Level;

/// Worst distance to the funnel boundary of one level.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelFloor {
    pub level: Level,
    /// `min (1/φ − |e|)` over samples with `t ≥ t_min`.
    pub floor: f64,
    pub at: f64,
    /// `max φ|e|` over all samples, below one inside the funnel.
    pub max_scaled: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MarginReport {
    pub t_min: f64,
    pub levels: Vec<LevelFloor>,
    /// Every floor positive and every `φ|e| < 1`.
    pub inside: bool,
}

/// Default start of the margin window: `1/φ` is unbounded where `φ(0) = 0`.
pub const DEFAULT_T_MIN: f64 = 0.05;

pub fn monitor_funnel(traj: &Trajectory, t_min: f64) -> MarginReport {
    let mut levels: Vec<LevelFloor> = Vec::new();
    for s in &traj.samples {
        for lv in &s.levels {
            let idx = match levels.iter().position(|l| l.level == lv.level) {
                Some(i) => i,
                None => {
                    levels.push(LevelFloor {
                        level: lv.level,
                        floor: f64::INFINITY,
                        at: f64::NAN,
                        max_scaled: 0.0,
                    });
                    levels.len() - 1
                }
            };
            let entry = &mut levels[idx];
            entry.max_scaled = entry.max_scaled.max(lv.scaled());
            let m = lv.margin();
            if s.t >= t_min && (m < entry.floor || entry.at.is_nan()) {
                entry.floor = m;
                entry.at = s.t;
            }
        }
    }
    let inside = levels.iter().all(|l| l.floor > 0.0 && l.max_scaled < 1.0);
    MarginReport {
        t_min,
        levels,
        inside,
    }
}
