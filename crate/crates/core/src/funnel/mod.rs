//! Funnel functions, the cascaded error and gain recursion of the funnel
//! controller, and the resulting control law.
//!
//! For a channel `i` with relative degree `r_i` the controller forms
//! `e_{i0} = y_i − y_ref,i` and `e_{i,j+1} = ė_{ij} + k_{ij} e_{ij}` with
//! `k_{ij} = 1/(1 − φ_{ij}² e_{ij}²)`. The derivatives `ė_{ij}` are obtained by
//! carrying every quantity as a Taylor jet in `t`, which evaluates the same
//! functions as a symbolic expansion in `y_i, …, y_i^{(j)}` would.

mod jet;
mod phi;
mod signal;

use alloc::vec::Vec;
use core::fmt;

pub use jet::Jet;
pub use phi::{
    default_phi, validate_phi, ArctanPhi, FamilyPhi, FunnelFunction, PhiReport, SampledPhi,
    FLOOR_FRACTION, GROWTH_FACTOR,
};
pub use signal::Signal;

use crate::linalg::norm;

/// Position of a funnel inside the controller.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    /// `φ_{ij} |e_{ij}| < 1`, zero-based channel.
    Inner {
        channel: usize,
        j: usize,
    },
    I,
    II,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Inner { channel, j } => write!(f, "e_{}{}", channel + 1, j),
            Level::I => f.write_str("e_I"),
            Level::II => f.write_str("e_II"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum FunnelError {
    #[error("reciprocal of a jet with zero constant term")]
    SingularJet,
    #[error("funnel violation at {level} (t = {t})")]
    Violation { level: Level, t: f64 },
    #[error("α must be positive, got {0}")]
    NonpositiveAlpha(f64),
    #[error("channel {channel}: jet order {found} below required {required}")]
    InsufficientOrder {
        channel: usize,
        required: usize,
        found: usize,
    },
    #[error("cascade input lengths disagree: {0}")]
    Shape(&'static str),
}

/// Funnel jets and parameters at one time instant.
pub struct CascadeInput<'a> {
    pub t: f64,
    /// Relative degrees `r_1, …, r_q`.
    pub r: &'a [usize],
    /// Jets of `y_i`, order at least `r_i − 1`.
    pub y: &'a [Jet],
    pub y_ref: &'a [Jet],
    /// `phi_inner[i][j]` is the jet of `φ_{ij}`, order at least `r_i − 1 − j`.
    pub phi_inner: &'a [Vec<Jet>],
    /// `y_i − y_ref,i` for `i = q+1, …, m`.
    pub e_ii: &'a [f64],
    pub phi_i: f64,
    pub phi_ii: f64,
    pub k_hat: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CascadeResult {
    /// `e[i][j] = e_{ij}(t)`, `j = 0, …, r_i − 1`.
    pub e: Vec<Vec<f64>>,
    /// `k[i][j] = k_{ij}(t)`, `j = 0, …, r_i − 2`.
    pub k: Vec<Vec<f64>>,
    pub e_i: Vec<f64>,
    pub e_ii: Vec<f64>,
    pub k_i: f64,
    pub k_ii: f64,
    /// `(u_I, u_II)`.
    pub u: Vec<f64>,
}

impl CascadeResult {
    pub fn u_i(&self) -> &[f64] {
        &self.u[..self.e_i.len()]
    }

    pub fn u_ii(&self) -> &[f64] {
        &self.u[self.e_i.len()..]
    }
}

/// `1 − φ² ‖e‖²`, or a violation if it is not positive.
fn funnel_slack(phi: f64, e_norm: f64, level: Level, t: f64) -> Result<f64, FunnelError> {
    let w = 1.0 - phi * phi * e_norm * e_norm;
    if w > 0.0 && w.is_finite() {
        Ok(w)
    } else {
        Err(FunnelError::Violation { level, t })
    }
}

pub fn error_cascade(input: &CascadeInput<'_>) -> Result<CascadeResult, FunnelError> {
    let q = input.r.len();
    if input.y.len() != q || input.y_ref.len() != q || input.phi_inner.len() != q {
        return Err(FunnelError::Shape(
            "y, y_ref and phi_inner need one entry per channel",
        ));
    }
    let t = input.t;
    let mut e = Vec::with_capacity(q);
    let mut k = Vec::with_capacity(q);
    let mut e_i = Vec::with_capacity(q);
    for (i, &ri) in input.r.iter().enumerate() {
        let top = ri.saturating_sub(1);
        for (found, _) in [(input.y[i].order(), 0), (input.y_ref[i].order(), 1)] {
            if found < top {
                return Err(FunnelError::InsufficientOrder {
                    channel: i,
                    required: top,
                    found,
                });
            }
        }
        if input.phi_inner[i].len() < top {
            return Err(FunnelError::Shape("phi_inner[i] needs r_i − 1 funnel jets"));
        }
        let mut ej = (&input.y[i].truncate(top) - &input.y_ref[i].truncate(top)).truncate(top);
        let mut ei = Vec::with_capacity(ri);
        let mut ki = Vec::with_capacity(top);
        for j in 0..top {
            let order = ej.order();
            let phi = &input.phi_inner[i][j];
            if phi.order() < order {
                return Err(FunnelError::InsufficientOrder {
                    channel: i,
                    required: order,
                    found: phi.order(),
                });
            }
            let pe = &phi.truncate(order) * &ej;
            let level = Level::Inner { channel: i, j };
            funnel_slack(phi.value(), ej.value().abs(), level, t)?;
            let gain = (&pe * &pe).scale(-1.0).add_scalar(1.0).recip()?;
            ei.push(ej.value());
            ki.push(gain.value());
            ej = &ej.differentiate() + &(&gain * &ej);
        }
        ei.push(ej.value());
        e_i.push(ej.value());
        e.push(ei);
        k.push(ki);
    }

    let w_i = funnel_slack(input.phi_i, norm(&e_i), Level::I, t)?;
    let w_ii = funnel_slack(input.phi_ii, norm(input.e_ii), Level::II, t)?;
    let k_i = 1.0 / w_i;
    let k_ii = input.k_hat / w_ii;
    let u = e_i
        .iter()
        .map(|x| -k_i * x)
        .chain(input.e_ii.iter().map(|x| -k_ii * x))
        .collect();
    Ok(CascadeResult {
        e,
        k,
        e_i,
        e_ii: input.e_ii.to_vec(),
        k_i,
        k_ii,
        u,
    })
}

/// `k̂ > sup ‖∂f₂/∂X_II‖ / α` (strict).
pub fn check_gain_condition(k_hat: f64, alpha: f64, f2_jac_sup: f64) -> Result<bool, FunnelError> {
    if !(alpha > 0.0) {
        return Err(FunnelError::NonpositiveAlpha(alpha));
    }
    Ok(k_hat > f2_jac_sup / alpha)
}

/// Funnel values at the initial time, in the layout of [`CascadeResult`].
#[derive(Clone, Debug, PartialEq)]
pub struct InitialPhi {
    pub inner: Vec<Vec<f64>>,
    pub i: f64,
    pub ii: f64,
}

/// Strict initial funnel inequalities; `Err` carries the first offending level.
pub fn check_initial_funnel(cascade: &CascadeResult, phi: &InitialPhi) -> Result<(), Level> {
    for (channel, ei) in cascade.e.iter().enumerate() {
        // the last cascade level is covered by φ_I
        let inner = ei.len().saturating_sub(1);
        for j in 0..inner {
            let p = phi
                .inner
                .get(channel)
                .and_then(|v| v.get(j))
                .copied()
                .unwrap_or(0.0);
            if !(p * ei[j].abs() < 1.0) {
                return Err(Level::Inner { channel, j });
            }
        }
    }
    if !(phi.i * norm(&cascade.e_i) < 1.0) {
        return Err(Level::I);
    }
    if !(phi.ii * norm(&cascade.e_ii) < 1.0) {
        return Err(Level::II);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn sec5_at_zero() -> CascadeResult {
        let phi = default_phi().jet(0.0, 1);
        let y = [Jet::constant(0.0, 1)];
        let yref = [Signal::cos(1.0, 2.0).jet(0.0, 1)];
        let e_ii = [0.0 - Signal::sin(1.0, 1.0).value(0.0)];
        let inner = [vec![phi.clone()]];
        error_cascade(&CascadeInput {
            t: 0.0,
            r: &[2],
            y: &y,
            y_ref: &yref,
            phi_inner: &inner,
            e_ii: &e_ii,
            phi_i: phi.value(),
            phi_ii: phi.value(),
            k_hat: 2.0,
        })
        .unwrap()
    }

    #[test]
    fn initial_controller_values() {
        let c = sec5_at_zero();
        assert_eq!(c.k, vec![vec![1.0]]);
        assert_eq!(c.e[0], vec![-1.0, -1.0]);
        assert_eq!(c.e_i, vec![-1.0]);
        assert_eq!(c.e_ii, vec![0.0]);
        assert_eq!((c.k_i, c.k_ii), (1.0, 2.0));
        assert_eq!(c.u_i(), &[1.0]);
        assert_eq!(c.u_ii(), &[0.0]);
        let phi0 = InitialPhi {
            inner: vec![vec![0.0]],
            i: 0.0,
            ii: 0.0,
        };
        assert_eq!(check_initial_funnel(&c, &phi0), Ok(()));
    }

    #[test]
    fn initial_funnel_boundary_is_rejected() {
        let mut c = sec5_at_zero();
        c.e_i = vec![1.0];
        let phi = InitialPhi {
            inner: vec![vec![0.0]],
            i: 1.0,
            ii: 0.0,
        };
        assert_eq!(check_initial_funnel(&c, &phi), Err(Level::I));
    }

    #[test]
    fn violation_names_the_level() {
        let phi = Jet::constant(2.0, 1);
        let err = error_cascade(&CascadeInput {
            t: 1.5,
            r: &[2],
            y: &[Jet::from_coeffs(vec![1.0, 0.0])],
            y_ref: &[Jet::constant(0.0, 1)],
            phi_inner: &[vec![phi]],
            e_ii: &[],
            phi_i: 0.0,
            phi_ii: 0.0,
            k_hat: 1.0,
        })
        .unwrap_err();
        assert_eq!(
            err,
            FunnelError::Violation {
                level: Level::Inner { channel: 0, j: 0 },
                t: 1.5
            }
        );
    }

    #[test]
    fn gain_condition() {
        assert_eq!(check_gain_condition(2.0, 1.0, 1.0), Ok(true));
        assert_eq!(check_gain_condition(1.0, 1.0, 1.0), Ok(false));
        assert_eq!(check_gain_condition(1e-9, 1.0, 0.0), Ok(true));
        assert!(check_gain_condition(1.0, 0.0, 1.0).is_err());
    }
}
