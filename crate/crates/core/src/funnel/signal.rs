use alloc::vec::Vec;

use super::Jet;

/// A smooth scalar reference or disturbance with exact Taylor jets.
#[derive(Clone, Debug, PartialEq)]
pub enum Signal {
    Const(f64),
    /// `amp · sin(freq · t + phase)`.
    Sin {
        amp: f64,
        freq: f64,
        phase: f64,
    },
    /// `amp · cos(freq · t + phase)`.
    Cos {
        amp: f64,
        freq: f64,
        phase: f64,
    },
    /// Ascending coefficients in `t`.
    Polynomial(Vec<f64>),
    Sum(Vec<Signal>),
}

impl Signal {
    pub fn cos(amp: f64, freq: f64) -> Self {
        Signal::Cos {
            amp,
            freq,
            phase: 0.0,
        }
    }

    pub fn sin(amp: f64, freq: f64) -> Self {
        Signal::Sin {
            amp,
            freq,
            phase: 0.0,
        }
    }

    pub fn jet(&self, t: f64, order: usize) -> Jet {
        match self {
            Signal::Const(c) => Jet::constant(*c, order),
            Signal::Sin { amp, freq, phase } => {
                let arg = Jet::variable(t, order).scale(*freq).add_scalar(*phase);
                arg.sin_cos().0.scale(*amp)
            }
            Signal::Cos { amp, freq, phase } => {
                let arg = Jet::variable(t, order).scale(*freq).add_scalar(*phase);
                arg.sin_cos().1.scale(*amp)
            }
            Signal::Polynomial(coeffs) => {
                let tau = Jet::variable(t, order);
                coeffs
                    .iter()
                    .rev()
                    .fold(Jet::constant(0.0, order), |acc, &c| {
                        (&acc * &tau).add_scalar(c)
                    })
            }
            Signal::Sum(parts) => parts
                .iter()
                .fold(Jet::constant(0.0, order), |acc, s| &acc + &s.jet(t, order)),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.jet(t, 0).value()
    }
}
