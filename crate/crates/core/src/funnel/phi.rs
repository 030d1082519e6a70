use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use super::Jet;

/// A funnel function `φ` with derivative jets. The funnel boundary is `1/φ`.
pub trait FunnelFunction: Send + Sync {
    /// Jet of `φ` at `t` of the given order.
    fn jet(&self, t: f64, order: usize) -> Jet;

    fn value(&self, t: f64) -> f64 {
        self.jet(t, 0).value()
    }

    /// Declared bounds on `sup |φ^{(j)}|`, `j = 0, 1, …`, if known analytically.
    fn declared_bounds(&self) -> Option<&[f64]> {
        None
    }

    /// Whether jets are exact rather than finite-difference estimates.
    fn analytic(&self) -> bool {
        true
    }
}

/// `φ(t) = ½ t e^{−t} + 2 arctan t`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ArctanPhi;

/// `sup φ ≤ π + ½e⁻¹`, `sup |φ'| = 5/2` at `t = 0`, `sup |φ''| ≤ 1 + 3√3/4`.
const ARCTAN_PHI_BOUNDS: [f64; 3] = [3.33, 2.5, 2.3];

impl FunnelFunction for ArctanPhi {
    fn jet(&self, t: f64, order: usize) -> Jet {
        let tau = Jet::variable(t, order);
        let decay = (&tau * &tau.scale(-1.0).exp()).scale(0.5);
        &decay + &tau.atan().scale(2.0)
    }

    fn declared_bounds(&self) -> Option<&[f64]> {
        Some(&ARCTAN_PHI_BOUNDS)
    }
}

pub fn default_phi() -> ArctanPhi {
    ArctanPhi
}

/// `φ(t) = p(t) e^{−μt} + β arctan(γt) + δ` with `p` given by ascending coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyPhi {
    pub poly: Vec<f64>,
    pub mu: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl FunnelFunction for FamilyPhi {
    fn jet(&self, t: f64, order: usize) -> Jet {
        let tau = Jet::variable(t, order);
        let mut p = Jet::constant(0.0, order);
        for &c in self.poly.iter().rev() {
            p = (&p * &tau).add_scalar(c);
        }
        let decay = &p * &tau.scale(-self.mu).exp();
        (&decay + &tau.scale(self.gamma).atan().scale(self.beta)).add_scalar(self.delta)
    }
}

/// A plain function with derivatives by central differences; flagged as non-analytic.
pub struct SampledPhi {
    f: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    step: f64,
}

impl SampledPhi {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            f: Box::new(f),
            step: 1e-3,
        }
    }
}

impl FunnelFunction for SampledPhi {
    fn jet(&self, t: f64, order: usize) -> Jet {
        let h = self.step;
        let mut d = vec![(self.f)(t)];
        // repeated central differences of the binomial stencil
        for k in 1..=order {
            let mut acc = 0.0;
            let mut binom = 1.0;
            for i in 0..=k {
                let x = t + (k as f64 / 2.0 - i as f64) * h;
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * binom * (self.f)(x);
                binom = binom * (k - i) as f64 / (i + 1) as f64;
            }
            d.push(acc / libm::pow(h, k as f64));
        }
        Jet::from_derivatives(&d)
    }

    fn analytic(&self) -> bool {
        false
    }
}

/// Outcome of the sampled admissibility checks on `φ`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhiReport {
    pub pass: bool,
    pub analytic: bool,
    /// First grid time with `φ(t) ≤ 0` for `t > 0`.
    pub nonpositive_at: Option<f64>,
    /// `(j, t, |φ^{(j)}(t)|)` exceeding the declared bound or growing without bound.
    pub unbounded: Option<(usize, f64, f64)>,
    /// `(t, φ(t))` where `φ` drops below the positivity floor after `t_min`.
    pub below_floor: Option<(f64, f64)>,
    pub floor: f64,
}

/// Relative floor for the `liminf φ > 0` surrogate: `φ(t) ≥ FLOOR_FRACTION · sup φ` for `t ≥ t_min`.
pub const FLOOR_FRACTION: f64 = 1e-3;
/// Without declared bounds, `sup |φ^{(j)}|` over the second half of the horizon
/// may exceed that over the first half by at most this factor.
pub const GROWTH_FACTOR: f64 = 1.5;

/// Samples `φ` on `grid` points over `[0, horizon]` and checks positivity,
/// boundedness of `φ, …, φ^{(k)}` and a positive floor after `t_min`.
pub fn validate_phi(
    phi: &dyn FunnelFunction,
    k: usize,
    horizon: f64,
    grid: usize,
    t_min: f64,
) -> PhiReport {
    let grid = grid.max(2);
    let times: Vec<f64> = (0..=grid)
        .map(|i| horizon * i as f64 / grid as f64)
        .collect();
    let jets: Vec<Jet> = times.iter().map(|&t| phi.jet(t, k)).collect();
    let nonpositive_at = times
        .iter()
        .zip(&jets)
        .find(|(t, j)| **t > 0.0 && j.value() <= 0.0)
        .map(|(t, _)| *t);

    let mut unbounded = None;
    'levels: for level in 0..=k {
        let abs = |j: &Jet| j.derivative(level).abs();
        match phi.declared_bounds().and_then(|b| b.get(level)) {
            Some(&bound) => {
                for (t, j) in times.iter().zip(&jets) {
                    if abs(j) > bound * (1.0 + 1e-12) || !abs(j).is_finite() {
                        unbounded = Some((level, *t, abs(j)));
                        break 'levels;
                    }
                }
            }
            None => {
                let half = times.len() / 2;
                let first = jets[..half].iter().map(abs).fold(0.0, f64::max);
                let (idx, second) = jets[half..]
                    .iter()
                    .map(abs)
                    .enumerate()
                    .fold((0, 0.0), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
                if !second.is_finite() || second > GROWTH_FACTOR * first + 1e-12 {
                    unbounded = Some((level, times[half + idx], second));
                    break 'levels;
                }
            }
        }
    }

    let sup = jets.iter().map(|j| j.value().abs()).fold(0.0, f64::max);
    let floor = FLOOR_FRACTION * sup;
    let below_floor = times
        .iter()
        .zip(&jets)
        .find(|(t, j)| **t >= t_min && j.value() < floor)
        .map(|(t, j)| (*t, j.value()));

    PhiReport {
        pass: nonpositive_at.is_none() && unbounded.is_none() && below_floor.is_none(),
        analytic: phi.analytic(),
        nonpositive_at,
        unbounded,
        below_floor,
        floor,
    }
}
