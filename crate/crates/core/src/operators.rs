//! Causal operators realized by a finite-dimensional state:
//! `ẇ = z(w, ζ(t), t)`, `(Tζ)(t) = g(w(t), ζ(t), t)`.
//!
//! The state is advanced by whoever integrates the surrounding system; the
//! fixed-step [`RealizedOperator::simulate`] is only used for testing.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{is_hurwitz, norm_inf, Mat};

pub type StateMap = Arc<dyn Fn(&[f64], &[f64], f64) -> Vec<f64> + Send + Sync>;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum OperatorError {
    #[error("{what}: expected {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OperatorWarning {
    /// `Q` has an eigenvalue with nonnegative real part; bounded inputs may
    /// give unbounded outputs.
    NotHurwitz,
}

#[derive(Clone)]
pub struct RealizedOperator {
    state_dim: usize,
    input_dim: usize,
    output_dim: usize,
    initial_state: Vec<f64>,
    rate: StateMap,
    output: StateMap,
    feedthrough: bool,
    bibo_certified: bool,
}

impl core::fmt::Debug for RealizedOperator {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("RealizedOperator")
            .field("state_dim", &self.state_dim)
            .field("input_dim", &self.input_dim)
            .field("output_dim", &self.output_dim)
            .field("initial_state", &self.initial_state)
            .field("feedthrough", &self.feedthrough)
            .finish_non_exhaustive()
    }
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<(), OperatorError> {
    if expected == found {
        Ok(())
    } else {
        Err(OperatorError::Dimension {
            what,
            expected,
            found,
        })
    }
}

impl RealizedOperator {
    /// `feedthrough` declares whether the output depends on the current input.
    pub fn new(
        input_dim: usize,
        output_dim: usize,
        initial_state: Vec<f64>,
        rate: StateMap,
        output: StateMap,
        feedthrough: bool,
    ) -> Self {
        Self {
            state_dim: initial_state.len(),
            input_dim,
            output_dim,
            initial_state,
            rate,
            output,
            feedthrough,
            bibo_certified: false,
        }
    }

    /// The operator `ζ ↦ ζ`.
    pub fn identity(dim: usize) -> Self {
        Self::new(
            dim,
            dim,
            Vec::new(),
            Arc::new(|_, _, _| Vec::new()),
            Arc::new(|_, z, _| z.to_vec()),
            true,
        )
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn initial_state(&self) -> &[f64] {
        &self.initial_state
    }

    pub fn with_initial_state(mut self, w0: Vec<f64>) -> Result<Self, OperatorError> {
        check_len("initial state", self.state_dim, w0.len())?;
        self.initial_state = w0;
        Ok(self)
    }

    pub fn has_feedthrough(&self) -> bool {
        self.feedthrough
    }

    /// True for LTI filters with Hurwitz `Q`, where boundedness is proven
    /// rather than tested.
    pub fn bibo_certified(&self) -> bool {
        self.bibo_certified
    }

    pub fn state_derivative(&self, state: &[f64], input: &[f64], t: f64) -> Vec<f64> {
        (self.rate)(state, input, t)
    }

    pub fn output(&self, state: &[f64], input: &[f64], t: f64) -> Vec<f64> {
        (self.output)(state, input, t)
    }

    /// Classical RK4 with `steps` uniform steps on `[0, t_end]`; returns the
    /// sampled times and outputs.
    pub fn simulate(
        &self,
        input: &dyn Fn(f64) -> Vec<f64>,
        t_end: f64,
        steps: usize,
    ) -> (Vec<f64>, Vec<Vec<f64>>) {
        let h = t_end / steps as f64;
        let mut w = self.initial_state.clone();
        let mut times = Vec::with_capacity(steps + 1);
        let mut outs = Vec::with_capacity(steps + 1);
        for n in 0..=steps {
            let t = n as f64 * h;
            times.push(t);
            outs.push(self.output(&w, &input(t), t));
            if n == steps {
                break;
            }
            let axpy = |a: &[f64], k: &[f64], s: f64| -> Vec<f64> {
                a.iter().zip(k).map(|(x, d)| x + s * d).collect()
            };
            let (mid, end) = (input(t + 0.5 * h), input(t + h));
            let k1 = self.state_derivative(&w, &input(t), t);
            let k2 = self.state_derivative(&axpy(&w, &k1, 0.5 * h), &mid, t + 0.5 * h);
            let k3 = self.state_derivative(&axpy(&w, &k2, 0.5 * h), &mid, t + 0.5 * h);
            let k4 = self.state_derivative(&axpy(&w, &k3, h), &end, t + h);
            for i in 0..w.len() {
                w[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        (times, outs)
    }
}

/// `η̇ = Qη + B_in ζ`, output `η`.
#[derive(Clone, Debug, PartialEq)]
pub struct LtiFilter {
    pub q: Mat,
    pub b_in: Mat,
    pub eta0: Vec<f64>,
}

pub fn make_lti_filter(
    q: Mat,
    b_in: Mat,
    eta0: Vec<f64>,
) -> Result<(RealizedOperator, Option<OperatorWarning>), OperatorError> {
    check_len("Q columns", q.rows, q.cols)?;
    check_len("B_in rows", q.rows, b_in.rows)?;
    check_len("initial state", q.rows, eta0.len())?;
    let hurwitz = is_hurwitz(&q);
    let input_dim = b_in.cols;
    let output_dim = q.rows;
    let rate: StateMap = Arc::new(move |eta, zeta, _| {
        let mut d = q.mul_vec(eta);
        b_in.mul_vec_add(zeta, &mut d);
        d
    });
    let mut op = RealizedOperator::new(
        input_dim,
        output_dim,
        eta0,
        rate,
        Arc::new(|eta, _, _| eta.to_vec()),
        false,
    );
    op.bibo_certified = hurwitz;
    Ok((op, (!hurwitz).then_some(OperatorWarning::NotHurwitz)))
}

/// One summand `M · T(S ζ)` of an [`affine_combine`].
#[derive(Clone, Debug)]
pub struct Part {
    pub op: RealizedOperator,
    /// `S`, of size `op.input_dim × input_dim`.
    pub selection: Mat,
    /// `M`, of size `output_dim × op.output_dim`.
    pub mix: Mat,
}

/// The operator `ζ ↦ D ζ + Σ_j M_j T_j(S_j ζ)` on the stacked state of the parts.
pub fn affine_combine(parts: Vec<Part>, direct: Mat) -> Result<RealizedOperator, OperatorError> {
    let input_dim = direct.cols;
    let output_dim = direct.rows;
    let mut offsets = Vec::with_capacity(parts.len() + 1);
    let mut w0 = Vec::new();
    offsets.push(0);
    for p in &parts {
        check_len("selection rows", p.op.input_dim, p.selection.rows)?;
        check_len("selection columns", input_dim, p.selection.cols)?;
        check_len("mix rows", output_dim, p.mix.rows)?;
        check_len("mix columns", p.op.output_dim, p.mix.cols)?;
        w0.extend_from_slice(&p.op.initial_state);
        offsets.push(w0.len());
    }
    let feedthrough =
        !direct.is_zero() || parts.iter().any(|p| p.op.feedthrough && !p.mix.is_zero());
    let bibo = parts.iter().all(|p| p.op.bibo_certified);
    let parts = Arc::new(parts);
    let offsets = Arc::new(offsets);

    let (ps, os) = (parts.clone(), offsets.clone());
    let rate: StateMap = Arc::new(move |w, zeta, t| {
        let mut d = Vec::with_capacity(w.len());
        for (j, p) in ps.iter().enumerate() {
            d.extend(p.op.state_derivative(&w[os[j]..os[j + 1]], &p.selection.mul_vec(zeta), t));
        }
        d
    });
    let output: StateMap = Arc::new(move |w, zeta, t| {
        let mut y = direct.mul_vec(zeta);
        for (j, p) in parts.iter().enumerate() {
            let out = p.op.output(
                &w[offsets[j]..offsets[j + 1]],
                &p.selection.mul_vec(zeta),
                t,
            );
            p.mix.mul_vec_add(&out, &mut y);
        }
        y
    });
    let mut op = RealizedOperator::new(input_dim, output_dim, w0, rate, output, feedthrough);
    op.bibo_certified = bibo;
    Ok(op)
}

#[derive(Clone, Debug, PartialEq)]
pub struct HarnessReport {
    pub pass: bool,
    /// `(trial, t, |difference|)` where outputs differ before inputs do.
    pub causality_witness: Option<(usize, f64, f64)>,
    /// Largest observed `‖Tζ₁ − Tζ₂‖∞ / ‖ζ₁ − ζ₂‖∞` on short windows.
    pub lipschitz_estimate: f64,
    /// `(trial, t, |output|)` where the output grows on the late half of the horizon.
    pub unbounded_witness: Option<(usize, f64, f64)>,
    /// `sup |Tζ|` and `sup |ζ|` over all trials.
    pub sup_output: f64,
    pub sup_input: f64,
}

/// A random bounded input: a sum of sinusoids with amplitude at most one per channel.
fn random_input(rng: &mut ChaCha8Rng, dim: usize) -> impl Fn(f64) -> Vec<f64> + use<> {
    let terms: Vec<Vec<(f64, f64, f64)>> = (0..dim)
        .map(|_| {
            let n = rng.random_range(1..=3);
            (0..n)
                .map(|_| {
                    (
                        rng.random_range(-1.0..1.0) / n as f64,
                        rng.random_range(0.1..3.0),
                        rng.random_range(0.0..6.3),
                    )
                })
                .collect()
        })
        .collect();
    move |t| {
        terms
            .iter()
            .map(|ch| ch.iter().map(|&(a, w, p)| a * libm::sin(w * t + p)).sum())
            .collect()
    }
}

const HARNESS_HORIZON: f64 = 20.0;
const HARNESS_STEPS: usize = 2000;

/// Randomized falsification checks of causality, a local Lipschitz bound and
/// bounded-input bounded-output behavior. Passing proves nothing; a failure
/// comes with a witness.
pub fn property_harness(op: &RealizedOperator, trials: usize, seed: u64) -> HarnessReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = HarnessReport {
        pass: true,
        causality_witness: None,
        lipschitz_estimate: 0.0,
        unbounded_witness: None,
        sup_output: 0.0,
        sup_input: 0.0,
    };
    let dim = op.input_dim;
    let t_split = HARNESS_HORIZON / 2.0;
    for trial in 0..trials {
        let base = random_input(&mut rng, dim);
        let kick: Vec<f64> = (0..dim).map(|_| rng.random_range(-0.5..0.5)).collect();
        // agrees with `base` on [0, t_split], continuous afterwards
        let altered = |t: f64| -> Vec<f64> {
            let s = (t - t_split).clamp(0.0, 1.0);
            base(t).iter().zip(&kick).map(|(b, k)| b + k * s).collect()
        };
        let (times, out_a) = op.simulate(&base, HARNESS_HORIZON, HARNESS_STEPS);
        let (_, out_b) = op.simulate(&altered, HARNESS_HORIZON, HARNESS_STEPS);

        for (n, &t) in times.iter().enumerate() {
            report.sup_input = report.sup_input.max(norm_inf(&base(t)));
            let diff = out_a[n]
                .iter()
                .zip(&out_b[n])
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            if t <= t_split && diff > 1e-12 && report.causality_witness.is_none() {
                report.causality_witness = Some((trial, t, diff));
            }
            // Lipschitz ratio on the window right after the inputs separate
            if t > t_split && t <= t_split + 1.0 {
                let du = norm_inf(
                    &altered(t)
                        .iter()
                        .zip(base(t))
                        .map(|(a, b)| a - b)
                        .collect::<Vec<_>>(),
                );
                if du > 1e-9 {
                    report.lipschitz_estimate = report.lipschitz_estimate.max(diff / du);
                }
            }
        }

        let half = times.len() / 2;
        let size = |o: &Vec<f64>| norm_inf(o);
        let early = out_a[..half].iter().map(size).fold(0.0, f64::max);
        let (idx, late) = out_a[half..]
            .iter()
            .map(size)
            .enumerate()
            .fold((0, 0.0), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
        report.sup_output = report.sup_output.max(early).max(late);
        let grows = !late.is_finite() || late > 4.0 * early.max(report.sup_input) + 1.0;
        if grows && report.unbounded_witness.is_none() {
            report.unbounded_witness = Some((trial, times[half + idx], late));
        }
    }
    report.pass = report.causality_witness.is_none()
        && report.unbounded_witness.is_none()
        && report.lipschitz_estimate.is_finite();
    report
}

/// The scalar filter `Ṫ = −2T + 2y₁ − y₂`, `T(0) = η⁰`.
pub fn sec5_operator(eta0: f64) -> RealizedOperator {
    let (op, _) = make_lti_filter(
        Mat::from_rows(&[&[-2.0]]),
        Mat::from_rows(&[&[2.0, -1.0]]),
        vec![eta0],
    )
    .expect("literal dimensions agree");
    op
}

/// `(y₁, ẏ₁, y₂) ↦ (y₁, ẏ₁, y₂, T(y₁, y₂))`.
pub fn sec5_t1(eta0: f64) -> RealizedOperator {
    let part = Part {
        op: sec5_operator(eta0),
        selection: Mat::from_rows(&[&[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0]]),
        mix: Mat::from_rows(&[&[0.0], &[0.0], &[0.0], &[1.0]]),
    };
    let direct = Mat::from_rows(&[
        &[1.0, 0.0, 0.0],
        &[0.0, 1.0, 0.0],
        &[0.0, 0.0, 1.0],
        &[0.0, 0.0, 0.0],
    ]);
    affine_combine(vec![part], direct).expect("literal dimensions agree")
}
