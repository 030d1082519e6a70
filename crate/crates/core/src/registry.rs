//! Built-in example systems, addressable by name.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::closed_loop::{
    no_disturbance, Controller, History, LinearNormalForm, NonlinearFunctionalDae,
};
use crate::dae_analysis::LinearDae;
use crate::funnel::{default_phi, Signal};
use crate::linalg::Mat;
use crate::operators::{make_lti_filter, sec5_operator, sec5_t1, RealizedOperator};
use crate::polyrat::{QMatrix, Rational};

/// Names of the built-in linear systems.
pub const LINEAR_NAMES: &[&str] = &[
    "tvrd-nonexist",
    "exlin",
    "feedback-minus-s",
    "integrator",
    "strict-rd-one",
    "linear-normalform-demo",
];

pub fn linear(name: &str) -> Option<LinearDae> {
    let sys = match name {
        "tvrd-nonexist" => tvrd_nonexist(),
        "exlin" => exlin(),
        "feedback-minus-s" => feedback_minus_s(),
        "integrator" => integrator(),
        "strict-rd-one" => strict_rd_one(),
        "linear-normalform-demo" => linear_normalform_demo(),
        _ => return None,
    };
    Some(sys)
}

fn build(e: &[&[i64]], a: &[&[i64]], b: &[&[i64]], c: &[&[i64]]) -> LinearDae {
    LinearDae::from_i64(e, a, b, c).expect("built-in system is well formed")
}

/// Right-invertible with autonomous zero dynamics, but `rk Γ̂_q = 1 < 2`.
pub fn tvrd_nonexist() -> LinearDae {
    build(
        &[&[1, 0, 0, 0], &[0, 1, 1, 0], &[0, 1, 1, 0], &[0, 0, 0, 0]],
        &[&[-1, 0, 0, 0], &[0, 1, -1, 0], &[0, 1, 2, 0], &[0, 0, 0, 1]],
        &[&[0, 0], &[1, 0], &[0, 1], &[0, 0]],
        &[&[0, 1, 0, 0], &[0, 0, 1, 0]],
    )
}

/// Truncated vector relative degree `(3, 0)` without a vector relative degree.
pub fn exlin() -> LinearDae {
    build(
        &[
            &[1, 0, 0, 0, 0],
            &[0, 1, 0, 1, 0],
            &[0, -1, 0, 0, 0],
            &[0, 0, 0, 0, 1],
            &[0, 1, 0, 0, 0],
        ],
        &[
            &[-1, 1, -2, 0, 0],
            &[3, 5, 0, 0, 0],
            &[0, 0, 0, 0, 0],
            &[0, 0, 0, 1, 0],
            &[0, 0, 0, 0, 1],
        ],
        &[&[0, 0], &[1, 0], &[0, 1], &[0, 0], &[0, 0]],
        &[&[0, 1, 0, 0, 0], &[0, 0, 1, 0, 0]],
    )
}

/// `G(s) = −s`.
pub fn feedback_minus_s() -> LinearDae {
    build(
        &[&[0, 1], &[0, 0]],
        &[&[1, 0], &[0, 1]],
        &[&[0], &[1]],
        &[&[1, 0]],
    )
}

/// `ẋ = u, y = x`.
pub fn integrator() -> LinearDae {
    build(&[&[1]], &[&[0]], &[&[1]], &[&[1]])
}

/// `G(s) = s⁻¹ [1, 1]`: strict relative degree one, zero dynamics not autonomous.
pub fn strict_rd_one() -> LinearDae {
    build(&[&[1]], &[&[0]], &[&[1, 1]], &[&[1]])
}

/// A system already in the normal form for truncated vector relative degree
/// `(2, 0)`, with state `(η, y₁, y₂, x₃)` and `x₃ = (ẏ₁, ẏ₂)`:
///
/// ```text
/// η̇  = −η + y₁ − y₂
/// ÿ₁ = −2y₁ + y₂ + η + u₁
/// 0  = y₁ − ẏ₁ + ½y₂ + ½η − u₁ + u₂
/// x₃ = (ẏ₁, ẏ₂)
/// ```
///
/// The constraint row of `E` carries `d/dt(y₁ + x₃₁)`, which the first two
/// equations reduce to the algebraic relation above.
pub fn linear_normalform_demo() -> LinearDae {
    let e = integer_rows(&[
        &[1, 0, 0, 0, 0],
        &[0, 0, 0, 1, 0],
        &[0, 1, 0, 1, 0],
        &[0, 1, 0, 0, 0],
        &[0, 0, 1, 0, 0],
    ]);
    let a = rational_rows(&[
        &[(-1, 1), (1, 1), (-1, 1), (0, 1), (0, 1)],
        &[(1, 1), (-2, 1), (1, 1), (0, 1), (0, 1)],
        &[(3, 2), (-1, 1), (3, 2), (0, 1), (0, 1)],
        &[(0, 1), (0, 1), (0, 1), (1, 1), (0, 1)],
        &[(0, 1), (0, 1), (0, 1), (0, 1), (1, 1)],
    ]);
    let b = integer_rows(&[&[0, 0], &[1, 0], &[0, 1], &[0, 0], &[0, 0]]);
    let c = integer_rows(&[&[0, 1, 0, 0, 0], &[0, 0, 1, 0, 0]]);
    LinearDae::new(e, a, b, c).expect("built-in system is well formed")
}

fn integer_rows(rows: &[&[i64]]) -> QMatrix {
    QMatrix::from_i64_rows(rows).expect("built-in literals are rectangular")
}

fn rational_rows(rows: &[&[(i64, i64)]]) -> QMatrix {
    let rows: Vec<Vec<Rational>> = rows
        .iter()
        .map(|r| {
            r.iter()
                .map(|&(n, d)| Rational::new(n.into(), d.into()))
                .collect()
        })
        .collect();
    QMatrix::from_rows(rows).expect("built-in literals are rectangular")
}

/// Names of the built-in closed-loop plants.
pub const NONLINEAR_NAMES: &[&str] = &["paper-sec5", "linear-normalform-demo", "integrator"];

/// A plant together with the controller it is simulated with.
#[derive(Clone)]
pub struct ClosedLoopExample {
    pub plant: NonlinearFunctionalDae,
    pub controller: Controller,
}

pub fn nonlinear(name: &str) -> Option<ClosedLoopExample> {
    match name {
        "paper-sec5" => Some(paper_sec5(2.0, 0.0, [0.0, 0.0, 0.0])),
        "linear-normalform-demo" => Some(linear_normalform_plant(1.0)),
        "integrator" => Some(integrator_plant()),
        _ => None,
    }
}

/// ```text
/// ÿ₁ = −sin y₁ + y₁ẏ₁ + y₂² + ẏ₁² T + (y₁² + y₂⁴ + 1) u_I
/// 0  = y₁³ + y₁ẏ₁³ + y₂ + T + T u_I + u_II
/// Ṫ  = −2T + 2y₁ − y₂,  T(0) = η⁰
/// ```
///
/// with `y_ref = (cos 2t, sin t)` and `φ(t) = ½te^{−t} + 2 arctan t` at every
/// level. `initial` is `(y₁(0), ẏ₁(0), y₂(0))`.
pub fn paper_sec5(k_hat: f64, eta0: f64, initial: [f64; 3]) -> ClosedLoopExample {
    let plant = NonlinearFunctionalDae {
        m: 2,
        r: vec![2],
        // η = (y₁, ẏ₁, y₂, T)
        f1: Arc::new(|_, eta| {
            vec![-libm::sin(eta[0]) + eta[0] * eta[1] + eta[2] * eta[2] + eta[1] * eta[1] * eta[3]]
        }),
        gamma_i: Arc::new(|_, eta| {
            Mat::from_rows(&[&[eta[0] * eta[0] + libm::pow(eta[2], 4.0) + 1.0]])
        }),
        f2: Arc::new(|x_i, x_ii| {
            vec![x_i[0] * x_i[0] * x_i[0] + x_i[0] * x_i[1] * x_i[1] * x_i[1] + x_ii[0]]
        }),
        f2_jac_xii: Arc::new(|_, _| Mat::identity(1)),
        f3: Arc::new(|_, eta| vec![eta[0]]),
        gamma_ii: Arc::new(|_, eta| Mat::from_rows(&[&[eta[0]]])),
        f4: Arc::new(|_, _| 1.0),
        d: core::array::from_fn(|_| no_disturbance()),
        t1: sec5_t1(eta0),
        t2: sec5_operator(eta0),
        alpha: 1.0,
        f2_jac_sup: 1.0,
        history: vec![
            History::Derivatives(vec![initial[0], initial[1]]),
            History::Constant(initial[2]),
        ],
    };
    let controller = Controller::uniform(
        k_hat,
        vec![Signal::cos(1.0, 2.0), Signal::sin(1.0, 1.0)],
        Arc::new(default_phi()),
        &[2],
    );
    ClosedLoopExample { plant, controller }
}

/// The normal-form blocks of [`linear_normalform_demo`]: `Q = −1`,
/// `A₁₂ = [1, −1]`, `R₁ = [−2, 0]`, `S₁ = P₁ = Γ₁₁ = 1`, `R₂ = [1, −1]`,
/// `S₂ = P₂ = ½`, `Γ₂₁ = −1`.
pub fn linear_normalform_blocks() -> LinearNormalForm {
    let m = |rows: &[&[f64]]| Mat::from_rows(rows);
    LinearNormalForm {
        m: 2,
        r: vec![2],
        q_mat: m(&[&[-1.0]]),
        a12: m(&[&[1.0, -1.0]]),
        eta0: vec![0.0],
        r1: m(&[&[-2.0, 0.0]]),
        s1: m(&[&[1.0]]),
        p1: m(&[&[1.0]]),
        gamma11: m(&[&[1.0]]),
        r2: m(&[&[1.0, -1.0]]),
        s2: m(&[&[0.5]]),
        p2: m(&[&[0.5]]),
        gamma21: m(&[&[-1.0]]),
    }
}

/// [`linear_normalform_demo`] under the controller with `y_ref = (sin t, ½cos t)`.
/// With `y₁(0) = ẏ₁(0) = η(0) = 0` the constraint at `t = 0` reads
/// `½y₂ − 1 − k̂(y₂ − ½) = 0`, which fixes `y₂(0) = (1 − k̂/2)/(½ − k̂)`.
pub fn linear_normalform_plant(k_hat: f64) -> ClosedLoopExample {
    let y2 = (1.0 - 0.5 * k_hat) / (0.5 - k_hat);
    let history = vec![History::Derivatives(vec![0.0, 0.0]), History::Constant(y2)];
    let (plant, _) = linear_normalform_blocks()
        .into_plant(history)
        .expect("built-in blocks are well formed");
    let controller = Controller::uniform(
        k_hat,
        vec![Signal::sin(1.0, 1.0), Signal::cos(0.5, 1.0)],
        Arc::new(default_phi()),
        &[2],
    );
    ClosedLoopExample { plant, controller }
}

/// `ẏ = u` tracking `y_ref ≡ 0` from `y(0) = 0`.
pub fn integrator_plant() -> ClosedLoopExample {
    let (empty, _) =
        make_lti_filter(Mat::zeros(0, 0), Mat::zeros(0, 1), Vec::new()).expect("empty filter");
    let plant = NonlinearFunctionalDae {
        m: 1,
        r: vec![1],
        f1: Arc::new(|_, _| vec![0.0]),
        gamma_i: Arc::new(|_, _| Mat::identity(1)),
        f2: Arc::new(|_, _| Vec::new()),
        f2_jac_xii: Arc::new(|_, _| Mat::zeros(0, 0)),
        f3: Arc::new(|_, _| Vec::new()),
        gamma_ii: Arc::new(|_, _| Mat::zeros(0, 1)),
        f4: Arc::new(|_, _| 1.0),
        d: core::array::from_fn(|_| no_disturbance()),
        t1: RealizedOperator::identity(1),
        t2: empty,
        alpha: 1.0,
        f2_jac_sup: 0.0,
        history: vec![History::Constant(0.0)],
    };
    let controller =
        Controller::uniform(1.0, vec![Signal::Const(0.0)], Arc::new(default_phi()), &[1]);
    ClosedLoopExample { plant, controller }
}
