use funnel_dae_core::closed_loop::*;
use funnel_dae_core::funnel::{default_phi, FunnelFunction, Level};
use funnel_dae_core::registry::{self, ClosedLoopExample};
use proptest::prelude::*;

fn sec5() -> ClosedLoopExample {
    registry::nonlinear("paper-sec5").unwrap()
}

#[test]
fn sec5_controller_at_time_zero() {
    let ex = sec5();
    let report = check_consistency(&ex.plant, &ex.controller, 1e-12).unwrap();
    let c = &report.cascade;
    assert_eq!(c.k, vec![vec![1.0]]);
    assert_eq!((c.k_i, c.k_ii), (1.0, 2.0));
    assert_eq!(c.e_i, vec![-1.0]);
    assert_eq!(c.e_ii, vec![0.0]);
    assert_eq!(c.u, vec![1.0, 0.0]);
    assert!(report.consistent);
    assert_eq!(report.residual, vec![0.0]);
    let jac =
        jacobian_fii_xii(&ex.plant, &ex.controller, 0.0, &[0.0, 0.0], &[0.0], &[0.0]).unwrap();
    assert_eq!(jac.get(0, 0), -1.0);
}

#[test]
fn perturbed_initial_value_is_inconsistent() {
    let ex = registry::paper_sec5(2.0, 0.0, [0.0, 0.0, 0.1]);
    let report = check_consistency(&ex.plant, &ex.controller, 1e-12).unwrap();
    // f₂ = 0.1, T = 0, u_II = −2 · 0.1 because φ(0) = 0
    assert!(!report.consistent);
    assert!((report.residual[0] + 0.1).abs() < 1e-15);
    assert!(matches!(
        integrate(&ex.plant, &ex.controller, &SimulationConfig::default()),
        Err(ClosedLoopError::Inconsistent { .. })
    ));
}

#[test]
fn no_algebraic_part_is_consistent() {
    let ex = registry::integrator_plant();
    let report = check_consistency(&ex.plant, &ex.controller, 1e-12).unwrap();
    assert!(report.consistent && report.residual.is_empty());
}

#[test]
fn gain_condition_is_enforced_before_integration() {
    let ex = registry::paper_sec5(0.5, 0.0, [0.0; 3]);
    let err = integrate(&ex.plant, &ex.controller, &SimulationConfig::default()).unwrap_err();
    assert!(matches!(err, ClosedLoopError::GainCondition { .. }));
}

#[test]
fn initial_state_from_histories() {
    let ex = sec5();
    let init = assemble_initial_state(&ex.plant).unwrap();
    assert_eq!(
        init,
        InitialState {
            x_i: vec![0.0, 0.0],
            x_ii: vec![0.0],
            w1: vec![0.0],
            w2: vec![0.0]
        }
    );

    let mut plant = ex.plant.clone();
    plant.history = vec![History::Constant(0.7), History::Constant(0.2)];
    assert_eq!(assemble_initial_state(&plant).unwrap().x_i, vec![0.7, 0.0]);
    plant.history[0] = History::Polynomial(vec![0.0, 0.0, 1.0]);
    assert_eq!(assemble_initial_state(&plant).unwrap().x_i, vec![0.0, 0.0]);
    plant.history[0] = History::Polynomial(vec![1.0, 3.0, 1.0]);
    assert_eq!(assemble_initial_state(&plant).unwrap().x_i, vec![1.0, 3.0]);
    plant.history[0] = History::Derivatives(vec![0.0]);
    assert!(matches!(
        assemble_initial_state(&plant),
        Err(ClosedLoopError::InsufficientHistory {
            channel: 0,
            required: 2,
            found: 1
        })
    ));
}

#[test]
fn trivial_integrator_stays_at_rest() {
    let ex = registry::integrator_plant();
    let traj = integrate(
        &ex.plant,
        &ex.controller,
        &SimulationConfig {
            t_end: 5.0,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(traj.completed());
    assert!(traj
        .samples
        .iter()
        .all(|s| s.y == vec![0.0] && s.u.iter().all(|u| *u == 0.0)));
    // zero error: the floor is the smallest 1/φ on the window
    let report = monitor_funnel(&traj, DEFAULT_T_MIN);
    let phi = default_phi();
    let expected = traj
        .samples
        .iter()
        .filter(|s| s.t >= DEFAULT_T_MIN)
        .map(|s| 1.0 / phi.value(s.t))
        .fold(f64::INFINITY, f64::min);
    assert_eq!(report.levels[0].floor, expected);
}

#[test]
fn monitor_reports_a_boundary_touch() {
    let ex = registry::integrator_plant();
    let mut traj = integrate(
        &ex.plant,
        &ex.controller,
        &SimulationConfig {
            t_end: 1.0,
            ..Default::default()
        },
    )
    .unwrap();
    let n = traj.samples.len() / 2;
    let when = traj.samples[n].t;
    let lv = &mut traj.samples[n].levels[0];
    lv.error = 1.0 / lv.phi;
    let report = monitor_funnel(&traj, DEFAULT_T_MIN);
    assert!(!report.inside);
    assert_eq!(report.levels[0].level, Level::I);
    assert!(report.levels[0].floor <= 0.0);
    assert_eq!(report.levels[0].at, when);
}

#[test]
fn short_sec5_run_with_both_methods() {
    let ex = sec5();
    let grid: Vec<f64> = (1..=20).map(|k| 0.1 * k as f64).collect();
    let base = SimulationConfig {
        t_end: 2.0,
        tol: 1e-9,
        output_times: grid.clone(),
        ..Default::default()
    };
    let bs = integrate(&ex.plant, &ex.controller, &base).unwrap();
    let dp = integrate(
        &ex.plant,
        &ex.controller,
        &SimulationConfig {
            method: Method::DormandPrince,
            ..base
        },
    )
    .unwrap();
    assert!(bs.completed() && dp.completed());
    for t in grid {
        let (a, b) = (bs.at(t).unwrap(), dp.at(t).unwrap());
        for (x, y) in a.y.iter().zip(&b.y) {
            assert!((x - y).abs() < 1e-6, "t = {t}: {x} vs {y}");
        }
    }
    assert!(bs.samples.iter().all(|s| s.residual <= 1e-10));
    assert!(monitor_funnel(&bs, DEFAULT_T_MIN).inside);
}

#[test]
fn assumptions_hold_on_samples() {
    let ex = sec5();
    assert!(spot_check_assumptions(&ex.plant, 200, 3.0).pass);
    let lin = registry::linear_normalform_plant(1.0);
    let r = spot_check_assumptions(&lin.plant, 200, 3.0);
    assert!(r.pass && (r.max_f2_jac - 0.5).abs() < 1e-12);
    let mut strict = ex.plant.clone();
    strict.alpha = 2.0;
    assert!(!spot_check_assumptions(&strict, 50, 3.0).pass);
}

/// Residual of the algebraic §5 equation written out by hand.
fn sec5_residual_by_hand(t: f64, y1: f64, dy1: f64, y2: f64, tt: f64) -> f64 {
    let phi = default_phi().value(t);
    let e10 = y1 - (2.0 * t).cos();
    let de10 = dy1 + 2.0 * (2.0 * t).sin();
    let k10 = 1.0 / (1.0 - phi * phi * e10 * e10);
    let e11 = de10 + k10 * e10;
    let u1 = -e11 / (1.0 - phi * phi * e11 * e11);
    let e2 = y2 - t.sin();
    let u2 = -2.0 * e2 / (1.0 - phi * phi * e2 * e2);
    y1.powi(3) + y1 * dy1.powi(3) + y2 + tt + tt * u1 + u2
}

/// A random point inside all three funnels of the §5 controller.
fn admissible_point() -> impl Strategy<Value = (f64, f64, f64, f64, f64)> {
    (
        0.05..10.0f64,
        -1.0..1.0f64,
        -1.0..1.0f64,
        -1.0..1.0f64,
        -2.0..2.0f64,
    )
        .prop_map(|(t, a, b, c, tt)| {
            let phi = default_phi().value(t);
            let w = 0.9 / phi;
            let y1 = (2.0 * t).cos() + a * w;
            let e10 = y1 - (2.0 * t).cos();
            let k10 = 1.0 / (1.0 - phi * phi * e10 * e10);
            // choose ẏ₁ so that e₁₁ = b·w
            let dy1 = b * w - k10 * e10 - 2.0 * (2.0 * t).sin();
            let y2 = t.sin() + c * w;
            (t, y1, dy1, y2, tt)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn residual_matches_independent_formula((t, y1, dy1, y2, tt) in admissible_point()) {
        let ex = sec5();
        let cascade = cascade_at(&ex.plant, &ex.controller, t, &[y1, dy1], &[y2]).unwrap();
        let f = residual_fii(&ex.plant, &ex.controller, t, &[y1, dy1], &[y2], &[tt], cascade.u_i()).unwrap();
        let oracle = sec5_residual_by_hand(t, y1, dy1, y2, tt);
        prop_assert!((f[0] - oracle).abs() <= 1e-12 * (1.0 + oracle.abs()), "{} vs {}", f[0], oracle);
    }

    #[test]
    fn jacobian_matches_central_differences((t, y1, dy1, y2, tt) in admissible_point()) {
        let ex = sec5();
        let cascade = cascade_at(&ex.plant, &ex.controller, t, &[y1, dy1], &[y2]).unwrap();
        let f = |z: f64| residual_fii(&ex.plant, &ex.controller, t, &[y1, dy1], &[z], &[tt], cascade.u_i()).unwrap()[0];
        let h = 1e-6;
        let fd = (f(y2 + h) - f(y2 - h)) / (2.0 * h);
        let jac = jacobian_fii_xii(&ex.plant, &ex.controller, t, &[y1, dy1], &[y2], &[tt]).unwrap().get(0, 0);
        prop_assert!((jac - fd).abs() <= 1e-6 * jac.abs().max(1.0), "{} vs {}", jac, fd);
        // the gain condition keeps the Jacobian away from zero
        prop_assert!(jac <= 1.0 - 2.0);
    }
}
