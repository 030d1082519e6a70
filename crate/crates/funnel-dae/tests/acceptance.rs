//! The acceptance suite: one pass/fail line per criterion, nonzero exit on any failure.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use funnel_dae_core::closed_loop::{
    cascade_at, check_consistency, integrate, jacobian_fii_xii, monitor_funnel, residual_fii,
    Method, SimulationConfig, Trajectory, DEFAULT_T_MIN,
};
use funnel_dae_core::dae_analysis::{
    apply_output_feedback, compute_h, gamma_decomposition, is_regular, transfer_function,
    truncated_vrd, vector_rd, LinearDae,
};
use funnel_dae_core::funnel::{
    default_phi, error_cascade, CascadeInput, CascadeResult, FamilyPhi, FunnelFunction, Jet, Signal,
};
use funnel_dae_core::polyrat::{ratmat_inverse, Matrix, QMatrix, RatFun, RatMat, Rational};
use funnel_dae_core::registry;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_s, || {
        format!("took {:.2} s, limit {limit_s} s", elapsed.as_secs_f64())
    })
}

fn rf(num: &[i64], den: &[i64]) -> RatFun {
    RatFun::from_i64_parts(num, den).unwrap()
}

fn rm(rows: Vec<Vec<RatFun>>) -> RatMat {
    Matrix::from_rows(rows).unwrap()
}

fn qm(rows: &[&[i64]]) -> QMatrix {
    QMatrix::from_i64_rows(rows).unwrap()
}

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

fn tvrd_nonexist() -> Outcome {
    let start = Instant::now();
    let sys = registry::tvrd_nonexist();
    let h = compute_h(&sys).map_err(|e| e.to_string())?;
    let t = truncated_vrd(&sys).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let expected = rm(vec![
        vec![rf(&[-1, 1], &[1]), rf(&[1, 1], &[1])],
        vec![rf(&[-1, 1], &[1]), rf(&[-2, 1], &[1])],
    ]);
    ensure(h == expected, || format!("H = {h}"))?;
    ensure(t.gamma_hat == qm(&[&[1, 1], &[1, 1]]), || {
        format!("Γ̂ = {}", t.gamma_hat)
    })?;
    ensure(t.rank_gamma_hat_q == 1, || {
        format!("rank {}", t.rank_gamma_hat_q)
    })?;
    ensure(!t.exists, || "tvrd reported to exist".into())?;
    within(elapsed, 1.0)?;
    Ok(format!(
        "H exact, rk Γ̂_q = 1, exists = false ({:.0} ms)",
        elapsed.as_secs_f64() * 1e3
    ))
}

fn tvrd_three_zero() -> Outcome {
    let start = Instant::now();
    let sys = registry::exlin();
    let g = transfer_function(&sys).map_err(|e| e.to_string())?;
    let h = compute_h(&sys).map_err(|e| e.to_string())?;
    let t = truncated_vrd(&sys).map_err(|e| e.to_string())?;
    let v = vector_rd(&sys).map_err(|e| e.to_string())?;
    let d = gamma_decomposition(&t.gamma_hat, &t.r).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let g_expected = rm(vec![
        vec![RatFun::zero(), rf(&[-1], &[0, 1])],
        vec![rf(&[1, 1], &[6]), rf(&[-8, -4, 1, 1, 1], &[0, 6])],
    ]);
    let h_expected = rm(vec![
        vec![rf(&[-8, -4, 1, 1, 1], &[1, 1]), rf(&[6], &[1, 1])],
        vec![rf(&[0, -1], &[1]), RatFun::zero()],
    ]);
    ensure(g == g_expected, || format!("G = {g}"))?;
    ensure(h == h_expected, || format!("H = {h}"))?;
    ensure(t.exists && t.r == vec![3, 0], || format!("tvrd {:?}", t.r))?;
    ensure(t.gamma_hat == qm(&[&[1, 0], &[0, 0]]), || {
        format!("Γ̂ = {}", t.gamma_hat)
    })?;
    let gamma = QMatrix::from_rows(vec![vec![q(0, 1), q(-1, 1)], vec![q(0, 1), q(1, 6)]]).unwrap();
    ensure(!v.exists && v.gamma == gamma, || {
        format!("vrd Γ = {}", v.gamma)
    })?;
    ensure(d.gamma == QMatrix::identity(2), || {
        format!("Γ decomposition {}", d.gamma)
    })?;
    within(elapsed, 2.0)?;
    Ok(format!(
        "G, H exact, tvrd (3, 0), no vrd ({:.0} ms)",
        elapsed.as_secs_f64() * 1e3
    ))
}

fn int_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, bound: i64) -> QMatrix {
    QMatrix::from_fn(rows, cols, |_, _| q(rng.random_range(-bound..=bound), 1))
}

/// Small systems, half of them with a random (possibly singular) `E`.
fn random_regular_system(rng: &mut ChaCha8Rng) -> LinearDae {
    loop {
        let n = rng.random_range(2..=3);
        let m = rng.random_range(1..=2usize).min(n);
        let e = if rng.random_bool(0.5) {
            QMatrix::identity(n)
        } else {
            int_matrix(rng, n, n, 1)
        };
        let sys = LinearDae::new(
            e,
            int_matrix(rng, n, n, 3),
            int_matrix(rng, n, m, 2),
            int_matrix(rng, m, n, 2),
        )
        .unwrap();
        if is_regular(&sys) {
            return sys;
        }
    }
}

fn random_feedback(rng: &mut ChaCha8Rng, m: usize, p: usize) -> QMatrix {
    QMatrix::from_fn(m, p, |_, _| {
        q(rng.random_range(-5..=5), rng.random_range(1..=4))
    })
}

fn feedback_invariance() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let exlin = registry::exlin();
    let base = truncated_vrd(&exlin).unwrap();
    for n in 0..50 {
        let k = random_feedback(&mut rng, 2, 2);
        let t = truncated_vrd(&apply_output_feedback(&exlin, &k).unwrap())
            .map_err(|e| format!("exlin K#{n}: {e}"))?;
        ensure(t.r == base.r && t.exists == base.exists, || {
            format!("exlin with K = {k}: r = {:?}", t.r)
        })?;
    }
    let mut systems = 0;
    let mut feedbacks = 0;
    while systems < 20 {
        let sys = random_regular_system(&mut rng);
        let Ok(t) = truncated_vrd(&sys) else { continue };
        if !t.exists {
            continue;
        }
        systems += 1;
        let (_, _, m, p) = sys.dims();
        for _ in 0..5 {
            let k = random_feedback(&mut rng, m, p);
            let tk = truncated_vrd(&apply_output_feedback(&sys, &k).unwrap())
                .map_err(|e| format!("system {systems}: {e}"))?;
            ensure(tk.r == t.r && tk.exists, || {
                format!("system {systems}, K = {k}")
            })?;
            feedbacks += 1;
        }
    }
    within(start.elapsed(), 30.0)?;
    Ok(format!(
        "50 feedbacks on exlin, {feedbacks} on 20 random systems ({:.1} s)",
        start.elapsed().as_secs_f64()
    ))
}

fn h_is_inverse() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut count = 0;
    let mut singular_e = 0;
    while count < 30 {
        let sys = random_regular_system(&mut rng);
        let Ok(g) = transfer_function(&sys) else {
            continue;
        };
        let Ok(ginv) = ratmat_inverse(&g) else {
            continue;
        };
        let h = compute_h(&sys).map_err(|e| e.to_string())?;
        ensure(h == ginv, || {
            format!("H ≠ G⁻¹ for E = {}, A = {}", sys.e(), sys.a())
        })?;
        if sys.e().rank() < sys.e().rows() {
            singular_e += 1;
        }
        count += 1;
    }
    Ok(format!("30 systems, {singular_e} with singular E"))
}

fn sec5_initial_values() -> Outcome {
    let ex = registry::nonlinear("paper-sec5").unwrap();
    let c = cascade_at(&ex.plant, &ex.controller, 0.0, &[0.0, 0.0], &[0.0])
        .map_err(|e| e.to_string())?;
    let checks = [
        ("k_10", c.k[0][0], 1.0),
        ("e_10", c.e[0][0], -1.0),
        ("e_I", c.e_i[0], -1.0),
        ("e_II", c.e_ii[0], 0.0),
        ("k_I", c.k_i, 1.0),
        ("k_II", c.k_ii, 2.0),
        ("u_I", c.u[0], 1.0),
        ("u_II", c.u[1], 0.0),
    ];
    for (name, found, expected) in checks {
        ensure((found - expected).abs() <= 1e-12, || {
            format!("{name} = {found}")
        })?;
    }
    let rep = check_consistency(&ex.plant, &ex.controller, 1e-10).map_err(|e| e.to_string())?;
    ensure(rep.residual == vec![0.0], || {
        format!("residual {:?}", rep.residual)
    })?;
    Ok("k_10 = k_I = 1, k_II = 2, e_I = −1, u_I = 1, residual exactly 0".into())
}

struct Sec5Run {
    traj: Trajectory,
    elapsed: Duration,
}

fn sec5_invariance(run: &Sec5Run) -> Outcome {
    let traj = &run.traj;
    ensure(traj.completed(), || format!("outcome {:?}", traj.outcome))?;
    ensure(traj.samples.last().unwrap().t == 10.0, || {
        "horizon not reached".into()
    })?;
    for s in &traj.samples {
        for l in &s.levels {
            ensure(l.scaled() < 1.0, || {
                format!("{} at t = {}: φ|e| = {}", l.level, s.t, l.scaled())
            })?;
        }
    }
    let report = monitor_funnel(traj, DEFAULT_T_MIN);
    ensure(report.inside, || format!("{:?}", report.levels))?;
    let floors: Vec<String> = report
        .levels
        .iter()
        .map(|l| format!("{} {:.4}", l.level, l.floor))
        .collect();
    let max_u = traj
        .samples
        .iter()
        .flat_map(|s| s.u.iter().map(|u| u.abs()))
        .fold(0.0, f64::max);
    ensure(max_u.is_finite() && max_u < 1e3, || {
        format!("max |u| = {max_u}")
    })?;
    within(run.elapsed, 60.0)?;
    Ok(format!(
        "{} steps, floors {}, max |u| {max_u:.3} ({:.1} s)",
        traj.stats.accepted,
        floors.join(", "),
        run.elapsed.as_secs_f64()
    ))
}

fn sec5_residual(run: &Sec5Run) -> Outcome {
    let worst = run
        .traj
        .samples
        .iter()
        .map(|s| s.residual)
        .fold(0.0, f64::max);
    ensure(worst <= 1e-8, || format!("max ‖F_II‖ = {worst:e}"))?;
    Ok(format!(
        "max ‖F_II‖ = {worst:.2e} over {} samples",
        run.traj.samples.len()
    ))
}

fn jacobian_check() -> Outcome {
    let ex = registry::nonlinear("paper-sec5").unwrap();
    let (sys, ctrl) = (&ex.plant, &ex.controller);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let t = rng.random_range(0.05..10.0);
        let w = 0.9 / default_phi().value(t);
        let (a, b, c) = (
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let y1 = (2.0 * t).cos() + a * w;
        let phi = default_phi().value(t);
        let e10 = a * w;
        let k10 = 1.0 / (1.0 - phi * phi * e10 * e10);
        let dy1 = b * w - k10 * e10 - 2.0 * (2.0 * t).sin();
        let y2 = t.sin() + c * w;
        let eta = [rng.random_range(-2.0..2.0)];
        let x_i = [y1, dy1];
        let cascade = cascade_at(sys, ctrl, t, &x_i, &[y2]).map_err(|e| e.to_string())?;
        let f = |z: f64| residual_fii(sys, ctrl, t, &x_i, &[z], &eta, cascade.u_i()).unwrap()[0];
        // smaller steps drown in roundoff near the funnel boundary
        let h = 1e-5;
        let fd = (f(y2 + h) - f(y2 - h)) / (2.0 * h);
        let jac = jacobian_fii_xii(sys, ctrl, t, &x_i, &[y2], &eta)
            .map_err(|e| e.to_string())?
            .get(0, 0);
        let rel = (jac - fd).abs() / jac.abs();
        worst = worst.max(rel);
        ensure(rel <= 1e-6, || {
            format!("t = {t}: analytic {jac}, differences {fd}")
        })?;
    }
    Ok(format!("100 points, worst relative error {worst:.2e}"))
}

fn cascade_check() -> Outcome {
    let phi = FamilyPhi {
        poly: vec![0.0, 0.1],
        mu: 0.5,
        beta: 0.2,
        gamma: 1.0,
        delta: 0.05,
    };
    let y = Signal::Sum(vec![
        Signal::sin(0.15, 1.3),
        Signal::Polynomial(vec![0.05, -0.01]),
    ]);
    let y_ref = Signal::cos(0.1, 0.7);
    let cascade = |t: f64| -> CascadeResult {
        let inner = [vec![phi.jet(t, 2), phi.jet(t, 1)]];
        let yj: [Jet; 1] = [y.jet(t, 2)];
        let rj: [Jet; 1] = [y_ref.jet(t, 2)];
        error_cascade(&CascadeInput {
            t,
            r: &[3],
            y: &yj,
            y_ref: &rj,
            phi_inner: &inner,
            e_ii: &[],
            phi_i: phi.value(t),
            phi_ii: 0.0,
            k_hat: 1.0,
        })
        .unwrap()
    };
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for n in 0..1000 {
        let t = 0.01 + 9.98 * n as f64 / 999.0;
        let (c, p, m) = (cascade(t), cascade(t + h), cascade(t - h));
        for j in 0..2 {
            let de = (p.e[0][j] - m.e[0][j]) / (2.0 * h);
            worst = worst.max((c.e[0][j + 1] - (de + c.k[0][j] * c.e[0][j])).abs());
        }
    }
    ensure(worst <= 1e-6, || format!("worst deviation {worst:e}"))?;
    Ok(format!("1000 points, worst deviation {worst:.2e}"))
}

fn self_convergence() -> Outcome {
    let ex = registry::nonlinear("paper-sec5").unwrap();
    let grid: Vec<f64> = (1..1000).map(|i| i as f64 / 100.0).collect();
    let run = |tol: f64| {
        let cfg = SimulationConfig {
            tol,
            method: Method::DormandPrince,
            output_times: grid.clone(),
            ..SimulationConfig::default()
        };
        integrate(&ex.plant, &ex.controller, &cfg).map_err(|e| e.to_string())
    };
    let (coarse, fine) = (run(1e-8)?, run(1e-10)?);
    ensure(coarse.completed() && fine.completed(), || {
        "a run did not complete".into()
    })?;
    let mut worst: f64 = 0.0;
    for t in grid.iter().chain([&10.0]) {
        let (a, b) = (coarse.at(*t), fine.at(*t));
        let (Some(a), Some(b)) = (a, b) else {
            return Err(format!("no sample at t = {t}"));
        };
        for (ya, yb) in a.y.iter().zip(&b.y) {
            worst = worst.max((ya - yb).abs());
        }
    }
    ensure(worst <= 1e-6, || format!("sup |Δy| = {worst:e}"))?;
    Ok(format!(
        "Dormand–Prince, sup |Δy| = {worst:.2e} on 1000 grid points"
    ))
}

fn linear_demo() -> Outcome {
    let ex = registry::nonlinear("linear-normalform-demo").unwrap();
    let traj = integrate(&ex.plant, &ex.controller, &SimulationConfig::default())
        .map_err(|e| e.to_string())?;
    ensure(traj.completed(), || format!("outcome {:?}", traj.outcome))?;
    let report = monitor_funnel(&traj, DEFAULT_T_MIN);
    ensure(report.inside, || format!("{:?}", report.levels))?;
    let residual = traj.samples.iter().map(|s| s.residual).fold(0.0, f64::max);
    ensure(residual <= 1e-8, || format!("max ‖F_II‖ = {residual:e}"))?;
    // x₃ = (ẏ₁, ẏ₂) from the recorded derivatives
    let x3 = traj
        .samples
        .iter()
        .map(|s| s.x_i[1].abs().max(s.x_ii_rate[0].abs()))
        .fold(0.0, f64::max);
    ensure(x3.is_finite() && x3 < 1e3, || format!("sup |x₃| = {x3}"))?;
    Ok(format!(
        "inside, max ‖F_II‖ = {residual:.2e}, sup |x₃| = {x3:.3}"
    ))
}

fn main() {
    let mut failures = 0;
    let mut report = |n: usize, title: &str, outcome: std::thread::Result<Outcome>| {
        let line = match outcome {
            Ok(Ok(detail)) => format!("PASS  {n:>2}  {title}: {detail}"),
            Ok(Err(why)) => format!("FAIL  {n:>2}  {title}: {why}"),
            Err(_) => format!("FAIL  {n:>2}  {title}: panicked"),
        };
        if line.starts_with("FAIL") {
            failures += 1;
        }
        println!("{line}");
    };
    let guarded = |f: &dyn Fn() -> Outcome| catch_unwind(AssertUnwindSafe(f));

    report(1, "tvrd non-existence", guarded(&tvrd_nonexist));
    report(2, "tvrd (3, 0) and exact G, H", guarded(&tvrd_three_zero));
    report(3, "feedback invariance", guarded(&feedback_invariance));
    report(4, "H = G⁻¹", guarded(&h_is_inverse));
    report(
        5,
        "initial controller values",
        guarded(&sec5_initial_values),
    );

    let ex = registry::nonlinear("paper-sec5").unwrap();
    let start = Instant::now();
    let run =
        integrate(&ex.plant, &ex.controller, &SimulationConfig::default()).map(|traj| Sec5Run {
            traj,
            elapsed: start.elapsed(),
        });
    match &run {
        Ok(r) => {
            report(6, "funnel invariance", guarded(&|| sec5_invariance(r)));
            report(7, "constraint residual", guarded(&|| sec5_residual(r)));
        }
        Err(e) => {
            report(6, "funnel invariance", Ok(Err(e.to_string())));
            report(7, "constraint residual", Ok(Err(e.to_string())));
        }
    }

    report(8, "Jacobian versus differences", guarded(&jacobian_check));
    report(9, "cascade consistency", guarded(&cascade_check));
    report(10, "self-convergence", guarded(&self_convergence));
    report(11, "linear normal form", guarded(&linear_demo));

    if failures > 0 {
        println!("{failures} of 11 criteria failed");
        std::process::exit(1);
    }
    println!("all 11 criteria passed");
}
