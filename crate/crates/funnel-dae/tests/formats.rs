use funnel_dae::format::{
    parse_rational, rational_to_string, LinearFile, NonlinearFile, PhiSpec, SignalSpec, SystemFile,
};
use funnel_dae::report::{analyze_system, AnalyzeOutput};
use funnel_dae::simulate::{summarize, Summary};
use funnel_dae::CliError;
use funnel_dae_core::closed_loop::{integrate, SimulationConfig};
use funnel_dae_core::polyrat::Rational;
use funnel_dae_core::registry;
use proptest::prelude::*;

#[test]
fn rational_strings() {
    let r = parse_rational("−3/2").unwrap();
    assert_eq!(rational_to_string(&r), "-3/2");
    assert_eq!(rational_to_string(&parse_rational("4/-6").unwrap()), "-2/3");
    assert_eq!(rational_to_string(&parse_rational("7").unwrap()), "7/1");
    assert!(parse_rational("0.5").is_err());
    assert!(parse_rational("1/0").is_err());
}

#[test]
fn linear_file_round_trip() {
    for name in registry::LINEAR_NAMES {
        let sys = registry::linear(name).unwrap();
        let file = SystemFile::Linear(LinearFile::from_system(&sys));
        let text = serde_json::to_string(&file).unwrap();
        match SystemFile::from_json(&text).unwrap() {
            SystemFile::Linear(f) => assert_eq!(f.to_system().unwrap(), sys, "{name}"),
            SystemFile::Nonlinear(_) => panic!("kind changed"),
        }
    }
}

#[test]
fn dimension_errors_name_the_field() {
    let text = r#"{"kind": "linear", "E": [["1"]], "A": [["0", "1"]], "B": [["1"]], "C": [["1"]]}"#;
    let SystemFile::Linear(f) = SystemFile::from_json(text).unwrap() else {
        panic!()
    };
    let e = f.to_system().unwrap_err();
    assert!(
        matches!(&e, CliError::Parse(m) if m.contains("A is")),
        "{e}"
    );
    let text = r#"{"kind": "linear", "E": [["1"]], "A": [["x"]], "B": [["1"]], "C": [["1"]]}"#;
    let SystemFile::Linear(f) = SystemFile::from_json(text).unwrap() else {
        panic!()
    };
    assert!(matches!(f.to_system(), Err(CliError::Parse(m)) if m.contains("A[0][0]")));
}

#[test]
fn syntax_errors_carry_the_line() {
    let e = SystemFile::from_json("{\n\"kind\": \"linear\",\n\"E\": [[1]]\n}").unwrap_err();
    assert!(
        matches!(&e, CliError::Parse(m) if m.contains("line 3")),
        "{e}"
    );
}

#[test]
fn analyze_report_round_trip() {
    for name in [
        "tvrd-nonexist",
        "exlin",
        "feedback-minus-s",
        "strict-rd-one",
    ] {
        let rep = analyze_system(name, &registry::linear(name).unwrap());
        let text = serde_json::to_string_pretty(&rep).unwrap();
        let back: AnalyzeOutput = serde_json::from_str(&text).unwrap();
        assert_eq!(back, rep, "{name}");
    }
}

#[test]
fn h_entries_parse_back_exactly() {
    let rep = analyze_system("exlin", &registry::exlin());
    let h = funnel_dae_core::dae_analysis::compute_h(&registry::exlin()).unwrap();
    for (i, row) in rep.tvrd.unwrap().h.iter().enumerate() {
        for (j, entry) in row.iter().enumerate() {
            assert_eq!(&entry.to_ratfun().unwrap(), h.get(i, j));
        }
    }
}

#[test]
fn summary_round_trip() {
    let ex = registry::integrator_plant();
    let cfg = SimulationConfig {
        t_end: 0.5,
        ..SimulationConfig::default()
    };
    let traj = integrate(&ex.plant, &ex.controller, &cfg).unwrap();
    let s = summarize("integrator", &traj, &cfg);
    let back: Summary = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
    assert_eq!(back, s);
}

#[test]
fn nonlinear_file_round_trip() {
    let text = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/tests/data/normal_form.json"
    ))
    .unwrap();
    let SystemFile::Nonlinear(f) = SystemFile::from_json(&text).unwrap() else {
        panic!()
    };
    let again: NonlinearFile = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
    assert_eq!(again, f);
    let ex = f.build(None).unwrap();
    assert_eq!(ex.plant.r, vec![2]);
    assert_eq!(ex.controller.k_hat, 1.0);
}

#[test]
fn unknown_names_are_parse_errors() {
    assert!(PhiSpec::Named("bogus".into()).to_phi().is_err());
    let text = r#"{"kind": "nonlinear", "plant": {"template": "registry", "name": "nope"}}"#;
    let SystemFile::Nonlinear(f) = SystemFile::from_json(text).unwrap() else {
        panic!()
    };
    assert!(matches!(f.build(None), Err(CliError::Parse(_))));
}

fn signal() -> impl Strategy<Value = SignalSpec> {
    let leaf =
        prop_oneof![
            (-5.0..5.0f64).prop_map(SignalSpec::Const),
            (-2.0..2.0f64, 0.1..3.0f64, -1.0..1.0f64)
                .prop_map(|(amp, freq, phase)| SignalSpec::Sin { amp, freq, phase }),
            (-2.0..2.0f64, 0.1..3.0f64, -1.0..1.0f64)
                .prop_map(|(amp, freq, phase)| SignalSpec::Cos { amp, freq, phase }),
            prop::collection::vec(-2.0..2.0f64, 0..4).prop_map(SignalSpec::Polynomial),
        ];
    leaf.prop_recursive(2, 8, 3, |inner| {
        prop::collection::vec(inner, 1..3).prop_map(SignalSpec::Sum)
    })
}

proptest! {
    #[test]
    fn rationals_round_trip(n in -10_000i64..10_000, d in 1i64..10_000) {
        let r = Rational::new(n.into(), d.into());
        prop_assert_eq!(parse_rational(&rational_to_string(&r)).unwrap(), r);
    }

    #[test]
    fn signals_round_trip(s in signal(), t in -3.0..3.0f64) {
        let text = serde_json::to_string(&s).unwrap();
        let back: SignalSpec = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(&back, &s);
        prop_assert_eq!(back.to_signal().value(t), s.to_signal().value(t));
    }
}
