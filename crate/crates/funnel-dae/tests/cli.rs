use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use funnel_dae::report::AnalyzeOutput;
use funnel_dae::simulate::Summary;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_funnel-dae"))
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn analyze(target: &str) -> (i32, AnalyzeOutput) {
    let o = run(&["analyze", target]);
    (
        o.status.code().unwrap(),
        serde_json::from_str(&stdout(&o)).unwrap(),
    )
}

#[test]
fn analyze_tvrd_nonexist() {
    let (code, rep) = analyze("tvrd-nonexist");
    assert_eq!(code, 0);
    let t = rep.tvrd.unwrap();
    assert!(!t.exists);
    assert_eq!(t.r, vec![1, 1]);
    assert_eq!(t.gamma_hat, vec![vec!["1/1"; 2]; 2]);
    assert_eq!(t.gamma_hat_f64, vec![vec![1.0; 2]; 2]);
    assert_eq!(t.rank_gamma_hat_q, 1);
    assert!(rep.gamma_decomposition.is_none());
}

#[test]
fn analyze_exlin_from_registry_and_file_agree() {
    let (code, rep) = analyze("exlin");
    assert_eq!(code, 0);
    let t = rep.tvrd.as_ref().unwrap();
    assert!(t.exists);
    assert_eq!(t.r, vec![3, 0]);
    assert!(!rep.vrd.as_ref().unwrap().exists);
    assert_eq!(
        rep.vrd.as_ref().unwrap().gamma,
        vec![vec!["0/1", "-1/1"], vec!["0/1", "1/6"]]
    );
    assert_eq!(
        rep.gamma_decomposition.as_ref().unwrap().gamma,
        vec![vec!["1/1", "0/1"], vec!["0/1", "1/1"]]
    );
    let (code, from_file) = analyze(&data("exlin.json"));
    assert_eq!(code, 0);
    assert_eq!(from_file.tvrd, rep.tvrd);
    assert_eq!(from_file.vrd, rep.vrd);
    assert_eq!(from_file.analysis, rep.analysis);
}

#[test]
fn analyze_exit_codes() {
    let o = run(&["analyze", &data("mismatch.json")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("B"));
    assert_eq!(run(&["analyze", "no-such-system"]).status.code(), Some(2));
    assert_eq!(
        run(&["analyze", &data("normal_form.json")]).status.code(),
        Some(2)
    );
    // zero dynamics not autonomous: no H, hence no tvrd
    let (code, rep) = analyze("strict-rd-one");
    assert_eq!(code, 3);
    assert!(rep.tvrd.is_none());
    assert_eq!(rep.vrd.unwrap().strict, Some(1));
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("funnel-dae-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn simulate_sec5_short_horizon() {
    let dir = temp_dir("sec5");
    let csv = dir.join("sec5.csv");
    let summary = dir.join("sec5.json");
    let o = run(&[
        "simulate",
        "paper-sec5",
        "--t-end",
        "1",
        "--out",
        csv.to_str().unwrap(),
        "--summary",
        summary.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let s: Summary = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    assert!(s.inside);
    assert!(s.margins.iter().all(|m| m.floor.unwrap() > 0.0));
    let (header, rows) = read_csv(&csv);
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    assert_eq!(rows[0][col("u1")], 1.0);
    assert_eq!(rows[0][col("u2")], 0.0);
    assert_eq!(rows[0][col("k_II")], 2.0);
    assert_eq!(rows.last().unwrap()[0], 1.0);
    assert_eq!(rows.len(), s.samples);
    // 17 significant digits in every numeric field
    let text = std::fs::read_to_string(&csv).unwrap();
    let second = text.lines().nth(1).unwrap();
    assert!(second
        .split(',')
        .all(|f| f == "inf" || f.trim_start_matches('-').split('e').next().unwrap().len() == 18));
}

#[test]
fn simulate_is_deterministic() {
    let dir = temp_dir("det");
    let paths: Vec<PathBuf> = (0..2).map(|i| dir.join(format!("run{i}.csv"))).collect();
    for p in &paths {
        let o = run(&[
            "simulate",
            "linear-normalform-demo",
            "--t-end",
            "0.5",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(
        std::fs::read(&paths[0]).unwrap(),
        std::fs::read(&paths[1]).unwrap()
    );
}

#[test]
fn simulate_rejects_low_gain() {
    let o = run(&["simulate", "paper-sec5", "--k-hat", "0.5"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gain condition"));
}

#[test]
fn trivial_integrator_stays_at_zero() {
    let dir = temp_dir("int");
    let csv = dir.join("int.csv");
    let o = run(&[
        "simulate",
        "integrator",
        "--t-end",
        "2",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let (header, rows) = read_csv(&csv);
    let (y, u) = (
        header.iter().position(|h| h == "y1").unwrap(),
        header.iter().position(|h| h == "u1").unwrap(),
    );
    assert!(rows.iter().all(|r| r[y] == 0.0 && r[u] == 0.0));
}

#[test]
fn simulate_config_files() {
    let o = run(&["simulate", &data("normal_form.json")]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let s: Summary = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(s.t_end, 2.0);
    assert_eq!(s.tol, 1e-8);
    assert!(s.inside);

    let o = run(&["simulate", &data("sec5_family.json")]);
    assert_eq!(o.status.code(), Some(0));
    let s: Summary = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(s.t_end, 1.0);
    // the family member equals the default funnel function
    let o = run(&["simulate", "paper-sec5", "--t-end", "1", "--method", "dp54"]);
    let reference: Summary = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((s.max_k_i - reference.max_k_i).abs() < 1e-6);
}

#[test]
fn simulate_config_with_inconsistent_history() {
    let text = std::fs::read_to_string(data("normal_form.json"))
        .unwrap()
        .replace("{\"constant\": -1.0}", "{\"constant\": 0.0}");
    let path = temp_dir("inconsistent").join("nf.json");
    std::fs::write(&path, text).unwrap();
    let o = run(&["simulate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("inconsistent"));
}

#[test]
fn batch_writes_every_target() {
    let dir = temp_dir("batch");
    let o = run(&[
        "simulate",
        "integrator",
        "linear-normalform-demo",
        "--t-end",
        "0.5",
        "--batch",
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    for name in ["integrator", "linear-normalform-demo"] {
        assert!(dir.join(format!("{name}.csv")).exists());
        assert!(dir.join(format!("{name}.summary.json")).exists());
    }
    let o = run(&["simulate", "integrator", "paper-sec5", "--out", "x.csv"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn selftest_filter() {
    let o = run(&["selftest", "--filter", "tvrd/"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let cases: Vec<&str> = out.lines().filter(|l| l.starts_with("pass")).collect();
    assert_eq!(cases.len(), 5);
    assert!(cases.iter().all(|l| l.contains("tvrd/")));
}
