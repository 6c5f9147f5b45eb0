use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn waybound(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_waybound"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .env_remove("WAYBOUND_SEED")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn header(path: &Path) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string()
}

#[test]
fn conserving_sweep_exits_zero_and_writes_results() {
    let dir = tempfile::tempdir().unwrap();
    let o = waybound(&["verify", "--trials", "50", "--seed", "3"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        header(&dir.path().join("verify_reports.csv")),
        "trial,lhs,f_sys,f_app,norm_l_sys,norm_l_app,rhs,slack,conservation_residual,satisfied"
    );
    let csv = fs::read_to_string(dir.path().join("verify_reports.csv")).unwrap();
    assert_eq!(csv.lines().count(), 51);
    let summary = read_json(&dir.path().join("verify_summary.json"));
    assert_eq!(summary["trials"], 50);
    assert_eq!(summary["violation_count"], 0);
    assert_eq!(summary["config"]["seed"], 3);
    assert!(stderr(&o).contains("wall time"));
    assert!(!String::from_utf8_lossy(&o.stdout).contains("wall time"));
}

#[test]
fn non_conserving_sweep_reports_violations() {
    let dir = tempfile::tempdir().unwrap();
    let o = waybound(
        &["verify", "--trials", "200", "--unitary-mode", "haar-full"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let summary = read_json(&dir.path().join("verify_summary.json"));
    assert!(summary["violation_count"].as_u64().unwrap() > 0);
    assert_eq!(summary["theorem_violation_count"], 0);
}

#[test]
fn zero_trials_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = waybound(&["verify", "--trials", "0"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`trials`"), "{}", stderr(&o));
}

#[test]
fn config_file_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"trials": 10, "trails": 5}"#).unwrap();
    let o = waybound(&["verify", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`trails`"), "{}", stderr(&o));

    fs::write(&cfg, r#"{"tol": "small"}"#).unwrap();
    let o = waybound(&["verify", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`tol`"), "{}", stderr(&o));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"trials": 10, "seed": 4}"#).unwrap();
    let o = waybound(
        &["verify", "--config", cfg.to_str().unwrap(), "--trials", "7"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = read_json(&dir.path().join("verify_summary.json"));
    assert_eq!(summary["trials"], 7);
    assert_eq!(summary["config"]["seed"], 4);
}

#[test]
fn example_attains_equality() {
    let dir = tempfile::tempdir().unwrap();
    let o = waybound(&["example", "--alpha", "0.6", "--beta", "0.8"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(
        stdout.contains("lhs                    0.47999999999999998"),
        "{stdout}"
    );
    let report = read_json(&dir.path().join("example_report.json"));
    assert!((report["report"]["f_sys"].as_f64().unwrap() - 0.96).abs() < 1e-12);
    assert!(report["report"]["slack"].as_f64().unwrap().abs() < 1e-9);
    assert_eq!(report["repeatability"]["repeatable"], false);
}

#[test]
fn example_rejects_a_vanishing_amplitude() {
    let dir = tempfile::tempdir().unwrap();
    let o = waybound(&["example", "--alpha", "0", "--beta", "1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`alpha`"), "{}", stderr(&o));
}

#[test]
fn optimize_writes_result_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let o = waybound(
        &[
            "optimize",
            "--restarts",
            "3",
            "--max-evals",
            "400",
            "--trace",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let result = read_json(&dir.path().join("optimization.json"));
    assert!(result["result"]["best_report"]["slack"].as_f64().unwrap() <= 1e-6);
    assert_eq!(
        header(&dir.path().join("trace.csv")),
        "restart,evaluation,objective_value"
    );
}

#[test]
fn pareto_writes_frontier() {
    let dir = tempfile::tempdir().unwrap();
    let o = waybound(
        &[
            "optimize",
            "--objective",
            "pareto",
            "--pareto-points",
            "3",
            "--restarts",
            "2",
            "--max-evals",
            "400",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let frontier = fs::read_to_string(dir.path().join("frontier.csv")).unwrap();
    assert_eq!(
        frontier.lines().next().unwrap(),
        "w_sys,w_app,f_app,f_sys,lhs,rhs,slack"
    );
    assert_eq!(frontier.lines().count(), 4);
    assert!(dir.path().join("pareto.json").exists());

    let o = waybound(
        &["optimize", "--objective", "pareto", "--pareto-points", "1"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn scaling_and_tripartite_headers() {
    let dir = tempfile::tempdir().unwrap();
    let o = waybound(
        &[
            "scaling",
            "--max-spins",
            "2",
            "--restarts",
            "2",
            "--max-evals",
            "400",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        header(&dir.path().join("scaling.csv")),
        "n,norm_l_app,bound_floor,best_f_sys,best_f_app"
    );
    let o = waybound(&["tripartite", "--trials", "20"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        header(&dir.path().join("tripartite_reports.csv")),
        "trial,lhs,f_sys,f_ae,f_app,norm_l_sys,norm_l_app,norm_l_env,rhs_joint,slack_joint,\
         rhs_weak,slack_weak,monotonicity_gap,conservation_residual,satisfied"
    );
}

#[test]
fn custom_scenario_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{
            "scenario": "custom",
            "l_sys": [[[0, 0], [0, 0]], [[0, 0], [1, 0]]],
            "l_app": "spin-z(2)",
            "psi0": [[0.6, 0], [0.8, 0]],
            "psi1": [[0.8, 0], [-0.6, 0]],
            "sigma_mode": "mixed-random",
            "trials": 30
        }"#,
    )
    .unwrap();
    let o = waybound(&["verify", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = read_json(&dir.path().join("verify_summary.json"));
    assert_eq!(summary["trials"], 30);
}

#[test]
fn seed_falls_back_to_environment() {
    let run = |seed: &str| {
        let dir = tempfile::tempdir().unwrap();
        let o = Command::new(env!("CARGO_BIN_EXE_waybound"))
            .args(["verify", "--trials", "5", "--out-dir"])
            .arg(dir.path())
            .env("WAYBOUND_SEED", seed)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        fs::read(dir.path().join("verify_reports.csv")).unwrap()
    };
    assert_eq!(run("9"), run("9"));
    assert_ne!(run("9"), run("10"));
}
