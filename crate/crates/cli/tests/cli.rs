use std::path::Path;
use std::process::{Command, Output};

use cellfree::experiment::{read_results, ExperimentConfig, RESULTS_FILE};

const BIN: &str = env!("CARGO_BIN_EXE_cellfree");

fn cellfree(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn small_run(out: &Path, extra: &[&str]) -> Output {
    let out = out.to_str().unwrap();
    let mut args = vec!["run", "--num-ues", "8", "--ratios", "1,5", "--realizations", "4", "--out", out];
    args.extend_from_slice(extra);
    cellfree(&args)
}

#[test]
fn default_config_round_trips() {
    for (preset, expected) in [("paper", ExperimentConfig::default()), ("desk", ExperimentConfig::desk())] {
        let out = cellfree(&["default-config", "--preset", preset]);
        assert!(out.status.success());
        let cfg = ExperimentConfig::from_toml_str(&String::from_utf8(out.stdout).unwrap()).unwrap();
        assert_eq!(cfg, expected);
    }
}

#[test]
fn external_solver_agrees_with_the_builtin_one() {
    let dir = tempfile::tempdir().unwrap();
    let builtin = small_run(&dir.path().join("builtin"), &[]);
    assert!(builtin.status.success(), "{}", String::from_utf8_lossy(&builtin.stderr));
    let cmd = format!("{BIN} solve-lp {{lp}} {{sol}}");
    let external = small_run(&dir.path().join("external"), &["--solver", &cmd]);
    assert!(external.status.success(), "{}", String::from_utf8_lossy(&external.stderr));

    let a = read_results(&dir.path().join("builtin").join(RESULTS_FILE)).unwrap();
    let b = read_results(&dir.path().join("external").join(RESULTS_FILE)).unwrap();
    assert_eq!(a.len(), 2);
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert!(x.valid && y.valid);
        assert_eq!(x.se_tot, y.se_tot);
        assert!((x.fh_objective - y.fh_objective).abs() <= 1e-6, "{} vs {}", x.fh_objective, y.fh_objective);
    }
    assert!(dir.path().join("external/solver/drop0_k8/fronthaul.lp").exists());
}

#[test]
fn export_then_solve_writes_a_solution() {
    let dir = tempfile::tempdir().unwrap();
    let lp = dir.path().join("point.lp");
    let sol = dir.path().join("point.sol");
    let out = cellfree(&["export-lp", "--num-ues", "6", "--realizations", "3", "--out", lp.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = cellfree(&["solve-lp", lp.to_str().unwrap(), sol.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(sol).unwrap();
    assert!(text.lines().any(|l| l.starts_with("C_L ")), "{text}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "seed = 1\nno_such_key = 2\n").unwrap();
    let out = cellfree(&["run", "--config", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let neg = dir.path().join("neg");
    let out = cellfree(&["run", "--num-ues", "8", "--ratios=-1", "--out", neg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ratio"), "{}", String::from_utf8_lossy(&out.stderr));

    let out = small_run(&dir.path().join("failing"), &["--solver", "false"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_results(&dir.path().join("failing").join(RESULTS_FILE)).unwrap();
    assert!(rows.iter().all(|r| r.solver_status == "solver-error" && !r.valid));
}
