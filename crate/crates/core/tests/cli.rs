//! End-to-end runs of the `resmono` binary.

use std::path::Path;
use std::process::{Command, Output};

use resmono::harness::state_file;
use resmono::states;

fn resmono(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_resmono")).args(args).env_remove("RESMONO_SEED").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn unknown_suite_is_a_config_error() {
    let o = resmono(&["verify", "bogus"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown suite"));
}

#[test]
fn bad_arguments_exit_with_three() {
    assert_eq!(resmono(&["verify", "pinsker", "--trials", "0"]).status.code(), Some(3));
    assert_eq!(resmono(&["verify", "normalization", "--dims", "5..2"]).status.code(), Some(3));
    assert_eq!(resmono(&["nonsense"]).status.code(), Some(3));
    assert_eq!(resmono(&["--help"]).status.code(), Some(0));
}

#[test]
fn normalization_prints_the_table() {
    let o = resmono(&["verify", "normalization", "--dims", "2..3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    // log2(3) - 1 and log2(4) - 1
    assert!(text.contains("0.584962500721"), "{text}");
    assert!(text.contains("1.000000000000"), "{text}");
    assert!(text.contains("normalization: 2 trials, 2 pass"));
}

#[test]
fn measures_phi2_ree_brackets_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("phi2.json");
    state_file::write_state(&path, &states::max_entangled(2).unwrap()).unwrap();
    let o = resmono(&["measures", path.to_str().unwrap(), "--monotone=ree", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let rows: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let (lo, hi) = (rows[0]["lower"].as_f64().unwrap(), rows[0]["upper"].as_f64().unwrap());
    assert!(lo <= 1.0 + 1e-9 && hi >= 1.0 - 1e-9 && hi - lo < 2e-3, "[{lo}, {hi}]");
    assert_eq!(resmono(&["measures", path.to_str().unwrap(), "--monotone=nope"]).status.code(), Some(3));
}

#[test]
fn config_file_report_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("suite.toml");
    std::fs::write(&cfg, "[pinsker]\ntrials = 3\nseed = 4\n").unwrap();
    let out = dir.path().join("r.json");
    let csv = dir.path().join("r.csv");
    let o = resmono(&["verify", "pinsker", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--csv", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 4);
    let converted = resmono(&["report", out.to_str().unwrap(), "--format", "csv"]);
    assert_eq!(converted.status.code(), Some(0));
    assert_eq!(stdout(&converted), std::fs::read_to_string(&csv).unwrap());

    std::fs::write(&cfg, "[pinsker]\ntrials = \"many\"\n").unwrap();
    assert_eq!(resmono(&["verify", "pinsker", "--config", cfg.to_str().unwrap()]).status.code(), Some(3));
    // the failed run left no report behind
    let missing = dir.path().join("none.json");
    resmono(&["verify", "pinsker", "--config", cfg.to_str().unwrap(), "--out", missing.to_str().unwrap()]);
    assert!(!Path::new(&missing).exists());
}

#[test]
fn superadditivity_refuses_undeclared_monotones() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("suite.toml");
    std::fs::write(&cfg, "[superadd]\nmonotone = \"ree\"\n").unwrap();
    let o = resmono(&["verify", "superadd", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("does not declare"));
}

#[test]
fn catalysis_sweep_on_a_separable_state() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sep.json");
    state_file::write_state(&path, &states::isotropic(2, 0.4).unwrap()).unwrap();
    let out = dir.path().join("sweep.json");
    let o = resmono(&["catalysis", "sweep", path.to_str().unwrap(), "--cat-dim", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for r in rows {
        assert!(r["upper"].as_f64().unwrap() <= 0.5 + 1e-3);
    }
}
