use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use plab_cli::experiment::{run_sweep, Status};
use plab_cli::output::{manifest_hash, sweep_csv};
use plab_cli::{run_single, CliError, ExperimentConfig};

fn plab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn small_config(dir: &Path, extra: &str) -> std::path::PathBuf {
    let path = dir.join("run.cfg");
    fs::write(
        &path,
        format!(
            "n_rotor = 64\nn_steps = 400\nt_a = 200\nt_b = 400\nstride = 1\nepsilon_list = 0.1, 2000\nout_dir = {}\n{extra}",
            dir.join("out").display()
        ),
    )
    .unwrap();
    path
}

fn small() -> ExperimentConfig {
    ExperimentConfig::parse("n_rotor = 64\nn_steps = 400\nt_a = 200\nt_b = 400\nstride = 1\nepsilon_list = 0, 0.1, 2000").unwrap()
}

#[test]
fn repeated_runs_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let cfg = cfg.to_str().unwrap();
    let read = |name: &str| fs::read(dir.path().join("out").join(name)).unwrap();

    assert!(plab(&["run", "--config", cfg, "--epsilon", "2000"]).status.success());
    let first: Vec<Vec<u8>> = ["trajectory.csv", "offdiag.csv", "summary.json"].iter().map(|n| read(n)).collect();
    assert!(plab(&["run", "--config", cfg, "--epsilon", "2000"]).status.success());
    let second: Vec<Vec<u8>> = ["trajectory.csv", "offdiag.csv", "summary.json"].iter().map(|n| read(n)).collect();
    assert_eq!(first, second);

    let csv = String::from_utf8(first[0].clone()).unwrap();
    let manifest = fs::read_to_string(dir.path().join("out/manifest.json")).unwrap();
    let m: serde_json::Value = serde_json::from_str(&manifest).unwrap();
    let hash = m["manifest_sha256"].as_str().unwrap();
    assert_eq!(csv.lines().next().unwrap(), format!("# manifest {hash}"));
    // Step 0 plus one row per period.
    assert_eq!(csv.lines().count(), 2 + 401);
    assert!(dir.path().join("out/final.ckpt").exists());
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    for extra in ["bogus = 1", "stride = 0", "n_rotor = 100", "epsilon_list = nan"] {
        let cfg = small_config(dir.path(), extra);
        let out = plab(&["run", "--config", cfg.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{extra}");
    }
    let out = plab(&["run", "--config", "/nonexistent/plab.cfg"]);
    assert_eq!(out.status.code(), Some(2));
    let out = plab(&["oracle", "--n-rotor", "128"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oracle_failure_exits_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let cfg = cfg.to_str().unwrap();
    let ok = plab(&["oracle", "--config", cfg, "--n-rotor", "8", "--n-states", "3"]);
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    let bad = plab(&["oracle", "--config", cfg, "--n-rotor", "8", "--n-states", "3", "--tolerance", "0"]);
    assert_eq!(bad.status.code(), Some(3));
}

#[test]
fn single_sample_typicality_reports_null_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let args = ["typicality", "--config", cfg.to_str().unwrap(), "--n-env", "16", "--n-samples", "1", "--seed", "4"];
    let out = plab(&args);
    assert!(out.status.success());
    let body = fs::read_to_string(dir.path().join("out/typicality.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&body).unwrap();
    assert!(v["ratio_se"].is_null() && v["avg_d_se"].is_null());
    assert!(v["ratio"].as_f64().unwrap().is_finite());
    assert!(plab(&args).status.success());
    assert_eq!(fs::read_to_string(dir.path().join("out/typicality.json")).unwrap(), body);
}

#[test]
fn uncoupled_run_is_not_a_pointer_state() {
    let r = run_single(&small(), 0.0).unwrap();
    assert_eq!(r.status, Status::NoPs);
    assert!(r.d_hs.is_finite() && r.d_hi.is_finite());
}

#[test]
fn sweep_rows_are_complete_and_ordered() {
    let mut cfg = small();
    cfg.epsilons = vec![2000.0, 0.0, 0.1];
    let sweep = run_sweep(&cfg, 2).unwrap();
    let eps: Vec<f64> = sweep.points.iter().map(|p| p.epsilon).collect();
    assert_eq!(eps, vec![0.0, 0.1, 2000.0]);

    let mut broken = sweep.clone();
    broken.points[1].run = Err(CliError::Numerical("norm drift".into()));
    let csv = sweep_csv(&manifest_hash(&cfg, &[]), &broken);
    let rows: Vec<&str> = csv.lines().skip(2).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].split(',').nth(1).unwrap().starts_with("error: ") && rows[1].contains("norm drift"));
    let cols = csv.lines().nth(1).unwrap().split(',').count();
    assert!(rows.iter().all(|r| r.split(',').count() == cols));
}

#[test]
fn sweep_needs_two_points() {
    let mut cfg = small();
    cfg.epsilons = vec![1.0];
    assert!(matches!(run_sweep(&cfg, 1), Err(CliError::Config(_))));
}

#[test]
fn manifest_hash_tracks_config() {
    let a = small();
    let mut b = small();
    assert_eq!(manifest_hash(&a, &[]), manifest_hash(&b, &[]));
    b.rotor_seed = 2;
    assert_ne!(manifest_hash(&a, &[]), manifest_hash(&b, &[]));
    assert_ne!(manifest_hash(&a, &[]), manifest_hash(&a, &[("subcommand", "run".into())]));
}
