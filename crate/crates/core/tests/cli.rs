use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_xxz-squeeze");

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("XXZSQ_SEED")
        .output()
        .expect("binary runs")
}

fn small_holes(out: &Path, threads: &str) -> Output {
    run(&[
        "dtwa",
        "--preset",
        "paper-3d-holes",
        "--set",
        "lattice.dims=6,6,6",
        "--set",
        "engine.steps=20",
        "--set",
        "output.raw=true",
        "--trajectories",
        "70",
        "--threads",
        threads,
        "--seed",
        "17",
        "--out",
        out.to_str().unwrap(),
    ])
}

#[test]
fn output_is_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let (one, eight) = (dir.path().join("one"), dir.path().join("eight"));
    assert!(small_holes(&one, "1").status.success());
    assert!(small_holes(&eight, "8").status.success());
    for f in ["dtwa_curve.csv", "dtwa_moments.csv", "dtwa_raw.csv"] {
        let a = fs::read(one.join(f)).unwrap();
        let b = fs::read(eight.join(f)).unwrap();
        assert!(!a.is_empty());
        assert!(a == b, "{f} differs between thread counts");
    }
}

#[test]
fn analyze_without_noise_reproduces_the_engine_curve() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    assert!(small_holes(&sim, "2").status.success());
    let ana = dir.path().join("ana");
    let out = run(&[
        "analyze",
        "--input",
        sim.join("dtwa_raw.csv").to_str().unwrap(),
        "--out",
        ana.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let a = fs::read_to_string(sim.join("dtwa_curve.csv")).unwrap();
    let b = fs::read_to_string(ana.join("analyze_curve.csv")).unwrap();
    assert_eq!(a, b);

    // Fast noise shows up in the full variance.
    let noisy = dir.path().join("noisy");
    let out = run(&[
        "analyze",
        "--input",
        sim.join("dtwa_raw.csv").to_str().unwrap(),
        "--noise",
        "fast",
        "--noise-rms",
        "0.3",
        "--out",
        noisy.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_ne!(a, fs::read_to_string(noisy.join("analyze_curve.csv")).unwrap());
}

#[test]
fn params_for_symmetric_interactions() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["params", "--preset", "symmetric-u", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("params.csv")).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    let col = |name: &str| row[header.iter().position(|h| *h == name).unwrap()];
    assert!((col("delta") - 1.0).abs() < 1e-12);
    assert_eq!(col("hz_over_j"), 0.0);
    assert_eq!(col("hz_hz"), 0.0);
}

#[test]
fn oracle_matches_the_curve_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "oracle",
        "--set",
        "lattice.dims=4",
        "--set",
        "engine.steps=5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("oracle_curve.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,Sx_mean,Sx_err,var_min,var_max,theta_min,xi2,xi2_err");
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(run(&["dtwa", "--set", "bogus=1", "--out", d]).status.code(), Some(2));
    assert_eq!(run(&["dtwa", "--preset", "nope"]).status.code(), Some(2));
    assert_eq!(
        run(&["analyze", "--input", dir.path().join("missing.csv").to_str().unwrap()]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["dtwa", "--set", "engine.dt=-0.1", "--out", d]).status.code(), Some(3));
    assert_eq!(run(&["oracle", "--set", "lattice.dims=20", "--out", d]).status.code(), Some(3));
    // Output directory blocked by a regular file.
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let code = run(&["params", "--preset", "symmetric-u", "--out", blocker.to_str().unwrap()]).status.code();
    assert_eq!(code, Some(4));
}

#[test]
fn printed_config_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let first = run(&["--preset", "paper-1d-holes", "--seed", "5", "--print-config"]);
    assert!(first.status.success());
    let path = dir.path().join("run.conf");
    fs::write(&path, &first.stdout).unwrap();
    let second = run(&["--config", path.to_str().unwrap(), "--print-config"]);
    assert!(second.status.success());
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn environment_overrides_file_and_flags_override_environment() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.conf");
    fs::write(&path, "seed = 1\nensemble.trajectories = 10\n").unwrap();
    let out = Command::new(BIN)
        .args(["--config", path.to_str().unwrap(), "--trajectories", "30", "--print-config"])
        .env("XXZSQ_SEED", "2")
        .env("XXZSQ_ENSEMBLE_TRAJECTORIES", "20")
        .output()
        .unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l.replace(' ', "") == "seed=2"), "{text}");
    assert!(text.lines().any(|l| l.replace(' ', "") == "ensemble.trajectories=30"), "{text}");
}

#[test]
fn presets_are_listed() {
    let out = run(&["--list-presets"]);
    let text = String::from_utf8(out.stdout).unwrap();
    for p in ["paper-3d-ideal", "paper-1d-holes", "shuffle-only", "symmetric-u", "imaging-demo"] {
        assert!(text.lines().any(|l| l == p), "{p}");
    }
}
