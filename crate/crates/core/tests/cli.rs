use std::path::Path;
use std::process::{Command, Output};

use qsync::experiments::{verify_manifest, Manifest, MANIFEST_FILE};

fn qsync(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsync")).args(args).output().expect("spawn qsync")
}

fn run_ok(args: &[&str]) -> Manifest {
    let out = qsync(args);
    assert!(out.status.success(), "qsync {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    let dir = args.iter().position(|a| *a == "--out").map(|i| args[i + 1]).unwrap();
    Manifest::read(&Path::new(dir).join(MANIFEST_FILE)).unwrap()
}

fn error_json(out: &Output) -> serde_json::Value {
    assert_eq!(out.status.code(), Some(2), "stdout: {}", String::from_utf8_lossy(&out.stdout));
    serde_json::from_slice(&out.stderr).expect("stderr is one JSON object")
}

const SMALL_SPIN_TRAJ: [&str; 10] = [
    "--set",
    "n_traj=6",
    "--set",
    "t_final=2.0",
    "--set",
    "spectrum_n_traj=2",
    "--set",
    "spectrum_t_final=20.0",
    "--set",
    "segment_time=10.0",
];

fn spin_traj(out: &str, seed: &str) -> Vec<String> {
    let mut a: Vec<String> = ["run", "spin-traj", "--out", out, "--seed", seed].iter().map(|s| s.to_string()).collect();
    a.extend(SMALL_SPIN_TRAJ.iter().map(|s| s.to_string()));
    a
}

fn strs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

#[test]
fn same_seed_gives_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let c = tmp.path().join("c");
    let ma = run_ok(&strs(&spin_traj(a.to_str().unwrap(), "11")));
    let mb = run_ok(&strs(&spin_traj(b.to_str().unwrap(), "11")));
    let mc = run_ok(&strs(&spin_traj(c.to_str().unwrap(), "12")));
    assert_eq!(ma.files, mb.files);
    assert_ne!(ma.files, mc.files);
    assert_eq!(ma.seed, 11);
    assert!(verify_manifest(&a, &ma).is_empty());
}

#[test]
fn manifest_reproduces_run_as_config() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    let again = tmp.path().join("again");
    let m1 = run_ok(&strs(&spin_traj(first.to_str().unwrap(), "5")));
    let manifest = first.join(MANIFEST_FILE);
    let m2 = run_ok(&["run", "spin-traj", "--config", manifest.to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert_eq!(m1.params, m2.params);
    assert_eq!(m1.files, m2.files);
}

#[test]
fn set_overrides_land_in_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let m = run_ok(&[
        "run",
        "spin-lc",
        "--out",
        out.to_str().unwrap(),
        "--set",
        "gamma_plus=0.25",
        "--set",
        "times=[0.0, 1.0]",
        "--set",
        "n_theta=11",
        "--set",
        "n_phi_sphere=12",
    ]);
    assert_eq!(m.scenario, "spin-lc");
    assert_eq!(m.params["gamma_plus"], 0.25);
    assert_eq!(m.params["times"], serde_json::json!([0.0, 1.0]));
    assert!(m.files.iter().any(|f| f.path.ends_with(".csv")));
}

#[test]
fn toml_config_section_is_read() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    std::fs::write(&cfg, "[spin-lc]\nomega = 3.0\ntimes = [0.0, 0.5]\nn_theta = 9\nn_phi_sphere = 10\n").unwrap();
    let out = tmp.path().join("o");
    let m = run_ok(&["run", "spin-lc", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(m.params["omega"], 3.0);
    assert_eq!(m.params["gamma_minus"], 1.0);
}

#[test]
fn unknown_scenario_is_json_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = qsync(&["run", "fig99", "--out", tmp.path().to_str().unwrap()]);
    let j = error_json(&out);
    assert_eq!(j["error"], "unknown-scenario");
    assert!(j["valid_ids"].as_array().unwrap().iter().any(|v| v == "qvdp-two"));
}

#[test]
fn unknown_parameter_is_json_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = qsync(&["run", "spin-lc", "--out", tmp.path().to_str().unwrap(), "--set", "kappa9=1"]);
    let j = error_json(&out);
    assert!(j["message"].as_str().unwrap().contains("kappa9"), "{j}");
}

#[test]
fn strict_turns_truncation_warning_into_error() {
    let tmp = tempfile::tempdir().unwrap();
    let args = |dir: &str| {
        vec![
            "run".to_string(),
            "qvdp-lc".into(),
            "--out".into(),
            dir.to_string(),
            "--set".into(),
            "n_max=3".into(),
            "--set".into(),
            "alpha0=[1.5, 0.0]".into(),
            "--set".into(),
            "times=[0.0, 0.5]".into(),
            "--set".into(),
            "xy_points=9".into(),
        ]
    };
    let lenient = tmp.path().join("lenient");
    let m = run_ok(&strs(&args(lenient.to_str().unwrap())));
    assert!(!m.files.is_empty());

    let strict_dir = tmp.path().join("strict");
    let mut a = args(strict_dir.to_str().unwrap());
    a.push("--strict".into());
    let j = error_json(&qsync(&strs(&a)));
    assert_eq!(j["error"], "strict");
}

#[test]
fn sweep_writes_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("s");
    let m = run_ok(&["sweep", "spin-two", "--out", out.to_str().unwrap(), "--delta", "-1:1:3", "--V", "0:2:2"]);
    assert_eq!(m.params["sweep_n_delta"], 3);
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 6);
    assert!(csv.lines().next().unwrap().starts_with("delta"));

    let bad = qsync(&["sweep", "spin-lc", "--out", out.to_str().unwrap()]);
    error_json(&bad);
}

#[test]
fn list_prints_every_scenario() {
    let out = qsync(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for id in ["classical-lc", "classical-two", "qvdp-lc", "qvdp-traj", "qvdp-two", "spin-lc", "spin-traj", "spin-two"] {
        assert!(text.contains(id), "{id} missing from list");
    }
}
