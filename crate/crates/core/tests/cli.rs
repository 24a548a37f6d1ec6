use std::path::Path;
use std::process::{Command, Output};

use floquet_ep::bloch::Trajectory;
use floquet_ep::cli::Sidecar;
use floquet_ep::sweep::{read_contours_csv, read_sweep_csv, SWEEP_CSV_HEADER};

fn floquet_ep(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_floquet-ep"))
        .current_dir(dir)
        .env_remove("FLOQUET_EP_OUT_DIR")
        .env_remove("FLOQUET_EP_THREADS")
        .args(args)
        .output()
        .expect("binary runs")
}

fn read(path: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(path).unwrap()
}

const SWEEP: [&str; 9] = [
    "sweep",
    "--family",
    "drive-square",
    "--dissipator",
    "minus",
    "--gamma",
    "0:2:12",
    "--omega",
    "0.5:2.5:15",
];

#[test]
fn sweep_writes_csv_contours_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = floquet_ep(dir.path(), &[&SWEEP[..], &["--out", "run/a"]].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let rows = read_sweep_csv(&read(dir.path().join("run/a.csv"))[..]).unwrap();
    assert_eq!(rows.len(), 12 * 15);
    let text = String::from_utf8(read(dir.path().join("run/a.csv"))).unwrap();
    assert_eq!(text.lines().next().unwrap(), SWEEP_CSV_HEADER.join(","));

    let pts = read_contours_csv(&read(dir.path().join("run/a.contours.csv"))[..]).unwrap();
    assert!(pts.iter().all(|p| p.ip >= 0.999));
    // the Ω = 2 resonance has branches near γ = 0
    assert!(pts.iter().any(|p| (p.omega - 2.0).abs() < 0.2 && p.gamma < 0.5));

    let sidecar = Sidecar::read(&dir.path().join("run/a.json")).unwrap();
    assert_eq!(sidecar.tool, "floquet-ep");
    let json: serde_json::Value = serde_json::from_slice(&read(dir.path().join("run/a.json"))).unwrap();
    assert_eq!(json["config"]["command"], "sweep");
    assert_eq!(json["config"]["spec"]["delta"], 1.0);
    assert_eq!(json["config"]["contours"]["axis"], "both");
}

#[test]
fn sweeps_are_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    assert!(floquet_ep(dir.path(), &[&["--threads", "1"], &SWEEP[..], &["--out", "a"]].concat()).status.success());
    let out = Command::new(env!("CARGO_BIN_EXE_floquet-ep"))
        .current_dir(dir.path())
        .env("FLOQUET_EP_THREADS", "3")
        .args([&SWEEP[..], &["--out", "b"]].concat())
        .output()
        .unwrap();
    assert!(out.status.success());
    for suffix in [".csv", ".contours.csv"] {
        assert_eq!(read(dir.path().join(format!("a{suffix}"))), read(dir.path().join(format!("b{suffix}"))));
    }
}

#[test]
fn replaying_a_sidecar_reproduces_the_outputs() {
    let dir = tempfile::tempdir().unwrap();
    assert!(floquet_ep(dir.path(), &[&SWEEP[..], &["--out", "a"]].concat()).status.success());
    let out = floquet_ep(dir.path(), &["replay", "a.json", "--out", "again"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read(dir.path().join("a.csv")), read(dir.path().join("again.csv")));
    assert_eq!(read(dir.path().join("a.contours.csv")), read(dir.path().join("again.contours.csv")));

    let a = Sidecar::read(&dir.path().join("a.json")).unwrap();
    let b = Sidecar::read(&dir.path().join("again.json")).unwrap();
    assert_eq!(b.config.out(), Path::new("again"));
    assert_eq!(serde_json::to_value(&a.config).unwrap()["spec"], serde_json::to_value(&b.config).unwrap()["spec"]);
}

#[test]
fn output_directory_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_floquet-ep"))
        .current_dir(dir.path())
        .env("FLOQUET_EP_OUT_DIR", dir.path().join("outputs"))
        .args(["analytic", "--slopes", "drive", "minus", "2", "--out", "s"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("outputs/s.csv").exists());
    assert!(dir.path().join("outputs/s.json").exists());
}

#[test]
fn analytic_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = floquet_ep(dir.path(), &["analytic", "--slopes", "drive", "minus", "3", "--out", "slopes"]);
    assert!(out.status.success());
    let text = String::from_utf8(read(dir.path().join("slopes.csv"))).unwrap();
    assert_eq!(text.lines().nth(1).unwrap(), "drive,minus,3,12,-12");

    assert!(floquet_ep(dir.path(), &["analytic", "--ladder", "diss", "--max-index", "13", "--out", "ladder"])
        .status
        .success());
    let text = String::from_utf8(read(dir.path().join("ladder.csv"))).unwrap();
    assert_eq!(text.lines().count(), 1 + 14);
    assert!(text.lines().skip(1).all(|l| l.contains(",ep,")));
    let companions = String::from_utf8(read(dir.path().join("ladder.companions.csv"))).unwrap();
    assert_eq!(companions.lines().nth(1).unwrap(), "1,2,enhanced-ip,,");

    assert!(floquet_ep(dir.path(), &["analytic", "--contour", "square-drive", "--omega", "0.1:3:40", "--out", "roots"])
        .status
        .success());
    let text = String::from_utf8(read(dir.path().join("roots.csv"))).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("omega,gamma_root_1,gamma_root_2"));
    let first: Vec<f64> = lines.next().unwrap().split(',').filter(|s| !s.is_empty()).map(|s| s.parse().unwrap()).collect();
    assert_eq!(first[0], 0.1);
    let largest = first[1..].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert!((largest - 8.0).abs() < 0.05 * 8.0, "{largest}");
}

#[test]
fn trajectory_csv_has_bloch_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = floquet_ep(
        dir.path(),
        &[
            "trajectory", "--family", "drive-square", "--dissipator", "minus", "--gamma", "0.4", "--omega", "2",
            "--t-end", "6.2832", "--dt", "0.5", "--s0", "0,0,-1", "--stroboscopic", "--out", "traj",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(read(dir.path().join("traj.csv"))).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,s_x,s_y,s_z");
    let traj = Trajectory::read_csv(text.as_bytes()).unwrap();
    // Ω = 2 gives T = π: samples at 0, π, 2π
    assert_eq!(traj.samples.len(), 3);
    assert!((traj.samples[2].t - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    assert_eq!(traj.samples[0].s_z, -1.0);
}

#[test]
fn validate_filters_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = floquet_ep(dir.path(), &["validate", "--only", "bloch-crosscheck", "--json", "report.json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("bloch-crosscheck") && stdout.contains("PASS"));
    assert!(!stdout.contains("cptp-invariants"));
    let report: serde_json::Value = serde_json::from_slice(&read(dir.path().join("report.json"))).unwrap();
    assert_eq!(report[0]["name"], "bloch-crosscheck");
    assert_eq!(report[0]["passed"], true);
}

#[test]
fn flipped_jump_sign_fails_trace_preservation() {
    let dir = tempfile::tempdir().unwrap();
    let out = floquet_ep(dir.path(), &["validate", "--only", "cptp-invariants", "--jump-sign", "-1"]);
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("FAIL") && stdout.contains("violated: trace"), "{stdout}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| floquet_ep(dir.path(), args).status.code();
    assert_eq!(code(&["sweep", "--family", "drive-cos"]), Some(2));
    assert_eq!(code(&["sweep", "--family", "drive-cos", "--dissipator", "minus", "--gamma", "0:1:1", "--omega", "1:2:3"]), Some(2));
    assert_eq!(code(&["sweep", "--family", "static", "--dissipator", "minus", "--gamma", "0:1:3", "--omega", "1:2:3"]), Some(2));
    assert_eq!(code(&["validate", "--only", "no-such-check"]), Some(2));
    assert_eq!(code(&["replay", "missing.json"]), Some(3));
    std::fs::write(dir.path().join("file"), b"").unwrap();
    assert_eq!(code(&["analytic", "--slopes", "drive", "z", "1", "--out", "file/x"]), Some(3));
    assert_eq!(code(&["--version"]), Some(0));
}
