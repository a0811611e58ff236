use std::path::Path;
use std::process::{Command, Output};

fn migdet(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_migdet"))
        .args(args)
        .arg("--out")
        .arg(out)
        .arg("--threads")
        .arg("2")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn zero_repeats_is_rejected_with_field_name() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[robustness]\nrepeats = 0\n");
    let out = migdet(&["robustness", "--config", &cfg], &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("robustness.repeats"), "{err}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn trials_flag_is_validated_too() {
    let dir = tempfile::tempdir().unwrap();
    let out = migdet(&["influence", "--trials", "0"], &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_key_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "seed = 4\n\n[detect]\npfa = 0.01\nthreshold = 3\n");
    let out = migdet(&["detect", "--config", &cfg], &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 5") && err.contains("threshold"), "{err}");
}

#[test]
fn missing_config_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = migdet(&["mean", "--config", "/nonexistent/migdet.toml"], &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn detect_is_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "seed = 17\n[detect]\npfa = 0.1\ncalibration_trials = 100\npd_trials = 40\nscr_stop_db = 10.0\nscr_step_db = 5.0\nvalidation_trials = 50\n",
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(migdet(&["detect", "--config", &cfg], &a).status.success());
    let single = Command::new(env!("CARGO_BIN_EXE_migdet"))
        .args(["detect", "--config", &cfg, "--threads", "1", "--out"])
        .arg(&b)
        .output()
        .unwrap();
    assert!(single.status.success());
    let c = dir.path().join("c");
    assert!(migdet(&["detect", "--config", &cfg], &c).status.success());
    for name in ["detect.csv", "detect-thresholds.csv", "detect-cfar.csv"] {
        let x = std::fs::read(a.join(name)).unwrap();
        assert!(x == std::fs::read(b.join(name)).unwrap(), "{name} depends on the thread count");
        assert!(x == std::fs::read(c.join(name)).unwrap(), "{name} differs between runs");
    }
    assert_eq!(
        std::fs::read(a.join("detect.manifest.toml")).unwrap(),
        std::fs::read(c.join("detect.manifest.toml")).unwrap()
    );

    let pd = std::fs::read_to_string(a.join("detect.csv")).unwrap();
    let mut lines = pd.lines();
    assert_eq!(lines.next(), Some("detector,scr_db,pd,n_trials,ci_low,ci_high,threshold"));
    // 6 detectors × SCR {0, 5, 10}
    assert_eq!(lines.count(), 18);

    let manifest = std::fs::read_to_string(a.join("detect.manifest.toml")).unwrap();
    assert!(manifest.contains("seed = 17"));
    assert!(manifest.contains("calibration_trials = 100"));
    assert!(manifest.contains("[regularization_events]"));
}

#[test]
fn seed_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(migdet(&["divergence-table", "--seed", "1"], &a).status.success());
    assert!(migdet(&["divergence-table", "--seed", "2"], &b).status.success());
    let x = std::fs::read(a.join("divergence-table.csv")).unwrap();
    let y = std::fs::read(b.join("divergence-table.csv")).unwrap();
    assert_ne!(x, y);
}

#[test]
fn isosurface_points_lie_on_the_ball() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let run = migdet(&["isosurface", "--trials", "4"], &out);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let text = std::fs::read_to_string(out.join("isosurface.csv")).unwrap();
    let mut rows = 0;
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 5);
        if f[4] != "ok" {
            continue;
        }
        let l: Vec<f64> = [f[0], f[1], f[3]].iter().map(|s| s.parse().unwrap()).collect();
        // TSL ball of radius 1 around I, weighted at the point: ½Σ(λ−1)² = √(1+Σλ²)
        let half_sq: f64 = l.iter().map(|v| 0.5 * (v - 1.0).powi(2)).sum();
        let weight = (1.0 + l.iter().map(|v| v * v).sum::<f64>()).sqrt();
        assert!((half_sq - weight).abs() < 1e-6 * weight, "{line}");
        rows += 1;
    }
    assert!(rows > 0);
}

#[test]
fn robustness_and_influence_write_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[robustness]\nk_grid = [4, 8]\nmeans = [\"tld\", \"scm-arithmetic\"]\n\n[influence]\ninliers = 6\noutlier_counts = [1, 2]\nmeans = [\"tsl\", \"airm\"]\n",
    );
    let out = dir.path().join("out");
    assert!(migdet(&["robustness", "--config", &cfg, "--trials", "3"], &out).status.success());
    assert!(migdet(&["influence", "--config", &cfg, "--trials", "2"], &out).status.success());
    let r = std::fs::read_to_string(out.join("robustness.csv")).unwrap();
    assert_eq!(r.lines().count(), 1 + 4);
    let i = std::fs::read_to_string(out.join("influence.csv")).unwrap();
    assert_eq!(i.lines().count(), 1 + 4);
}
