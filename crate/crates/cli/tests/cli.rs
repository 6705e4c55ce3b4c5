use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
emit_plots = true

[de]
kappa1 = -1.0
kappa0 = 8.0

[ansatz]
depth = 2

[search]
p_c = 4.0
n_random_init = 30
n_guided = 20
candidate_pool_size = 60
refit_every = 10

[oracle]
f0 = -1.0
"#;

fn quva(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quva")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn run_writes_artifacts_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "small.toml", SMALL);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let out = quva(&["run", &cfg, "--output-dir", a.to_str().unwrap(), "--seed", "4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["records.csv", "records.json", "summary.json", "config.toml", "solution.svg", "landscape.svg"] {
        assert!(a.join(f).exists(), "missing {f}");
    }
    let out = quva(&["run", &cfg, "--output-dir", b.to_str().unwrap(), "--seed", "4", "--no-plots"]);
    assert!(out.status.success());
    assert!(!b.join("solution.svg").exists());
    assert_eq!(std::fs::read(a.join("records.csv")).unwrap(), std::fs::read(b.join("records.csv")).unwrap());

    let csv = std::fs::read_to_string(a.join("records.csv")).unwrap();
    assert_eq!(csv.lines().count(), 51);
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(a.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seed"], 4);
    assert_eq!(summary["n_records"], 50);

    let rerun = quva(&["run", a.join("config.toml").to_str().unwrap(), "--output-dir", tmp.path().join("c").to_str().unwrap()]);
    assert!(rerun.status.success());
    assert_eq!(std::fs::read(a.join("records.csv")).unwrap(), std::fs::read(tmp.path().join("c/records.csv")).unwrap());
}

#[test]
fn shots_flag_switches_mode() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "small.toml", SMALL);
    let dir = tmp.path().join("s");
    let out = quva(&["run", &cfg, "--output-dir", dir.to_str().unwrap(), "--shots", "1000", "--no-plots"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let copied = std::fs::read_to_string(dir.join("config.toml")).unwrap();
    assert!(copied.contains("mode = \"shots\"") && copied.contains("shots = 1000"));
}

#[test]
fn missing_field_exits_2_and_names_it() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "bad.toml", &SMALL.replace("kappa0 = 8.0\n", ""));
    let out = quva(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kappa0"));
}

#[test]
fn malformed_and_invalid_configs_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let syntax = write(tmp.path(), "syntax.toml", "[de\nkappa1 = 1");
    assert_eq!(quva(&["run", &syntax]).status.code(), Some(2));
    let negative = write(tmp.path(), "neg.toml", &SMALL.replace("p_c = 4.0", "p_c = -4.0"));
    let out = quva(&["run", &negative]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("p_c"));
    assert_eq!(quva(&["run", tmp.path().join("absent.toml").to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_3_with_record_index() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL.replace("kappa0 = 8.0", "kappa0 = 1.7e308\nkappa_n = 1.7e308");
    let cfg = write(tmp.path(), "inf.toml", &text);
    let out = quva(&["run", &cfg, "--output-dir", tmp.path().join("o").to_str().unwrap(), "--no-plots"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("record 0"), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(tmp.path().join("o/records.csv").exists());
}

#[test]
fn verify_passes_repeatably_and_detects_bad_shift() {
    let first = quva(&["verify"]);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stdout));
    let second = quva(&["verify"]);
    assert_eq!(first.stdout, second.stdout);
    let broken = quva(&["verify", "--shift-convention", "backward"]);
    assert_eq!(broken.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&broken.stdout).contains("FAIL grid_translation"));
}

#[test]
fn correlation_writes_one_file_per_depth() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "corr.toml", "n_samples = 100\nseed = 3\n");
    let dir = tmp.path().join("corr");
    let out = quva(&["correlation", &cfg, "--output-dir", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for d in 0..4 {
        let csv = std::fs::read_to_string(dir.join(format!("correlation_d{d}.csv"))).unwrap();
        assert_eq!(csv.lines().count(), 101);
        assert!(dir.join(format!("correlation_d{d}.svg")).exists());
    }
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("correlation_summary.json")).unwrap()).unwrap();
    for depth in summary.as_array().unwrap() {
        assert_eq!(depth["cauchy_schwarz_violations"], 0);
    }
}
