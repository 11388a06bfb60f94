use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_robust-select"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn data_file() -> String {
    format!("{}/data/ops.csv", env!("CARGO_MANIFEST_DIR"))
}

fn write_system(dir: &Path, name: &str, values: impl Iterator<Item = f64>) {
    let text: String = values.map(|v| format!("{v}\n")).collect();
    fs::write(dir.join(name), text).unwrap();
}

fn two_system_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    write_system(
        dir.path(),
        "1_1.csv",
        (0..200).map(|r| 1e-3 * ((r * 7919 % 101) as f64 / 101.0)),
    );
    write_system(
        dir.path(),
        "2_1.csv",
        (0..200).map(|r| 1.0 + 1e-3 * ((r * 104_729 % 97) as f64 / 97.0)),
    );
    dir
}

#[test]
fn bench_writes_report_with_pcs() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&[
        "bench",
        "--k",
        "3",
        "--m",
        "3",
        "--means",
        "sc",
        "--vars",
        "ev",
        "--proc",
        "t",
        "--rule",
        "add",
        "--delta",
        "0.5",
        "--runs",
        "20",
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let files: Vec<_> = fs::read_dir(out.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    assert_eq!(files.len(), 2);
    let csv = files
        .iter()
        .find(|p| p.extension().unwrap() == "csv")
        .unwrap();
    let text = fs::read_to_string(csv).unwrap();
    assert!(text.lines().next().unwrap().contains("realized_pcs"));
    let json = files
        .iter()
        .find(|p| p.extension().unwrap() == "json")
        .unwrap();
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(v["config"]["seed"], 1);
    assert_eq!(v["config"]["runs"], 20);
}

#[test]
fn additive_rule_with_sequential_is_rejected() {
    let o = run(&["bench", "--proc", "s", "--rule", "add"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("additive"));
}

#[test]
fn single_alternative_is_rejected() {
    assert_eq!(code(&run(&["bench", "--k", "1"])), 2);
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(code(&run(&["bench", "--bogus", "3"])), 2);
}

#[test]
fn nonpositive_sigma_is_rejected() {
    assert_eq!(code(&run(&["queue", "--sigma", "0"])), 2);
    assert_eq!(code(&run(&["queue", "--sigma=-1"])), 2);
}

#[test]
fn queue_study_reports_relative_differences() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&[
        "queue",
        "--sigma",
        "1",
        "--ell",
        "50",
        "--reps",
        "2",
        "--customers",
        "200",
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_dir(out.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.extension().unwrap() == "csv")
        .unwrap();
    assert!(fs::read_to_string(csv).unwrap().contains("BF/RSB"));
}

#[test]
fn queue_path_exports_raw_rows() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("path.csv");
    let out = run(&[
        "queue",
        "--preset",
        "paper-sec6",
        "--servers",
        "9",
        "--customers",
        "300",
        "--export-path",
        file.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&file).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "customer_index,arrival,wait,abandoned"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 300);
    assert!(rows[0].starts_with("1,"));
}

#[test]
fn unknown_queue_preset_is_rejected() {
    let out = run(&["queue", "--preset", "nope", "--reps", "1"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn schedule_study_runs_on_bundled_data() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&[
        "schedule",
        "--data",
        &data_file(),
        "--gamma",
        "0.5",
        "--reps",
        "2",
        "--eval",
        "200",
        "--scenario-cap",
        "8",
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_dir(out.path()).unwrap().count(), 2);
}

#[test]
fn schedule_without_data_file_is_rejected() {
    assert_eq!(
        code(&run(&["schedule", "--data", "/nonexistent/ops.csv"])),
        2
    );
}

#[test]
fn select_picks_the_smaller_system() {
    let dir = two_system_dir();
    let o = run(&["select", "--samples", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    // Indices in the JSON output are one-based.
    assert_eq!(v["outcome"]["selected"], 1);
    assert_eq!(v["seed"], 1);
}

#[test]
fn select_is_deterministic() {
    let dir = two_system_dir();
    let a = run(&[
        "select",
        "--samples",
        dir.path().to_str().unwrap(),
        "--seed",
        "9",
    ]);
    let b = run(&[
        "select",
        "--samples",
        dir.path().to_str().unwrap(),
        "--seed",
        "9",
    ]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn select_rejects_empty_and_misaligned_directories() {
    let empty = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&run(&[
            "select",
            "--samples",
            empty.path().to_str().unwrap()
        ])),
        2
    );
    let dir = two_system_dir();
    write_system(dir.path(), "2_1.csv", (0..150).map(|r| r as f64));
    let o = run(&["select", "--samples", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("misaligned"));
}

#[test]
fn select_with_additive_rule_is_rejected() {
    let dir = two_system_dir();
    assert_eq!(
        code(&run(&[
            "select",
            "--samples",
            dir.path().to_str().unwrap(),
            "--rule",
            "add"
        ])),
        2
    );
}

#[test]
fn select_drives_an_external_sampler() {
    let script = r#"while read r; do echo "0.$((r * 7919 % 101)) 2.$((r * 104729 % 97))"; done"#;
    let o = run(&[
        "select", "--exec", script, "--k", "2", "--m", "1", "--delta", "0.5",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["outcome"]["selected"], 1);
}

#[test]
fn failing_external_sampler_is_a_runtime_error() {
    let o = run(&["select", "--exec", "echo 1 2 3", "--k", "2", "--m", "1"]);
    assert_eq!(code(&o), 1);
}
