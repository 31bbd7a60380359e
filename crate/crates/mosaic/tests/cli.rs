//! End-to-end checks of the command-line interface and its file formats.

use std::path::Path;
use std::process::Command;

fn mosaic() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mosaic"))
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

const TOY_SPACE: &str = r#"{
  "name": "toy",
  "steps": [
    {
      "index": 1,
      "algorithms": [
        {
          "name": "only",
          "default": {"x": 0.5},
          "hyperparameters": [
            {"name": "x", "kind": "continuous", "domain": [0.0, 1.0]}
          ]
        }
      ]
    }
  ]
}"#;

#[test]
fn run_on_suite_problem_writes_a_parseable_log() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("log.ldjson");
    let status = mosaic()
        .args(["run", "--suite", "desk100", "--problem", "disc-a1"])
        .args(["--budget", "15", "--seed", "3"])
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    let header: serde_json::Value = serde_json::from_str(lines.next().unwrap()).unwrap();
    assert_eq!(header["problem"], "disc-a1");
    assert_eq!(header["method"], "mosaic");
    assert_eq!(header["seed"], 3);
    let rows: Vec<serde_json::Value> = lines.map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 15);
    for row in &rows {
        assert!(row["reward"].is_number());
        assert!(row["best_so_far"].is_number());
        assert!(row["pipeline"]["structure"].is_array());
    }
}

#[test]
fn identical_invocations_reproduce_the_log_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.ldjson"), dir.path().join("b.ldjson"));
    for out in [&a, &b] {
        let status = mosaic()
            .args(["run", "--suite", "desk100", "--problem", "mix-c1"])
            .args(["--budget", "20", "--seed", "7", "--method", "mosaic-ucb"])
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn run_against_an_external_evaluator() {
    let dir = tempfile::tempdir().unwrap();
    let space = dir.path().join("space.json");
    write(&space, TOY_SPACE);
    let status = mosaic()
        .arg("run")
        .arg("--space")
        .arg(&space)
        .args(["--budget", "5", "--out"])
        .arg(dir.path().join("ext.ldjson"))
        .args(["--eval-cmd", "sh", "-c", r#"read p; echo "{\"reward\": 0.5}""#])
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(dir.path().join("ext.ldjson")).unwrap();
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn suite_then_rank_produces_the_expected_csv() {
    let dir = tempfile::tempdir().unwrap();
    let logs = dir.path().join("logs");
    let status = mosaic()
        .args(["suite", "--suite", "desk100", "--budget", "10", "--seeds", "2"])
        .args(["--method", "mosaic", "--method", "random"])
        .arg("--out")
        .arg(&logs)
        .status()
        .unwrap();
    assert!(status.success());
    // 10 problems x 2 methods x 2 seeds
    assert_eq!(std::fs::read_dir(&logs).unwrap().count(), 40);

    let output = mosaic().arg("rank").arg(&logs).output().unwrap();
    assert!(output.status.success());
    let csv = String::from_utf8(output.stdout).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "method,checkpoint,avg_rank");
    assert_eq!(lines.len(), 3);
    for line in &lines[1..] {
        let fields: Vec<&str> = line.split(',').collect();
        assert!(matches!(fields[0], "mosaic" | "random"));
        assert_eq!(fields[1], "10");
        fields[2].parse::<f64>().unwrap();
    }
}

#[test]
fn rank_rejects_an_incomplete_grid() {
    let dir = tempfile::tempdir().unwrap();
    let logs = dir.path().join("logs");
    let status = mosaic()
        .args(["suite", "--budget", "5", "--seeds", "2", "--method", "mosaic"])
        .arg("--out")
        .arg(&logs)
        .status()
        .unwrap();
    assert!(status.success());
    std::fs::remove_file(logs.join("disc-a1__mosaic__1.ldjson")).unwrap();
    let output = mosaic().arg("rank").arg(&logs).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("disc-a1"));
}

#[test]
fn validate_space_accepts_good_and_rejects_bad() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    write(&good, TOY_SPACE);
    let output = mosaic().arg("validate-space").arg("--space").arg(&good).output().unwrap();
    assert!(output.status.success());
    assert!(String::from_utf8_lossy(&output.stdout).starts_with("ok:"));

    let bad = dir.path().join("bad.json");
    write(&bad, &TOY_SPACE.replace(r#"[0.0, 1.0]"#, r#"[1.0, 0.0]"#));
    let output = mosaic().arg("validate-space").arg("--space").arg(&bad).output().unwrap();
    assert_eq!(output.status.code(), Some(2));

    let missing = dir.path().join("nope.json");
    let output = mosaic().arg("validate-space").arg("--space").arg(&missing).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn bad_params_exit_with_code_two() {
    let status = mosaic()
        .args(["run", "--suite", "desk100", "--problem", "disc-a1", "--budget", "5"])
        .args(["--params", r#"{"no_such_knob": 1}"#])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    let status = mosaic()
        .args(["run", "--suite", "desk100", "--problem", "disc-a1", "--budget", "5"])
        .args(["--params", "not json"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn archive_build_and_inspect_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let archive = dir.path().join("archive.json");
    let status = mosaic()
        .args(["archive", "build", "--budget", "10", "--seed", "1"])
        .arg("--out")
        .arg(&archive)
        .status()
        .unwrap();
    assert!(status.success());
    let output = mosaic().args(["archive", "inspect", "--archive"]).arg(&archive).output().unwrap();
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    assert!(text.contains("entries: 10"));

    // a warm-started run accepts the archive
    let status = mosaic()
        .args(["run", "--suite", "desk100", "--problem", "mix-c1", "--budget", "10"])
        .arg("--archive")
        .arg(&archive)
        .arg("--out")
        .arg(dir.path().join("warm.ldjson"))
        .status()
        .unwrap();
    assert!(status.success());
}

#[test]
fn unknown_problem_exits_with_code_two() {
    let status = mosaic()
        .args(["run", "--suite", "desk100", "--problem", "no-such", "--budget", "5"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}
