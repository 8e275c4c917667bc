use std::path::Path;
use std::process::{Command, Output};

fn sparsebench(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sparsebench"))
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .env_remove("SPARSEBENCH_RUNS_DIR")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = sparsebench(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

const CONFIG: &str = r#"{
  "run_name": "smoke",
  "seed": 4,
  "models": ["mlp"],
  "data": {"synth": {"rows": 1200, "separation": 1.5}},
  "arch": {"mlp": {"kind": "mlp", "hidden": [16, 8], "window": 1}},
  "train": {"max_epochs": 4, "patience": 2},
  "prune": {"events": 3, "recovery_epochs": 1},
  "shap": {"background_count": 10, "eval_count": 10, "coalition_samples": 400},
  "select": {"k": 10}
}"#;

#[test]
fn stages_produce_a_three_row_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("run.json"), CONFIG).unwrap();
    for stage in ["synth", "preprocess", "train", "prune", "select-features", "convert-sparse"] {
        ok(d, &[stage, "--config", "run.json"]);
    }
    let run = d.join("runs/smoke");
    assert!(run.join("raw/train_flows.csv").exists());
    assert!(run.join("models/mlp_fs_pruned.spif").exists());
    assert!(run.join("models/mlp_pruned.spif.meta.json").exists());

    let csv = ok(d, &["bench", "--config", "run.json"]);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "Model,Stage,Accuracy,Precision,Recall,F1,AvgInferenceTime_ms,ModelSize_KB");
    assert_eq!(lines.len(), 4);
    for (line, stage) in lines[1..].iter().zip(["original", "pruned", "fs_pruned"]) {
        assert!(line.starts_with(&format!("MLP,{stage},")), "{line}");
    }

    let md = ok(d, &["report", "--input", "runs/smoke/reports/report.csv", "--format", "markdown"]);
    assert!(md.starts_with("| Model |"), "{md}");

    // the feature-selected model takes full-width rows and projects them
    let preds = ok(d, &["infer", "--model-file", "runs/smoke/models/mlp_fs_pruned.spif", "--input", "runs/smoke/data/test.csv"]);
    let test_rows = std::fs::read_to_string(run.join("data/test.csv")).unwrap().lines().count() - 1;
    let pred_lines: Vec<&str> = preds.lines().collect();
    assert_eq!(pred_lines.len(), test_rows + 1);
    let probs: Vec<f64> = pred_lines[1].split(',').filter_map(|v| v.parse().ok()).collect();
    assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-4, "{}", pred_lines[1]);
}

#[test]
fn failures_print_one_error_line() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("noseed.json"), r#"{"data": {"synth": {"rows": 100}}}"#).unwrap();
    let out = sparsebench(d, &["train", "--config", "noseed.json"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.lines().any(|l| l.starts_with("error: kind=config") && l.contains("seed")), "{err}");

    let out = sparsebench(d, &["infer", "--model-file", "missing.spif", "--input", "x.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("kind=missing_file"));

    let out = sparsebench(d, &["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error: kind=usage"));

    assert!(sparsebench(d, &["--help"]).status.success());
}
