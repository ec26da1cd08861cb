use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stressfusion"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Complete, time-ordered synthetic data with `rows` rows under `dir/data`.
fn synth(dir: &Path, rows: usize, seed: u64) -> PathBuf {
    let data = dir.join("data");
    ok(&[
        "synth",
        "--preset",
        "drift",
        "--out-dir",
        s(&data),
        "--seed",
        &seed.to_string(),
        "--rows",
        &rows.to_string(),
    ]);
    data.join("manifest.json")
}

fn train(manifest: &Path, out: &Path, extra: &[&str]) -> String {
    let mut args = vec![
        "train",
        "--manifest",
        s(manifest),
        "--out-dir",
        s(out),
        "--epochs",
        "15",
        "--seed",
        "3",
    ];
    args.extend_from_slice(extra);
    ok(&args)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn files_under(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p);
            }
        }
    }
    out.sort();
    out
}

#[test]
fn train_writes_a_complete_bundle() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = synth(tmp.path(), 300, 1);
    let out = tmp.path().join("run");
    let stdout = train(&manifest, &out, &["--with-tlx"]);
    assert!(stdout.contains("fusion accuracy"));
    let bundle = out.join("bundle");
    for name in [
        "manifest.json",
        "normalization.json",
        "fusion_head.json",
        "tlx_head.json",
        "encoder_posture.json",
        "encoder_facial.json",
        "encoder_keystroke.json",
    ] {
        assert!(bundle.join(name).is_file(), "{name}");
    }
    assert!(out.join("train_report.json").is_file());
    assert!(out.join("history.json").is_file());
}

#[test]
fn outputs_stay_under_out_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = synth(tmp.path(), 200, 2);
    let data_files = files_under(&tmp.path().join("data"));
    let out = tmp.path().join("run");
    train(&manifest, &out, &[]);
    let bundle = out.join("bundle");
    let t = tmp.path().join("timeline");
    ok(&[
        "timeline",
        "--manifest",
        s(&manifest),
        "--bundle",
        s(&bundle),
        "--out-dir",
        s(&t),
    ]);
    let p = tmp.path().join("predict");
    ok(&[
        "predict",
        "--manifest",
        s(&manifest),
        "--bundle",
        s(&bundle),
        "--out-dir",
        s(&p),
    ]);
    assert_eq!(files_under(&tmp.path().join("data")), data_files);
    let mut top: Vec<_> = fs::read_dir(tmp.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    top.sort();
    assert_eq!(top, ["data", "predict", "run", "timeline"]);
    assert!(p.join("predictions.csv").is_file());
}

#[test]
fn zero_epochs_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = synth(tmp.path(), 100, 3);
    let out = run(&[
        "train",
        "--manifest",
        s(&manifest),
        "--out-dir",
        s(&tmp.path().join("run")),
        "--epochs",
        "0",
    ]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("epochs"), "{stderr}");
    assert!(!tmp.path().join("run").join("bundle").exists());
}

#[test]
fn same_seed_gives_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = synth(tmp.path(), 250, 4);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    train(&manifest, &a, &["--with-tlx"]);
    train(&manifest, &b, &["--with-tlx"]);
    let fa = files_under(&a);
    let fb = files_under(&b);
    assert_eq!(fa.len(), fb.len());
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(x.strip_prefix(&a).unwrap(), y.strip_prefix(&b).unwrap());
        assert_eq!(
            fs::read(x).unwrap(),
            fs::read(y).unwrap(),
            "{}",
            x.display()
        );
    }
}

#[test]
fn evaluate_reproduces_training_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = synth(tmp.path(), 300, 5);
    let early = tmp.path().join("early");
    let late = tmp.path().join("late");
    train(&manifest, &early, &["--with-tlx"]);
    train(&manifest, &late, &["--mode", "late"]);
    let eval = tmp.path().join("eval");
    ok(&[
        "evaluate",
        "--manifest",
        s(&manifest),
        "--bundle",
        s(&early.join("bundle")),
        "--bundle",
        s(&late.join("bundle")),
        "--out-dir",
        s(&eval),
    ]);
    for (dir, label) in [(&early, "early"), (&late, "late")] {
        let trained = json(&dir.join("train_report.json"))["test"].clone();
        let evaluated = json(&eval.join(label).join("evaluation.json"));
        for key in ["accuracy", "precision", "recall", "f1"] {
            let a = trained["report"][key].as_f64().unwrap();
            let b = evaluated["report"][key].as_f64().unwrap();
            assert!((a - b).abs() < 1e-9, "{label} {key}: {a} vs {b}");
        }
        assert!(eval.join(label).join("roc.csv").is_file());
    }
    assert!(eval.join("early").join("residuals.csv").is_file());
    let table = fs::read_to_string(eval.join("comparison.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 3, "{table}");
    assert!(
        lines[1].starts_with("early,") && lines[2].starts_with("late,"),
        "{table}"
    );
}

#[test]
fn missing_modality_file_names_stage_and_modality() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = synth(tmp.path(), 100, 6);
    fs::remove_file(tmp.path().join("data").join("facial.csv")).unwrap();
    let out = run(&[
        "train",
        "--manifest",
        s(&manifest),
        "--out-dir",
        s(&tmp.path().join("run")),
    ]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("ingest stage failed"), "{stderr}");
    assert!(stderr.contains("facial"), "{stderr}");
}

#[test]
fn missing_manifest_fails_before_work() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "train",
        "--manifest",
        s(&tmp.path().join("nope.json")),
        "--out-dir",
        s(tmp.path()),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("config stage failed"));
}

#[test]
fn long_min_run_suppresses_all_alerts() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = synth(tmp.path(), 300, 7);
    let out = tmp.path().join("run");
    train(&manifest, &out, &[]);
    let bundle = out.join("bundle");
    let t = tmp.path().join("t");
    ok(&[
        "timeline",
        "--manifest",
        s(&manifest),
        "--bundle",
        s(&bundle),
        "--out-dir",
        s(&t),
        "--min-run",
        "100000",
    ]);
    assert_eq!(json(&t.join("alerts.json")), Value::Array(vec![]));
    let svg = fs::read_to_string(t.join("timeline.svg")).unwrap();
    assert!(!svg.contains("class=\"alert\""));
    let table = fs::read_to_string(t.join("timeline.csv")).unwrap();
    assert_eq!(table.lines().count(), 301);
}

#[test]
fn crossval_reports_each_fold_and_their_mean() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = synth(tmp.path(), 100, 8);
    let a = tmp.path().join("a");
    let args = |out: &Path| {
        vec![
            "crossval".to_string(),
            "--manifest".into(),
            s(&manifest).into(),
            "--out-dir".into(),
            s(out).into(),
            "--k".into(),
            "5".into(),
            "--epochs".into(),
            "5".into(),
        ]
    };
    let out = bin().args(args(&a)).output().unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = json(&a.join("crossval.json"));
    let folds = report["folds"].as_array().unwrap();
    assert_eq!(folds.len(), 5);
    let accs: Vec<f64> = folds
        .iter()
        .map(|f| f["metrics"]["accuracy"].as_f64().unwrap())
        .collect();
    let mean = accs.iter().sum::<f64>() / 5.0;
    assert!((report["aggregate"]["accuracy"]["mean"].as_f64().unwrap() - mean).abs() < 1e-12);
    let sizes: usize = folds
        .iter()
        .map(|f| f["validation_rows"].as_u64().unwrap() as usize)
        .sum();
    assert_eq!(sizes, 100);

    let b = tmp.path().join("b");
    assert!(bin().args(args(&b)).status().unwrap().success());
    assert_eq!(
        report["membership"],
        json(&b.join("crossval.json"))["membership"]
    );
    assert!(a.join("crossval.csv").is_file());
}

#[test]
fn unknown_preset_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["synth", "--preset", "nope", "--out-dir", s(tmp.path())]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown synth preset"));
}
