use std::path::Path;
use std::process::{Command, Output};

fn gyrocompass(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gyrocompass")).current_dir(cwd).args(args).output().unwrap()
}

fn error_line(out: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(stderr.lines().last().unwrap()).unwrap()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(gyrocompass(d, &["--help"]).status.code(), Some(0));
    assert_eq!(gyrocompass(d, &["--version"]).status.code(), Some(0));

    let out = gyrocompass(d, &["simulate"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_line(&out)["error"], "usage");

    let out = gyrocompass(d, &["allan", "--recording", "missing.csv", "--out", "a"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_line(&out)["error"], "io");

    std::fs::write(d.join("bad.csv"), "not,a,recording\n").unwrap();
    let out = gyrocompass(d, &["allan", "--recording", "bad.csv", "--out", "a"]);
    assert_eq!(out.status.code(), Some(4));

    let out = gyrocompass(d, &["simulate", "--out", "r", "--count", "1", "--lat", "95"]);
    assert_eq!(out.status.code(), Some(5));
    assert_eq!(error_line(&out)["error"], "compute");
}

#[test]
fn small_pipeline_produces_every_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let steps: [&[&str]; 5] = [
        &["simulate", "--out", "recs", "--count", "10", "--preset", "drifting", "--rate", "10", "--duration", "40"],
        &["dataset", "--recordings", "recs", "--out", "ds", "--window-max", "40", "--window-points", "4"],
        &["train", "--manifest", "ds/manifest.json", "--out", "model", "--hidden", "4", "--epochs", "2", "--batch-size", "16", "--quiet"],
        &["evaluate", "--checkpoint", "model/checkpoint.json", "--manifest", "ds/manifest.json", "--out", "ev", "--windows", "10,20,40"],
        &["compare", "--checkpoint", "model/checkpoint.json", "--manifest", "ds/manifest.json", "--out", "cmp", "--grid-points", "6"],
    ];
    for args in steps {
        let out = gyrocompass(d, args);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["ev/comparison.csv", "ev/boxplot.csv", "ev/errors.csv", "cmp/time_to_accuracy.csv", "cmp/trace.csv", "cmp/summary.json", "model/train_report.csv"] {
        assert!(d.join(f).is_file(), "{f}");
    }
    let out = gyrocompass(d, &["allan", "--recording", "recs/rec_0000.csv", "--out", "allan"]);
    assert!(out.status.success());
    let params: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("allan/noise_params.json")).unwrap()).unwrap();
    assert_eq!(params["axes"].as_array().unwrap().len(), 3);
}
