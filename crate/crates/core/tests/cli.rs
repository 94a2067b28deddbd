use std::fmt::Write as _;
use std::path::Path;
use std::process::{Command, Output};

use gaitsvm::GaitPhase;

const HEADER: &str = "time,shank_acc_x,shank_acc_y,shank_acc_z,shank_gyro_x,knee_angle";

fn gaitsvm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gaitsvm"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    let out = gaitsvm(dir, args);
    out.status.code().expect("exit code")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = gaitsvm(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

/// Labeled file with `per_phase` rows for each listed phase.
fn labeled_file(path: &Path, phases: &[GaitPhase], per_phase: usize) {
    let mut text = format!("{HEADER},phase\n");
    let mut t = 0.0;
    for (c, p) in phases.iter().enumerate() {
        for j in 0..per_phase {
            let v = 5.0 * p.index() as f64 + 0.1 * j as f64;
            writeln!(text, "{t},{v},{},{},{},{},{p}", -v, 2.0 * v, c as f64, 10.0 + v).unwrap();
            t += 0.005;
        }
    }
    std::fs::write(path, text).unwrap();
}

fn synth_and_label(dir: &Path) {
    ok(dir, &["synth", "--seed", "3", "--cycles", "5", "-o", "data"]);
    ok(dir, &["label", "--input", "data/synth.csv", "--output", "labeled.csv"]);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(d, &["synth", "--seed", "1", "--cycles", "0", "-o", "x"]), 2);
    assert_eq!(code(d, &["synth", "--cycles", "3", "-o", "x"]), 2, "seed is required");
    assert_eq!(code(d, &["evaluate", "--input", "a.csv", "-o", "x"]), 2, "seed is required");
    labeled_file(&d.join("l.csv"), &GaitPhase::ALL, 3);
    assert_eq!(code(d, &["train", "--input", "l.csv", "--output", "m.txt", "--c", "0"]), 2);
    assert_eq!(code(d, &["train", "--input", "l.csv", "--output", "m.txt", "--gamma", "-1"]), 2);
    assert_eq!(
        code(d, &["label", "--input", "a.csv", "--output", "o.csv", "--phase-dist", "14,13,10,20,20,10,12"]),
        2
    );
    assert_eq!(code(d, &["frobnicate"]), 2);
    assert_eq!(code(d, &["--help"]), 0);
}

#[test]
fn labeling_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut text = format!("{HEADER}\n");
    for k in 0..400 {
        writeln!(text, "{},0,9.81,0,0,12.5", k as f64 / 200.0).unwrap();
    }
    std::fs::write(d.join("flat.csv"), text).unwrap();
    assert_eq!(code(d, &["label", "--input", "flat.csv", "--output", "o.csv"]), 3);
}

#[test]
fn training_errors_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    labeled_file(&d.join("six.csv"), &GaitPhase::ALL[..6], 4);
    let out = gaitsvm(d, &["train", "--input", "six.csv", "--output", "m.txt"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("InitialSwing"));
    assert!(!d.join("m.txt").exists());
}

#[test]
fn evaluation_errors_exit_6() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    labeled_file(&d.join("small.csv"), &GaitPhase::ALL, 4);
    assert_eq!(code(d, &["evaluate", "--input", "small.csv", "--k", "5", "--seed", "1", "-o", "e"]), 6);
    assert_eq!(code(d, &["evaluate", "--input", "small.csv", "--k", "4", "--seed", "1", "-o", "e"]), 0);
    assert_eq!(
        code(d, &["evaluate", "--input", "small.csv", "--k", "2", "--seed", "1", "--split-by", "subject", "-o", "s"]),
        6
    );
}

#[test]
fn model_errors_exit_7() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth_and_label(d);
    ok(d, &["train", "--input", "labeled.csv", "--output", "model.txt"]);
    let text = std::fs::read_to_string(d.join("model.txt")).unwrap();
    std::fs::write(d.join("cut.txt"), &text[..text.len() / 3]).unwrap();
    std::fs::write(d.join("v999.txt"), text.replacen("GAITSVM v1", "GAITSVM v999", 1)).unwrap();
    for bad in ["cut.txt", "v999.txt"] {
        assert_eq!(
            code(d, &["predict", "--model", bad, "--input", "data/synth.csv", "--output", "p.csv"]),
            7,
            "{bad}"
        );
    }
}

#[test]
fn predict_handles_empty_input() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth_and_label(d);
    ok(d, &["train", "--input", "labeled.csv", "--output", "model.txt"]);
    std::fs::write(d.join("empty.csv"), format!("{HEADER}\n")).unwrap();
    ok(d, &["predict", "--model", "model.txt", "--input", "empty.csv", "--output", "p.csv"]);
    let text = std::fs::read_to_string(d.join("p.csv")).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("time,phase,score_MidSwing"));

    ok(d, &["predict", "--model", "model.txt", "--input", "data/synth.csv", "--output", "full.csv"]);
    let full = std::fs::read_to_string(d.join("full.csv")).unwrap();
    let truth = std::fs::read_to_string(d.join("data/synth_truth.csv")).unwrap();
    assert_eq!(full.lines().count(), truth.lines().count());
    let agree = full
        .lines()
        .zip(truth.lines())
        .skip(1)
        .filter(|(p, t)| p.split(',').nth(1) == t.split(',').nth(1))
        .count();
    assert!(agree as f64 >= 0.95 * (truth.lines().count() - 1) as f64);
}

#[test]
fn evaluate_and_roc_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth_and_label(d);
    ok(d, &["evaluate", "--input", "labeled.csv", "--k", "3", "--seed", "4", "--roc", "MidStance", "-o", "eval"]);
    for f in ["confusion.csv", "rates.csv", "summary.txt", "scores.csv", "roc_MidStance.csv", "roc_MidStance.svg", "evaluate.manifest"] {
        assert!(d.join("eval").join(f).exists(), "{f}");
    }
    let summary = std::fs::read_to_string(d.join("eval/summary.txt")).unwrap();
    assert!(summary.contains("k=3") && summary.contains("all_converged=true"));
    let roc = std::fs::read_to_string(d.join("eval/roc_MidStance.csv")).unwrap();
    let lines: Vec<&str> = roc.lines().collect();
    assert_eq!(lines[0], "fpr,tpr,threshold");
    assert!(lines[1].starts_with("0,0,"));
    assert!(lines.last().unwrap().starts_with("1,1,"));

    ok(d, &["roc", "--scores", "eval/scores.csv", "--phase", "MidStance", "-o", "again"]);
    assert_eq!(
        std::fs::read(d.join("again/roc_MidStance.csv")).unwrap(),
        std::fs::read(d.join("eval/roc_MidStance.csv")).unwrap()
    );
}

#[test]
fn manifest_replays_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth_and_label(d);
    ok(d, &["evaluate", "--input", "labeled.csv", "--k", "3", "--seed", "9", "--c", "2", "-o", "first"]);
    ok(d, &["evaluate", "--config", "first/evaluate.manifest", "-o", "second"]);
    for f in ["confusion.csv", "rates.csv", "summary.txt", "scores.csv"] {
        assert_eq!(
            std::fs::read(d.join("first").join(f)).unwrap(),
            std::fs::read(d.join("second").join(f)).unwrap(),
            "{f}"
        );
    }
    let m1 = std::fs::read_to_string(d.join("first/evaluate.manifest")).unwrap();
    let m2 = std::fs::read_to_string(d.join("second/evaluate.manifest")).unwrap();
    let strip = |m: &str| -> Vec<String> {
        m.lines().map(|l| l.replace("first/", "").replace("second/", "")).filter(|l| !l.contains("out-dir")).collect()
    };
    assert_eq!(strip(&m1), strip(&m2));
    assert!(m1.contains("param.c=2") && m1.contains("seed=9"));

    ok(d, &["synth", "--config", "data/synth.manifest", "-o", "replayed"]);
    assert_eq!(
        std::fs::read(d.join("data/synth.csv")).unwrap(),
        std::fs::read(d.join("replayed/synth.csv")).unwrap()
    );
}
