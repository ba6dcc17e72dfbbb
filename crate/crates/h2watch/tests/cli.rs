//! End-to-end exercise of the binary: simulate → train → detect, plus
//! exit-code behavior on bad input and configuration.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn h2watch(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_h2watch"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn h2watch")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

const TRAIN_SCENARIO: &str = "seed = 3\nqueue_capacity = 500\nwait_duration = 360.0\n\n\
                              [benign]\ncount = 150\ninterval = 0.1\n";

const EVAL_SCENARIO: &str = "seed = 4\nqueue_capacity = 500\nwait_duration = 360.0\n\n\
                             [benign]\ncount = 30\n\n\
                             [[attacks]]\nkind = \"zero-window\"\ncount = 3\n\n\
                             [[attacks]]\nkind = \"preface-only\"\ncount = 3\nstart = 0.4\n";

#[test]
fn simulate_train_detect_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    fs::write(root.join("train.toml"), TRAIN_SCENARIO).unwrap();
    fs::write(root.join("eval.toml"), EVAL_SCENARIO).unwrap();

    let sim = h2watch(
        &["simulate", "--scenario", "train.toml", "--out", "train"],
        root,
    );
    assert!(sim.status.success(), "{}", String::from_utf8_lossy(&sim.stderr));
    assert!(stdout(&sim).contains("150 connections"));

    let train = h2watch(
        &[
            "train",
            "--pcap",
            "train/capture.pcap",
            "--n",
            "5",
            "--out",
            "model",
        ],
        root,
    );
    assert!(train.status.success(), "{}", String::from_utf8_lossy(&train.stderr));
    assert!(root.join("model/lookahead.db").exists());
    assert!(root.join("model/delay.db").exists());
    let lookahead = fs::read_to_string(root.join("model/lookahead.db")).unwrap();
    assert!(lookahead.starts_with("#lookahead n=5"));

    let sim2 = h2watch(
        &["simulate", "--scenario", "eval.toml", "--out", "eval"],
        root,
    );
    assert!(sim2.status.success());

    let detect = h2watch(
        &[
            "detect",
            "--pcap",
            "eval/capture.pcap",
            "--lookahead",
            "model/lookahead.db",
            "--delay",
            "model/delay.db",
            "--labels",
            "eval/labels.csv",
            "--out",
            "report",
            "--trace",
        ],
        root,
    );
    assert!(detect.status.success(), "{}", String::from_utf8_lossy(&detect.stderr));
    let text = stdout(&detect);
    assert_eq!(text.matches("label=anomalous").count(), 6);
    assert_eq!(text.matches("label=normal").count(), 30);
    assert!(text.contains("recall=100.00"));
    assert!(text.contains("kind=zero-window detected=3/3"));

    let verdicts = fs::read_to_string(root.join("report/verdicts.txt")).unwrap();
    assert_eq!(verdicts.lines().count(), 36);
    let metrics = fs::read_to_string(root.join("report/metrics.csv")).unwrap();
    assert!(metrics.contains("tp,6"));
    assert!(metrics.contains("fn,0"));
    assert!(root.join("report/traces.csv").exists());
    assert!(root.join("report/latency_cdf.csv").exists());
}

#[test]
fn retraining_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    fs::write(root.join("train.toml"), TRAIN_SCENARIO).unwrap();
    let sim = h2watch(
        &["simulate", "--scenario", "train.toml", "--out", "cap"],
        root,
    );
    assert!(sim.status.success());
    for out in ["a", "b"] {
        let train = h2watch(
            &["train", "--pcap", "cap/capture.pcap", "--out", out],
            root,
        );
        assert!(train.status.success());
    }
    assert_eq!(
        fs::read(root.join("a/lookahead.db")).unwrap(),
        fs::read(root.join("b/lookahead.db")).unwrap()
    );
    assert_eq!(
        fs::read(root.join("a/delay.db")).unwrap(),
        fs::read(root.join("b/delay.db")).unwrap()
    );
}

#[test]
fn exit_codes_distinguish_input_and_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();

    // Missing pcap file → input error (2).
    let out = h2watch(&["train", "--pcap", "missing.pcap", "--out", "m"], root);
    assert_eq!(out.status.code(), Some(2));

    // n outside the supported range → config error (3).
    fs::write(root.join("t.toml"), TRAIN_SCENARIO).unwrap();
    let sim = h2watch(&["simulate", "--scenario", "t.toml", "--out", "cap"], root);
    assert!(sim.status.success());
    let out = h2watch(
        &["train", "--pcap", "cap/capture.pcap", "--n", "1", "--out", "m"],
        root,
    );
    assert_eq!(out.status.code(), Some(3));

    // Detect with a database trained at a different n → config error (3).
    let train = h2watch(
        &["train", "--pcap", "cap/capture.pcap", "--n", "3", "--out", "m"],
        root,
    );
    assert!(train.status.success());
    let out = h2watch(
        &[
            "detect",
            "--pcap",
            "cap/capture.pcap",
            "--lookahead",
            "m/lookahead.db",
            "--delay",
            "m/delay.db",
            "--n",
            "5",
        ],
        root,
    );
    assert_eq!(out.status.code(), Some(3));

    // Bad threshold → config error (3).
    let out = h2watch(
        &[
            "detect",
            "--pcap",
            "cap/capture.pcap",
            "--lookahead",
            "m/lookahead.db",
            "--delay",
            "m/delay.db",
            "--n",
            "3",
            "--threshold",
            "1.5",
        ],
        root,
    );
    assert_eq!(out.status.code(), Some(3));

    // Scenario with no traffic at all → config error (3).
    fs::write(root.join("empty.toml"), "queue_capacity = 1\nwait_duration = 1.0\n").unwrap();
    let out = h2watch(
        &["simulate", "--scenario", "empty.toml", "--out", "x"],
        root,
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn bench_extract_prints_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = h2watch(
        &["bench-extract", "--n", "3,5", "--len", "200", "--reps", "2"],
        dir.path(),
    );
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("n,length,mean_us"));
    assert_eq!(text.lines().count(), 3);
}
