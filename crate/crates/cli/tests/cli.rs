use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const SMALL: &str = r#"{"n_users": 200, "mean_follows": 8.0, "roots_per_topic": 12}"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rumorflow"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Generates a small synthetic corpus into `dir/corpus`.
fn corpus(dir: &Path, seed: &str) -> PathBuf {
    let cfg = dir.join("small.json");
    fs::write(&cfg, SMALL).unwrap();
    let out = dir.join("corpus");
    let o = run(&[
        "synth",
        "--seed",
        seed,
        "--config",
        p(&cfg),
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn tiny_fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/tiny")
}

#[test]
fn query_from_keywords() {
    let o = run(&["query", "a", "b", "c"]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        String::from_utf8(o.stdout).unwrap().trim_end(),
        "((a AND b AND c) OR (a AND b) OR (a AND c) OR (b AND c))"
    );
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&run(&["bogus"])), 1);
    assert_eq!(
        code(&run(&[
            "train",
            "--top-k",
            "0",
            "--corpus",
            p(&tiny_fixture())
        ])),
        1
    );
    assert_eq!(code(&run(&["stats", "--corpus", "/nonexistent/corpus"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn missing_model_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    let o = run(&[
        "eval",
        "--corpus",
        p(&tiny_fixture()),
        "--model",
        p(&missing),
    ]);
    assert_eq!(code(&o), 1);
    assert!(!o.stderr.is_empty());
}

#[test]
fn featurize_header_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("features.csv");
    let o = run(&[
        "featurize",
        "--corpus",
        p(&tiny_fixture()),
        "--out",
        p(&out),
    ]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.len(), 4 + 57 + 1);
    assert_eq!(
        &header[..4],
        ["tweet_id", "spreader_id", "receiver_id", "topic_status"]
    );
    assert_eq!(header[61], "label");
    assert_eq!(lines.count(), 6);
    assert!(dir.path().join("features.csv.manifest.json").exists());
}

#[test]
fn manifest_records_inputs_without_timestamps() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("stats.json");
    assert_eq!(
        code(&run(&[
            "stats",
            "--corpus",
            p(&tiny_fixture()),
            "--out",
            p(&out)
        ])),
        0
    );
    let text = fs::read_to_string(dir.path().join("stats.json.manifest.json")).unwrap();
    let m: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(m["command"], "stats");
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
    assert!(m["inputs"]["corpus/tweets.jsonl"].as_str().unwrap().len() == 64);
    assert!(m["outputs"]["stats.json"].is_string());
    for key in ["time", "timestamp", "date", "created"] {
        assert!(!text.contains(key), "manifest mentions {key}");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let c1 = corpus(&dir.path().join("one").tap_mkdir(), "3");
    let c2 = corpus(&dir.path().join("two").tap_mkdir(), "3");
    for name in [
        "users.jsonl",
        "tweets.jsonl",
        "reactions.jsonl",
        "manifest.json",
    ] {
        assert_eq!(
            fs::read(c1.join(name)).unwrap(),
            fs::read(c2.join(name)).unwrap(),
            "{name}"
        );
    }
    let mut outputs = Vec::new();
    for run_dir in ["a", "b"] {
        let out = dir.path().join(run_dir);
        let o = run(&[
            "train",
            "--corpus",
            p(&c1),
            "--out",
            p(&out),
            "--trees",
            "20",
            "--folds",
            "3",
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(out);
    }
    for name in [
        "diffusion_false.json",
        "diffusion_true.json",
        "report.json",
        "manifest.json",
    ] {
        assert_eq!(
            fs::read(outputs[0].join(name)).unwrap(),
            fs::read(outputs[1].join(name)).unwrap(),
            "{name}"
        );
    }
    let model = outputs[0].join("diffusion_false.json");
    let o = run(&["eval", "--corpus", p(&c1), "--model", p(&model)]);
    assert_eq!(code(&o), 0);
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(report.to_string().contains("\"f\""));
}

#[test]
fn ablation_and_credibility_run() {
    let dir = tempfile::tempdir().unwrap();
    let c = corpus(dir.path(), "5");
    let common = ["--corpus", p(&c), "--trees", "20"];
    let o = run(&[&["ablate"], &common[..]].concat());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(r["delta_f_edge"].is_number());
    let o = run(&[&["credibility", "--without-diffusion"], &common[..]].concat());
    assert_eq!(code(&o), 0);
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["with_diffusion"], false);
}

trait Mkdir {
    fn tap_mkdir(self) -> Self;
}

impl Mkdir for PathBuf {
    fn tap_mkdir(self) -> Self {
        fs::create_dir_all(&self).unwrap();
        self
    }
}
