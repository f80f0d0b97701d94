use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/config.toml")
}

fn chemvec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chemvec")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn help_and_validate_succeed() {
    assert_eq!(chemvec(&["--help"]).status.code(), Some(0));
    let config = fixture_config();
    let out = chemvec(&["--config", config.to_str().unwrap(), "validate"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(chemvec(&["--no-such-flag"]).status.code(), Some(1));
    assert_eq!(chemvec(&["train", "fasttext"]).status.code(), Some(1));
}

#[test]
fn invalid_config_reports_fields() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[word2vec]\ndim = 0\n[inputs]\nlexicon = \"missing.tsv\"\n").unwrap();
    let out = chemvec(&["--config", path.to_str().unwrap(), "validate"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("word2vec.dim") && err.contains("inputs.lexicon"), "{err}");

    std::fs::write(&path, "[word2vec]\ndimension = 3\n").unwrap();
    let out = chemvec(&["--config", path.to_str().unwrap(), "validate"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_stage_input_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture_config();
    let out = chemvec(&[
        "--config",
        config.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
        "cooc",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn run_then_query() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture_config();
    let out_dir = dir.path().to_str().unwrap();
    let base = ["--config", config.to_str().unwrap(), "--out-dir", out_dir, "--deterministic"];
    let run = chemvec(&[&base[..], &["run"]].concat());
    assert_eq!(run.status.code(), Some(0), "{}", stderr(&run));
    assert!(dir.path().join("manifest.json").exists());

    let nearest = chemvec(&[&base[..], &["query", "nearest", "rdx", "--k", "3"]].concat());
    assert_eq!(nearest.status.code(), Some(0), "{}", stderr(&nearest));
    assert_eq!(stdout(&nearest).lines().filter(|l| !l.trim().is_empty()).count(), 4);

    let unknown = chemvec(&[&base[..], &["query", "nearest", "zzzz"]].concat());
    assert_eq!(unknown.status.code(), Some(2));

    let classify = chemvec(&[
        "chem",
        "classify",
        "--model",
        dir.path().join("classifier.json").to_str().unwrap(),
        "CCO",
        "C(C(CO[N+](=O)[O-])O[N+](=O)[O-])O[N+](=O)[O-]",
    ]);
    assert_eq!(classify.status.code(), Some(0), "{}", stderr(&classify));
    let labels: Vec<String> = stdout(&classify).lines().map(|l| l.rsplit('\t').next().unwrap().to_owned()).collect();
    assert_eq!(labels, ["not-energetic", "energetic"]);
}
