use std::fs;
use std::path::{Path, PathBuf};

use chemvec::{EmbeddingModel, QueryVectors};
use chemvec_cli::pipeline::files;
use chemvec_cli::{run_pipeline, run_stage, CliError, RunConfig, RunManifest, Stage};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn copy_tree(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for entry in fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let target = to.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            if entry.file_name() != "out" {
                copy_tree(&entry.path(), &target);
            }
        } else {
            fs::copy(entry.path(), target).unwrap();
        }
    }
}

/// A private copy of the fixture inputs, so tests may break some of them.
fn workspace() -> (tempfile::TempDir, RunConfig) {
    let dir = tempfile::tempdir().unwrap();
    copy_tree(&fixtures(), dir.path());
    let mut cfg = RunConfig::load(&dir.path().join("config.toml")).unwrap();
    cfg.deterministic = true;
    (dir, cfg)
}

fn outputs(manifest: &RunManifest) -> Vec<String> {
    manifest.stages.iter().flat_map(|s| s.report.outputs.clone()).collect()
}

#[test]
fn separate_stages_reproduce_the_full_run() {
    let (dir, cfg) = workspace();
    let full = run_pipeline(&cfg).unwrap();
    assert_eq!(full.status, "complete");
    assert!(full.corpus_hash.is_some());

    let mut staged = cfg.clone();
    staged.out_dir = dir.path().join("staged");
    for stage in Stage::ALL {
        run_stage(&staged, stage).unwrap();
    }
    for name in outputs(&full) {
        let a = fs::read(cfg.out_path(&name)).unwrap();
        let b = fs::read(staged.out_path(&name)).unwrap();
        assert!(a == b, "{name} differs");
    }
}

#[test]
fn later_stage_without_inputs_names_the_missing_file() {
    let (dir, mut cfg) = workspace();
    cfg.out_dir = dir.path().join("empty");
    let err = run_stage(&cfg, Stage::Cooc).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains(files::CORPUS) || err.to_string().contains(files::VOCAB), "{err}");
}

#[test]
fn invalid_config_fails_before_any_work() {
    let (dir, mut cfg) = workspace();
    cfg.inputs.lexicon = Some(dir.path().join("no_such_lexicon.tsv"));
    cfg.word2vec.dim = 0;
    let err = run_pipeline(&cfg).unwrap_err();
    let CliError::Validation(fields) = &err else {
        panic!("expected a validation error, got {err}");
    };
    let names: Vec<&str> = fields.iter().map(|f| f.field.as_str()).collect();
    assert!(names.contains(&"inputs.lexicon"), "{names:?}");
    assert!(names.contains(&"word2vec.dim"), "{names:?}");
    assert_eq!(err.exit_code(), 1);
    assert!(!cfg.out_path(files::STORE).exists());
    assert!(!cfg.out_path(files::INCOMPLETE).exists());
}

#[test]
fn runtime_failure_leaves_a_marker_and_partial_manifest() {
    let (dir, cfg) = workspace();
    fs::write(dir.path().join("lexicon.tsv"), "name\tsynonyms\tsmiles\tlabel\nRDX\t\t\tmaybe\n").unwrap();
    let err = run_pipeline(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(cfg.out_path(files::INCOMPLETE).exists());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(cfg.out_path(files::MANIFEST)).unwrap()).unwrap();
    assert_eq!(manifest["status"], "incomplete");
    assert!(manifest["failed_stage"].is_string());
    assert!(cfg.out_path(files::STORE).exists());
}

#[test]
fn config_hash_tracks_meaningful_fields() {
    let (_dir, cfg) = workspace();
    let base = cfg.hash();
    let mut moved = cfg.clone();
    moved.out_dir = PathBuf::from("/somewhere/else");
    assert_eq!(moved.hash(), base);
    let mut reseeded = cfg.clone();
    reseeded.seed += 1;
    assert_ne!(reseeded.hash(), base);
    let mut wider = cfg.clone();
    wider.cooc.window += 1;
    assert_ne!(wider.hash(), base);
    let round_trip = RunConfig::from_toml(&cfg.to_toml(), &cfg.base_dir).unwrap();
    assert_eq!(round_trip.hash(), base);
}

#[test]
fn glove_query_rows_follow_the_config() {
    let (dir, cfg) = workspace();
    run_pipeline(&cfg).unwrap();
    let mut word_only = cfg.clone();
    word_only.out_dir = dir.path().join("word_only");
    word_only.queries.glove_vectors = QueryVectors::Word;
    run_pipeline(&word_only).unwrap();
    let combined = EmbeddingModel::load(&cfg.out_path(files::GLOVE)).unwrap();
    let word = EmbeddingModel::load(&word_only.out_path(files::GLOVE)).unwrap();
    assert_eq!(combined.word, word.word);
    assert_eq!(combined.query, QueryVectors::Combined);
    assert_eq!(word.query, QueryVectors::Word);
    assert_ne!(combined.query_vectors(), word.query_vectors());
}

fn mention_count(cfg: &RunConfig, name: &str) -> u64 {
    let mentions = fs::read_to_string(cfg.out_path(files::MENTIONS)).unwrap();
    mentions
        .lines()
        .skip(1)
        .find(|l| l.split('\t').next() == Some(name))
        .map_or(0, |l| l.split('\t').nth(1).unwrap().parse().unwrap())
}

#[test]
fn stop_names_are_not_counted_as_mentions() {
    let (dir, cfg) = workspace();
    run_pipeline(&cfg).unwrap();
    let bare = fs::read_to_string(cfg.out_path(files::CORPUS))
        .unwrap()
        .split_whitespace()
        .filter(|t| *t == "tnt")
        .count() as u64;
    assert!(bare > 0);

    let mut stopped = cfg.clone();
    stopped.out_dir = dir.path().join("stopped");
    stopped.chem.stop_names = Some(vec!["tnt".into()]);
    run_pipeline(&stopped).unwrap();
    assert_eq!(mention_count(&stopped, "TNT"), mention_count(&cfg, "TNT") - bare);
    assert!(mention_count(&stopped, "RDX") > 0);
}

#[test]
fn report_lists_fixture_chemicals() {
    let (_dir, cfg) = workspace();
    run_pipeline(&cfg).unwrap();
    let table = fs::read_to_string(cfg.out_path(files::CHEMICALS)).unwrap();
    let header: Vec<&str> = table.lines().next().unwrap().split('\t').collect();
    assert_eq!(header[..4], ["rank", "chemical", "token", "n"]);
    assert!(table.lines().skip(1).any(|l| l.split('\t').nth(2) == Some("tnt")), "{table}");
    let hubness: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(cfg.out_path(files::HUBNESS)).unwrap()).unwrap();
    assert!(hubness.is_object());
}
