//! Run configuration: TOML loading, validation, hashing and seed derivation.

use std::fs;
use std::path::{Path, PathBuf};

use chemvec::chemlex::SvmConfig;
use chemvec::cooc::CoocConfig;
use chemvec::glove::GloveConfig;
use chemvec::ingest::SourceKind;
use chemvec::sgns::{Mode, TrainConfig};
use chemvec::textprep::CleaningConfig;
use chemvec::QueryVectors;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult, FieldError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Root seed; every stochastic stage derives its own seed from it.
    pub seed: u64,
    /// Force one worker everywhere so repeated runs are byte-identical.
    pub deterministic: bool,
    /// Worker threads when not deterministic. Unset means all available cores.
    pub workers: Option<usize>,
    pub out_dir: PathBuf,
    pub inputs: InputPaths,
    pub prep: PrepSettings,
    pub chem: ChemSettings,
    pub cooc: CoocConfig,
    pub word2vec: TrainConfig,
    pub glove: GloveConfig,
    pub queries: QuerySettings,
    /// Directory that relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputPaths {
    pub patent_dirs: Vec<PathBuf>,
    pub patent_classes: Vec<String>,
    pub text_dirs: Vec<TextSource>,
    /// Chemical lexicon TSV. The built-in seed lexicon is used when unset.
    pub lexicon: Option<PathBuf>,
    /// Extra stop words added to the built-in list.
    pub stopwords: Option<PathBuf>,
    /// Application word list. The built-in list is used when unset.
    pub application_words: Option<PathBuf>,
    /// JSON array of `{"name": .., "tokens": [..]}` objects.
    pub groups: Option<PathBuf>,
    /// Labeled molecules (`name<TAB>smiles<TAB>label`) for the classifier.
    pub chem_training: Option<PathBuf>,
    /// `name<TAB>smiles` cache used to fill lexicon entries lacking SMILES.
    pub resolver_cache: Option<PathBuf>,
}

impl Default for InputPaths {
    fn default() -> Self {
        InputPaths {
            patent_dirs: Vec::new(),
            patent_classes: vec!["C06B".into(), "149".into()],
            text_dirs: Vec::new(),
            lexicon: None,
            stopwords: None,
            application_words: None,
            groups: None,
            chem_training: None,
            resolver_cache: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TextSource {
    pub dir: PathBuf,
    #[serde(default)]
    pub venue: Option<String>,
    #[serde(default = "default_text_kind")]
    pub kind: SourceKind,
}

fn default_text_kind() -> SourceKind {
    SourceKind::Proceedings
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrepSettings {
    /// Vocabulary cutoff shared by both models.
    pub min_count: u64,
    pub drop_numeric: bool,
    pub max_non_alpha_fraction: Option<f64>,
    pub strip_references: bool,
    /// Join multi-word chemical names into single tokens.
    pub merge_entities: bool,
    /// Regexes for abbreviations that must not end a sentence. Built-ins when unset.
    pub abbreviations: Option<Vec<String>>,
}

impl Default for PrepSettings {
    fn default() -> Self {
        PrepSettings {
            min_count: 5,
            drop_numeric: true,
            max_non_alpha_fraction: Some(chemvec::textprep::DEFAULT_MAX_NON_ALPHA_FRACTION),
            strip_references: true,
            merge_entities: true,
            abbreviations: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChemSettings {
    pub svm: SvmConfig,
    /// Replace lexicon labels with classifier output for entries that have SMILES.
    pub relabel: bool,
    /// Names never matched as chemical mentions. Built-ins when unset.
    pub stop_names: Option<Vec<String>>,
}

impl Default for ChemSettings {
    fn default() -> Self {
        ChemSettings {
            svm: SvmConfig::default(),
            relabel: true,
            stop_names: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuerySettings {
    /// Query words for the filtered similarity rankings.
    pub words: Vec<String>,
    pub k: usize,
    /// Application words listed per chemical.
    pub app_k: usize,
    /// Number of most-mentioned chemicals in the chemical table.
    pub top_chemicals: usize,
    pub pca_components: usize,
    pub hubness_k: usize,
    /// GloVe rows used for queries: `combined` (word + context) or `word`.
    pub glove_vectors: QueryVectors,
}

impl Default for QuerySettings {
    fn default() -> Self {
        QuerySettings {
            words: vec!["rdx".into(), "tnt".into(), "hmx".into()],
            k: 5,
            app_k: 2,
            top_chemicals: 10,
            pca_components: 2,
            hubness_k: 10,
            glove_vectors: QueryVectors::Combined,
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            deterministic: false,
            workers: None,
            out_dir: PathBuf::from("out"),
            inputs: InputPaths::default(),
            prep: PrepSettings::default(),
            chem: ChemSettings::default(),
            cooc: CoocConfig::default(),
            word2vec: TrainConfig::default(),
            glove: GloveConfig::default(),
            queries: QuerySettings::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> CliResult<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::ConfigSyntax {
            path: base_dir.to_owned(),
            message: e.to_string(),
        })?;
        cfg.base_dir = base_dir.to_owned();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let base = path.parent().map(Path::to_owned).unwrap_or_default();
        let base = if base.as_os_str().is_empty() { PathBuf::from(".") } else { base };
        let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| CliError::ConfigSyntax {
            path: path.to_owned(),
            message: e.to_string(),
        })?;
        cfg.base_dir = base;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_owned()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn out_path(&self, file: &str) -> PathBuf {
        self.resolve(&self.out_dir).join(file)
    }

    pub fn worker_count(&self) -> usize {
        if self.deterministic {
            return 1;
        }
        self.workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
            .max(1)
    }

    /// Skip-gram settings with the derived seed, worker count and shared cutoff applied.
    pub fn word2vec_effective(&self) -> TrainConfig {
        TrainConfig {
            seed: stage_seed(self.seed, "word2vec"),
            workers: self.worker_count(),
            min_count: self.prep.min_count,
            ..self.word2vec
        }
    }

    pub fn glove_effective(&self) -> GloveConfig {
        GloveConfig {
            seed: stage_seed(self.seed, "glove"),
            workers: self.worker_count(),
            ..self.glove
        }
    }

    pub fn svm_effective(&self) -> SvmConfig {
        SvmConfig {
            seed: stage_seed(self.seed, "chem"),
            ..self.chem.svm
        }
    }

    /// SHA-256 over the canonical JSON form, leaving out where outputs go.
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = value.as_object_mut() {
            map.remove("out_dir");
        }
        hex(&Sha256::digest(value.to_string().as_bytes()))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Seed for a named stage, derived from the root seed.
pub fn stage_seed(root: u64, stage: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(root.to_le_bytes());
    h.update(stage.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Checks every path and range constraint. An empty list means the config is usable.
pub fn validate_config(cfg: &RunConfig) -> Vec<FieldError> {
    let mut errors = Vec::new();
    let mut err = |field: &str, message: String| errors.push(FieldError::new(field, message));

    let inputs = &cfg.inputs;
    if inputs.patent_dirs.is_empty() && inputs.text_dirs.is_empty() {
        err("inputs", "no patent_dirs or text_dirs given".into());
    }
    for (i, dir) in inputs.patent_dirs.iter().enumerate() {
        if !cfg.resolve(dir).is_dir() {
            err(&format!("inputs.patent_dirs[{i}]"), format!("{} is not a directory", dir.display()));
        }
    }
    if !inputs.patent_dirs.is_empty() && inputs.patent_classes.iter().all(|c| c.trim().is_empty()) {
        err("inputs.patent_classes", "at least one classification code is required".into());
    }
    for (i, src) in inputs.text_dirs.iter().enumerate() {
        if !cfg.resolve(&src.dir).is_dir() {
            err(&format!("inputs.text_dirs[{i}].dir"), format!("{} is not a directory", src.dir.display()));
        }
    }
    let files = [
        ("inputs.lexicon", &inputs.lexicon),
        ("inputs.stopwords", &inputs.stopwords),
        ("inputs.application_words", &inputs.application_words),
        ("inputs.groups", &inputs.groups),
        ("inputs.chem_training", &inputs.chem_training),
        ("inputs.resolver_cache", &inputs.resolver_cache),
    ];
    for (field, path) in files {
        if let Some(p) = path {
            if !cfg.resolve(p).is_file() {
                err(field, format!("{} does not exist", p.display()));
            }
        }
    }

    if cfg.workers == Some(0) {
        err("workers", "must be at least 1".into());
    }
    if cfg.out_dir.as_os_str().is_empty() {
        err("out_dir", "must not be empty".into());
    }

    let prep = &cfg.prep;
    if prep.min_count == 0 {
        err("prep.min_count", "must be at least 1".into());
    }
    if let Some(f) = prep.max_non_alpha_fraction {
        if !(f > 0.0 && f <= 1.0) {
            err("prep.max_non_alpha_fraction", format!("{f} is outside (0, 1]"));
        }
    }
    for (i, pattern) in prep.abbreviations.iter().flatten().enumerate() {
        if let Err(e) = CleaningConfig::new(Vec::new(), std::slice::from_ref(pattern), true) {
            err(&format!("prep.abbreviations[{i}]"), e.to_string());
        }
    }

    let svm = &cfg.chem.svm;
    if svm.epochs == 0 {
        err("chem.svm.epochs", "must be at least 1".into());
    }
    if !(svm.learning_rate > 0.0 && svm.learning_rate.is_finite()) {
        err("chem.svm.learning_rate", "must be positive".into());
    }
    if !(svm.regularization >= 0.0 && svm.regularization.is_finite()) {
        err("chem.svm.regularization", "must be non-negative".into());
    }
    if let Some(f) = svm.holdout_fraction {
        if !(f > 0.0 && f < 1.0) {
            err("chem.svm.holdout_fraction", format!("{f} is outside (0, 1)"));
        }
    }
    if !svm.decision_threshold.is_finite() {
        err("chem.svm.decision_threshold", "must be finite".into());
    }

    if cfg.cooc.window == 0 {
        err("cooc.window", "must be at least 1".into());
    }

    let w2v = &cfg.word2vec;
    if w2v.dim == 0 {
        err("word2vec.dim", "must be at least 1".into());
    }
    if w2v.window == 0 {
        err("word2vec.window", "must be at least 1".into());
    }
    if w2v.epochs == 0 {
        err("word2vec.epochs", "must be at least 1".into());
    }
    if !(w2v.learning_rate > 0.0 && w2v.learning_rate.is_finite()) {
        err("word2vec.learning_rate", "must be positive".into());
    }
    if !(w2v.min_learning_rate >= 0.0 && w2v.min_learning_rate <= w2v.learning_rate) {
        err("word2vec.min_learning_rate", "must lie in [0, learning_rate]".into());
    }
    if w2v.mode == Mode::NegativeSampling && w2v.negatives == 0 {
        err("word2vec.negatives", "must be at least 1 for negative sampling".into());
    }
    if !(0.0..=1.0).contains(&w2v.subsample_t) {
        err("word2vec.subsample_t", "must lie in [0, 1]".into());
    }

    let glove = &cfg.glove;
    if glove.dim == 0 {
        err("glove.dim", "must be at least 1".into());
    }
    if glove.epochs == 0 {
        err("glove.epochs", "must be at least 1".into());
    }
    if !(glove.learning_rate > 0.0 && glove.learning_rate.is_finite()) {
        err("glove.learning_rate", "must be positive".into());
    }
    if !(glove.x_max > 0.0 && glove.x_max.is_finite()) {
        err("glove.x_max", "must be positive".into());
    }
    if !(glove.alpha > 0.0 && glove.alpha.is_finite()) {
        err("glove.alpha", "must be positive".into());
    }

    let q = &cfg.queries;
    for (field, value) in [
        ("queries.k", q.k),
        ("queries.app_k", q.app_k),
        ("queries.top_chemicals", q.top_chemicals),
        ("queries.pca_components", q.pca_components),
        ("queries.hubness_k", q.hubness_k),
    ] {
        if value == 0 {
            err(field, "must be at least 1".into());
        }
    }
    errors
}

/// Validation as a `Result`, for callers that stop on the first bad config.
pub fn ensure_valid(cfg: &RunConfig) -> CliResult<()> {
    let errors = validate_config(cfg);
    if errors.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(errors))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_toml_gives_defaults() {
        let cfg = RunConfig::from_toml("", Path::new(".")).unwrap();
        assert_eq!(cfg.word2vec.dim, 200);
        assert_eq!(cfg.word2vec.window, 8);
        assert_eq!(cfg.cooc.window, 8);
        assert_eq!(cfg.prep.min_count, 5);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("[word2vec]\ndimm = 3\n", Path::new(".")).is_err());
        assert!(RunConfig::from_toml("sed = 3\n", Path::new(".")).is_err());
    }

    #[test]
    fn zero_dimension_and_window_name_their_fields() {
        let mut cfg = RunConfig::default();
        cfg.word2vec.dim = 0;
        cfg.cooc.window = 0;
        let fields: Vec<String> = validate_config(&cfg).into_iter().map(|e| e.field).collect();
        assert!(fields.contains(&"word2vec.dim".to_string()));
        assert!(fields.contains(&"cooc.window".to_string()));
    }

    #[test]
    fn stage_seeds_differ_by_name_and_root() {
        assert_ne!(stage_seed(1, "word2vec"), stage_seed(1, "glove"));
        assert_ne!(stage_seed(1, "word2vec"), stage_seed(2, "word2vec"));
        assert_eq!(stage_seed(7, "glove"), stage_seed(7, "glove"));
    }

    #[test]
    fn deterministic_forces_one_worker() {
        let cfg = RunConfig {
            deterministic: true,
            workers: Some(8),
            ..RunConfig::default()
        };
        assert_eq!(cfg.word2vec_effective().workers, 1);
        assert_eq!(cfg.glove_effective().workers, 1);
    }
}
