//! Pipeline stages. Each stage reads its inputs from the output directory, so
//! stages can run one at a time or all together with the same result.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use chemvec::chemlex::classifier::{featurize_dataset, load_labeled_chemicals};
use chemvec::chemlex::{
    classify_energetic, featurize_sum_over_bonds, mention_stats, parse_smiles, train_linear_classifier, ChemLexicon,
    Gazetteer, LinearModel, Resolver,
};
use chemvec::cooc::{build_cooccurrence, CoocMatrix};
use chemvec::embedspace::{
    application_words, default_application_words, group_table, hubness, nearest, parse_word_list, pca_project,
    EmbeddingSpace, FilterLevel,
};
use chemvec::glove::train_glove;
use chemvec::ingest::{ingest_patent_dir, load_plain_text, sorted_files, DocumentStore};
use chemvec::sgns::train_skipgram;
use chemvec::textprep::{
    build_vocabulary, prepare_documents, read_token_corpus, write_token_corpus, CleaningConfig,
    DEFAULT_ABBREVIATION_PATTERNS, DEFAULT_STOPWORDS,
};
use chemvec::{Algorithm, EmbeddingModel, TokenizedCorpus, Vocabulary};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ensure_valid, hex, RunConfig, TextSource};
use crate::error::{CliError, CliResult};

pub mod files {
    pub const STORE: &str = "store.jsonl";
    pub const INGEST_ERRORS: &str = "ingest_errors.tsv";
    pub const CORPUS: &str = "corpus.txt";
    pub const VOCAB: &str = "vocab.tsv";
    pub const LEXICON: &str = "lexicon.tsv";
    pub const CLASSIFIER: &str = "classifier.json";
    pub const CHEM_SCORES: &str = "chem_scores.tsv";
    pub const MENTIONS: &str = "mentions.tsv";
    pub const COOC: &str = "cooc.bin";
    pub const WORD2VEC: &str = "word2vec.bin";
    pub const WORD2VEC_TEXT: &str = "word2vec.txt";
    pub const WORD2VEC_LOSS: &str = "word2vec_loss.tsv";
    pub const GLOVE: &str = "glove.bin";
    pub const GLOVE_TEXT: &str = "glove.txt";
    pub const GLOVE_LOSS: &str = "glove_loss.tsv";
    pub const CHEMICALS: &str = "chemicals.tsv";
    pub const RANKINGS: &str = "rankings.tsv";
    pub const RANKINGS_JSON: &str = "rankings.json";
    pub const HUBNESS: &str = "hubness.json";
    pub const MANIFEST: &str = "manifest.json";
    pub const INCOMPLETE: &str = "INCOMPLETE";
    pub const RESOLVED_CONFIG: &str = "config.resolved.toml";

    pub fn groups(alg: &str) -> String {
        format!("groups_{alg}.tsv")
    }

    pub fn pca(alg: &str) -> String {
        format!("pca_{alg}.csv")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ingest,
    Prep,
    Chem,
    Cooc,
    Word2vec,
    Glove,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Ingest,
        Stage::Prep,
        Stage::Chem,
        Stage::Cooc,
        Stage::Word2vec,
        Stage::Glove,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Prep => "prep",
            Stage::Chem => "chem",
            Stage::Cooc => "cooc",
            Stage::Word2vec => "word2vec",
            Stage::Glove => "glove",
            Stage::Report => "report",
        }
    }

    pub fn parse(s: &str) -> Option<Stage> {
        Stage::ALL.into_iter().find(|st| st.name() == s).or(match s {
            "w2v" => Some(Stage::Word2vec),
            _ => None,
        })
    }
}

/// What one stage produced, relative to the output directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub outputs: Vec<String>,
    pub notes: BTreeMap<String, serde_json::Value>,
}

impl StageReport {
    fn output(&mut self, name: impl Into<String>) {
        self.outputs.push(name.into());
    }

    fn note(&mut self, key: &str, value: impl Into<serde_json::Value>) {
        self.notes.insert(key.to_owned(), value.into());
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub seconds: f64,
    pub report: StageReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub status: String,
    pub config_hash: String,
    pub corpus_hash: Option<String>,
    pub seed: u64,
    pub deterministic: bool,
    pub stages: Vec<StageRecord>,
    pub failed_stage: Option<Stage>,
    pub error: Option<String>,
}

pub fn run_stage(cfg: &RunConfig, stage: Stage) -> CliResult<StageReport> {
    let dir = cfg.resolve(&cfg.out_dir);
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    match stage {
        Stage::Ingest => ingest_stage(cfg),
        Stage::Prep => prep_stage(cfg),
        Stage::Chem => chem_stage(cfg),
        Stage::Cooc => cooc_stage(cfg),
        Stage::Word2vec => word2vec_stage(cfg),
        Stage::Glove => glove_stage(cfg),
        Stage::Report => report_stage(cfg),
    }
    .map_err(|e| CliError::Stage {
        stage: stage.name(),
        source: Box::new(e),
    })
}

/// Validates, then runs every stage in order and writes the manifest. On
/// failure the outputs so far stay on disk next to an `INCOMPLETE` marker.
pub fn run_pipeline(cfg: &RunConfig) -> CliResult<RunManifest> {
    ensure_valid(cfg)?;
    let dir = cfg.resolve(&cfg.out_dir);
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let marker = dir.join(files::INCOMPLETE);
    write_file(&marker, "running\n")?;
    write_file(&dir.join(files::RESOLVED_CONFIG), &cfg.to_toml())?;

    let mut manifest = RunManifest {
        status: "incomplete".into(),
        config_hash: cfg.hash(),
        corpus_hash: None,
        seed: cfg.seed,
        deterministic: cfg.deterministic,
        stages: Vec::new(),
        failed_stage: None,
        error: None,
    };
    for stage in Stage::ALL {
        let start = Instant::now();
        let result = run_stage(cfg, stage);
        let seconds = start.elapsed().as_secs_f64();
        match result {
            Ok(report) => {
                if stage == Stage::Prep {
                    manifest.corpus_hash = Some(file_hash(&dir.join(files::CORPUS))?);
                }
                manifest.stages.push(StageRecord { stage, seconds, report });
            }
            Err(e) => {
                manifest.failed_stage = Some(stage);
                manifest.error = Some(e.to_string());
                write_manifest(&dir, &manifest)?;
                write_file(&marker, &format!("failed at stage {}: {e}\n", stage.name()))?;
                return Err(e);
            }
        }
    }
    manifest.status = "complete".into();
    write_manifest(&dir, &manifest)?;
    fs::remove_file(&marker).map_err(|e| CliError::io(&marker, e))?;
    Ok(manifest)
}

fn write_manifest(dir: &Path, manifest: &RunManifest) -> CliResult<()> {
    let text = serde_json::to_string_pretty(manifest)?;
    write_file(&dir.join(files::MANIFEST), &(text + "\n"))
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn file_hash(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(hex(&Sha256::digest(&bytes)))
}

fn require(path: PathBuf) -> CliResult<PathBuf> {
    if path.exists() {
        Ok(path)
    } else {
        Err(CliError::MissingInput(path))
    }
}

pub fn ingest_stage(cfg: &RunConfig) -> CliResult<StageReport> {
    let mut report = StageReport::default();
    let mut store = DocumentStore::new();
    let mut error_lines = String::from("file\tdocument\toffset\tmessage\n");
    let mut parse_errors = 0usize;
    let mut duplicates = 0usize;
    let mut patents = 0usize;
    for dir in &cfg.inputs.patent_dirs {
        let (docs, errors) = ingest_patent_dir(&cfg.resolve(dir), &cfg.inputs.patent_classes)?;
        for (path, e) in errors {
            parse_errors += 1;
            let _ = writeln!(error_lines, "{}\t{}\t{}\t{}", path.display(), e.chunk, e.offset, e.message);
        }
        for doc in docs {
            if store.contains(&doc.patent_id) {
                duplicates += 1;
                continue;
            }
            store.append(doc.into_document())?;
            patents += 1;
        }
    }
    let mut texts = 0usize;
    for src in &cfg.inputs.text_dirs {
        texts += add_text_dir(&mut store, &cfg.resolve(&src.dir), src)?;
    }
    let store_path = cfg.out_path(files::STORE);
    store.save(&store_path)?;
    write_file(&cfg.out_path(files::INGEST_ERRORS), &error_lines)?;
    report.output(files::STORE);
    report.output(files::INGEST_ERRORS);
    report.note("patents", patents);
    report.note("texts", texts);
    report.note("parse_errors", parse_errors);
    report.note("duplicate_patents", duplicates);
    Ok(report)
}

/// Appends every `.txt` file of `dir`, with ids `venue/file` (or `dir/file`).
pub fn add_text_dir(store: &mut DocumentStore, dir: &Path, src: &TextSource) -> CliResult<usize> {
    let prefix = src
        .venue
        .clone()
        .unwrap_or_else(|| dir.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned()));
    let mut added = 0;
    for path in sorted_files(dir, &["txt"])? {
        let name = path.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
        let mut meta = BTreeMap::new();
        meta.insert("doc_id".to_owned(), format!("{prefix}/{name}"));
        meta.insert("source_kind".to_owned(), src.kind.as_str().to_owned());
        if let Some(v) = &src.venue {
            meta.insert("venue".to_owned(), v.clone());
        }
        let loaded = load_plain_text(&path, &meta)?;
        if loaded.replacements > 0 {
            eprintln!("warning: {}: {} invalid UTF-8 sequences replaced", path.display(), loaded.replacements);
        }
        store.append(loaded.document)?;
        added += 1;
    }
    Ok(added)
}

pub fn cleaning_config(cfg: &RunConfig) -> CliResult<CleaningConfig> {
    let patterns: Vec<String> = match &cfg.prep.abbreviations {
        Some(p) => p.clone(),
        None => DEFAULT_ABBREVIATION_PATTERNS.iter().map(|s| s.to_string()).collect(),
    };
    let mut cleaning = CleaningConfig::new(
        DEFAULT_STOPWORDS.iter().map(|s| s.to_string()),
        &patterns,
        cfg.prep.drop_numeric,
    )?;
    cleaning.max_non_alpha_fraction = cfg.prep.max_non_alpha_fraction;
    cleaning.strip_references = cfg.prep.strip_references;
    if let Some(p) = &cfg.inputs.stopwords {
        cleaning.extend_stopwords_from_file(&cfg.resolve(p))?;
    }
    Ok(cleaning)
}

/// The configured input lexicon, or the built-in seed lexicon.
pub fn input_lexicon(cfg: &RunConfig) -> CliResult<ChemLexicon> {
    let mut lexicon = match &cfg.inputs.lexicon {
        Some(p) => ChemLexicon::load_tsv(&cfg.resolve(p))?,
        None => ChemLexicon::seed(),
    };
    if let Some(names) = &cfg.chem.stop_names {
        lexicon.set_stop_names(names.iter().cloned());
    }
    Ok(lexicon)
}

pub fn prep_stage(cfg: &RunConfig) -> CliResult<StageReport> {
    let store = DocumentStore::load(&require(cfg.out_path(files::STORE))?)?;
    let cleaning = cleaning_config(cfg)?;
    let lexicon = input_lexicon(cfg)?;
    let gazetteer = cfg.prep.merge_entities.then(|| Gazetteer::new(&lexicon));
    let sentences = prepare_documents(store.documents(), &cleaning, gazetteer.as_ref());
    write_token_corpus(&cfg.out_path(files::CORPUS), &sentences)?;
    let vocab = build_vocabulary(&sentences, cfg.prep.min_count)?;
    vocab.save_tsv(&cfg.out_path(files::VOCAB))?;
    let mut report = StageReport::default();
    report.output(files::CORPUS);
    report.output(files::VOCAB);
    report.note("documents", store.len());
    report.note("sentences", sentences.len());
    report.note("tokens", vocab.total_tokens());
    report.note("vocabulary", vocab.len());
    Ok(report)
}

fn load_corpus(cfg: &RunConfig) -> CliResult<Vec<Vec<String>>> {
    Ok(read_token_corpus(&require(cfg.out_path(files::CORPUS))?)?)
}

fn load_vocab(cfg: &RunConfig) -> CliResult<Vocabulary> {
    Ok(Vocabulary::load_tsv(&require(cfg.out_path(files::VOCAB))?)?)
}

/// Fills SMILES from the resolver cache, trains the classifier when labeled
/// data is configured, scores the lexicon and counts chemical mentions.
pub fn chem_stage(cfg: &RunConfig) -> CliResult<StageReport> {
    let mut report = StageReport::default();
    let mut lexicon = input_lexicon(cfg)?;

    if let Some(p) = &cfg.inputs.resolver_cache {
        let resolver = Resolver::with_cache_file(&cfg.resolve(p))?;
        let mut filled = 0usize;
        for entry in lexicon.entries_mut() {
            if entry.smiles.is_some() {
                continue;
            }
            let hit = entry.names().find_map(|n| resolver.cached(n));
            if let Some(hit) = hit {
                entry.smiles = Some(hit.smiles);
                filled += 1;
            }
        }
        report.note("smiles_from_cache", filled);
    }

    if let Some(p) = &cfg.inputs.chem_training {
        let data = load_labeled_chemicals(&cfg.resolve(p))?;
        let (_, features, labels) = featurize_dataset(&data)?;
        let trained = train_linear_classifier(&features, &labels, &cfg.svm_effective())?;
        trained.model.save(&cfg.out_path(files::CLASSIFIER), Some(&trained))?;
        report.output(files::CLASSIFIER);
        report.note("train_size", trained.train_size);
        if let Some(h) = &trained.holdout_metrics {
            report.note("holdout_auroc", h.auroc);
            report.note("holdout_false_positive_rate", h.false_positive_rate);
        }
        let scores = score_lexicon(&mut lexicon, &trained.model, cfg.chem.relabel)?;
        write_file(&cfg.out_path(files::CHEM_SCORES), &scores)?;
        report.output(files::CHEM_SCORES);
    }
    lexicon.save_tsv(&cfg.out_path(files::LEXICON))?;
    report.output(files::LEXICON);

    let sentences = load_corpus(cfg)?;
    let stats = mention_stats(&sentences, &lexicon, &Gazetteer::new(&lexicon));
    let mut out = String::from("name\tn\tn_ner\n");
    for s in &stats {
        let _ = writeln!(out, "{}\t{}\t{}", s.name, s.n, s.n_ner);
    }
    write_file(&cfg.out_path(files::MENTIONS), &out)?;
    report.output(files::MENTIONS);
    report.note("chemicals_mentioned", stats.len());
    Ok(report)
}

/// Scores every lexicon entry with parseable SMILES. Returns the score table.
pub fn score_lexicon(lexicon: &mut ChemLexicon, model: &LinearModel, relabel: bool) -> CliResult<String> {
    let schema = Arc::new(model.schema.clone());
    let mut out = String::from("name\tsmiles\tscore\tlabel\tunknown_bonds\n");
    for entry in lexicon.entries_mut() {
        let Some(smiles) = entry.smiles.clone() else { continue };
        let Ok(graph) = parse_smiles(&smiles) else {
            let _ = writeln!(out, "{}\t{}\t\t\tunparseable", entry.canonical_name, smiles);
            continue;
        };
        let counts = featurize_sum_over_bonds(&graph, &schema);
        let c = classify_energetic(model, &counts.features)?;
        entry.energetic_score = Some(c.score);
        if relabel {
            entry.energetic_label = Some(c.label);
        }
        let _ = writeln!(
            out,
            "{}\t{}\t{:.6}\t{}\t{}",
            entry.canonical_name, smiles, c.score, c.label as u8, counts.unknown_bonds
        );
    }
    Ok(out)
}

pub fn cooc_stage(cfg: &RunConfig) -> CliResult<StageReport> {
    let sentences = load_corpus(cfg)?;
    let vocab = load_vocab(cfg)?;
    let corpus = TokenizedCorpus::encode(&sentences, &vocab);
    let matrix = build_cooccurrence(&corpus, vocab.len(), &cfg.cooc)?;
    matrix.save(&cfg.out_path(files::COOC))?;
    let mut report = StageReport::default();
    report.output(files::COOC);
    report.note("nonzero", matrix.nnz());
    Ok(report)
}

fn loss_table(losses: &[f64]) -> String {
    let mut out = String::from("epoch\tloss\n");
    for (i, l) in losses.iter().enumerate() {
        let _ = writeln!(out, "{}\t{l:.9}", i + 1);
    }
    out
}

pub fn word2vec_stage(cfg: &RunConfig) -> CliResult<StageReport> {
    let sentences = load_corpus(cfg)?;
    let vocab = load_vocab(cfg)?;
    let corpus = TokenizedCorpus::encode(&sentences, &vocab);
    let trained = train_skipgram(&corpus, &vocab, &cfg.word2vec_effective())?;
    trained.model.save(&cfg.out_path(files::WORD2VEC))?;
    trained.model.save_text(&cfg.out_path(files::WORD2VEC_TEXT))?;
    write_file(&cfg.out_path(files::WORD2VEC_LOSS), &loss_table(&trained.epoch_losses))?;
    let mut report = StageReport::default();
    report.output(files::WORD2VEC);
    report.output(files::WORD2VEC_TEXT);
    report.output(files::WORD2VEC_LOSS);
    if let Some(l) = trained.epoch_losses.last() {
        report.note("final_loss", *l);
    }
    Ok(report)
}

pub fn glove_stage(cfg: &RunConfig) -> CliResult<StageReport> {
    let vocab = load_vocab(cfg)?;
    let matrix = CoocMatrix::load(&require(cfg.out_path(files::COOC))?)?;
    if matrix.vocab_size != vocab.len() {
        return Err(chemvec::Error::DimensionMismatch {
            expected: vocab.len(),
            actual: matrix.vocab_size,
        }
        .into());
    }
    let trained = train_glove(&matrix, &cfg.glove_effective())?;
    let mut model = trained.model.into_embedding(vocab.tokens().to_vec())?;
    model.query = cfg.queries.glove_vectors;
    model.save(&cfg.out_path(files::GLOVE))?;
    model.save_text(&cfg.out_path(files::GLOVE_TEXT))?;
    write_file(&cfg.out_path(files::GLOVE_LOSS), &loss_table(&trained.epoch_losses))?;
    let mut report = StageReport::default();
    report.output(files::GLOVE);
    report.output(files::GLOVE_TEXT);
    report.output(files::GLOVE_LOSS);
    if let Some(l) = trained.epoch_losses.last() {
        report.note("final_loss", *l);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordGroup {
    pub name: String,
    pub tokens: Vec<String>,
}

pub fn load_groups(path: &Path) -> CliResult<Vec<WordGroup>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn application_list(cfg: &RunConfig) -> CliResult<Vec<String>> {
    Ok(match &cfg.inputs.application_words {
        Some(p) => {
            let p = cfg.resolve(p);
            parse_word_list(&fs::read_to_string(&p).map_err(|e| CliError::io(&p, e))?)
        }
        None => default_application_words(),
    })
}

/// The in-vocabulary token form of a lexicon entry with the highest count.
pub fn entry_token(lexicon: &ChemLexicon, entry: usize, vocab: &Vocabulary) -> Option<String> {
    let mut best: Option<(u64, String)> = None;
    for form in lexicon.token_forms(entry) {
        if let Some(id) = vocab.id(&form) {
            let c = vocab.count(id);
            if best.as_ref().is_none_or(|(bc, _)| c > *bc) {
                best = Some((c, form));
            }
        }
    }
    best.map(|(_, f)| f)
}

/// Groups used when none are configured: energetic chemicals, other
/// chemicals and application words present in the vocabulary.
fn default_groups(lexicon: &ChemLexicon, vocab: &Vocabulary, apps: &[String]) -> Vec<WordGroup> {
    let mut energetic = Vec::new();
    let mut other = Vec::new();
    for e in 0..lexicon.len() {
        if let Some(t) = entry_token(lexicon, e, vocab) {
            if lexicon.is_energetic(e) {
                energetic.push(t);
            } else {
                other.push(t);
            }
        }
    }
    let applications = apps.iter().filter(|a| vocab.id(a).is_some()).cloned().collect();
    vec![
        WordGroup {
            name: "energetic".into(),
            tokens: energetic,
        },
        WordGroup {
            name: "other_chemicals".into(),
            tokens: other,
        },
        WordGroup {
            name: "applications".into(),
            tokens: applications,
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct RankingRecord {
    query: String,
    model: &'static str,
    filter: FilterLevel,
    items: Vec<chemvec::embedspace::RankedItem>,
    error: Option<String>,
}

/// Group matrices, the chemical table, filtered rankings, PCA coordinates and
/// hubness diagnostics for both models.
pub fn report_stage(cfg: &RunConfig) -> CliResult<StageReport> {
    let mut report = StageReport::default();
    let vocab = load_vocab(cfg)?;
    let lexicon = ChemLexicon::load_tsv(&require(cfg.out_path(files::LEXICON))?)?;
    let apps = application_list(cfg)?;
    let models = [
        (Algorithm::Word2vec, EmbeddingModel::load(&require(cfg.out_path(files::WORD2VEC))?)?),
        (Algorithm::Glove, EmbeddingModel::load(&require(cfg.out_path(files::GLOVE))?)?),
    ];
    let spaces: Vec<(&'static str, EmbeddingSpace)> = models
        .iter()
        .map(|(alg, m)| (alg.as_str(), EmbeddingSpace::new(m)))
        .collect();

    let groups = match &cfg.inputs.groups {
        Some(p) => load_groups(&cfg.resolve(p))?,
        None => default_groups(&lexicon, &vocab, &apps),
    };
    let group_pairs: Vec<(String, Vec<String>)> = groups.iter().map(|g| (g.name.clone(), g.tokens.clone())).collect();
    for (name, space) in &spaces {
        let file = files::groups(name);
        write_file(&cfg.out_path(&file), &group_table(space, &group_pairs).to_tsv())?;
        report.output(file);
    }

    let sentences = load_corpus(cfg)?;
    let stats = mention_stats(&sentences, &lexicon, &Gazetteer::new(&lexicon));
    let mut table = String::from("rank\tchemical\ttoken\tn\tn_ner");
    for (name, _) in &spaces {
        let _ = write!(table, "\t{name}_applications");
    }
    table.push('\n');
    for (rank, s) in stats.iter().take(cfg.queries.top_chemicals).enumerate() {
        let token = entry_token(&lexicon, s.entry, &vocab);
        let _ = write!(
            table,
            "{}\t{}\t{}\t{}\t{}",
            rank + 1,
            s.name,
            token.as_deref().unwrap_or("-"),
            s.n,
            s.n_ner
        );
        for (_, space) in &spaces {
            let cell = token
                .as_deref()
                .and_then(|t| application_words(space, t, &apps, cfg.queries.app_k).ok())
                .map(|r| r.tokens().join(","))
                .unwrap_or_else(|| "-".into());
            let _ = write!(table, "\t{cell}");
        }
        table.push('\n');
    }
    write_file(&cfg.out_path(files::CHEMICALS), &table)?;
    report.output(files::CHEMICALS);

    let filters = [FilterLevel::AllWords, FilterLevel::ChemicalNames, FilterLevel::LikelyEnergetics];
    let mut records = Vec::new();
    let mut tsv = String::from("query\tmodel\tfilter\trank\ttoken\tscore\n");
    for word in &cfg.queries.words {
        for (name, space) in &spaces {
            for filter in filters {
                match nearest(space, word, cfg.queries.k, filter, Some(&lexicon)) {
                    Ok(r) => {
                        for (i, item) in r.items.iter().enumerate() {
                            let _ = writeln!(
                                tsv,
                                "{word}\t{name}\t{}\t{}\t{}\t{:.6}",
                                filter_name(filter),
                                i + 1,
                                item.token,
                                item.score
                            );
                        }
                        records.push(RankingRecord {
                            query: word.clone(),
                            model: name,
                            filter,
                            items: r.items,
                            error: None,
                        });
                    }
                    Err(e) => records.push(RankingRecord {
                        query: word.clone(),
                        model: name,
                        filter,
                        items: Vec::new(),
                        error: Some(e.to_string()),
                    }),
                }
            }
        }
    }
    write_file(&cfg.out_path(files::RANKINGS), &tsv)?;
    write_file(&cfg.out_path(files::RANKINGS_JSON), &(serde_json::to_string_pretty(&records)? + "\n"))?;
    report.output(files::RANKINGS);
    report.output(files::RANKINGS_JSON);

    let (pca_tokens, labels) = pca_selection(&lexicon, &vocab, &apps);
    for (name, space) in &spaces {
        let projection = pca_project(space, &pca_tokens, cfg.queries.pca_components)?;
        let file = files::pca(name);
        write_file(&cfg.out_path(&file), &projection.to_csv(&labels))?;
        report.output(file);
    }

    let mut hub = BTreeMap::new();
    for (name, space) in &spaces {
        if space.len() < 2 {
            continue;
        }
        let k = cfg.queries.hubness_k.min(space.len() - 1);
        let ids: Vec<u32> = (0..space.len() as u32).collect();
        let h = hubness(space, k, &ids)?;
        hub.insert(
            name.to_string(),
            serde_json::json!({
                "k": h.k,
                "cosine_skewness": h.cosine_skewness,
                "euclidean_skewness": h.euclidean_skewness,
            }),
        );
    }
    write_file(&cfg.out_path(files::HUBNESS), &(serde_json::to_string_pretty(&hub)? + "\n"))?;
    report.output(files::HUBNESS);
    report.note("chemicals", stats.len().min(cfg.queries.top_chemicals));
    report.note("rankings", records.iter().filter(|r| r.error.is_none()).count());
    Ok(report)
}

fn filter_name(filter: FilterLevel) -> &'static str {
    match filter {
        FilterLevel::AllWords => "all",
        FilterLevel::ChemicalNames => "chemicals",
        FilterLevel::LikelyEnergetics => "energetics",
    }
}

/// Chemical and application tokens in the vocabulary, each labeled with its group.
fn pca_selection(lexicon: &ChemLexicon, vocab: &Vocabulary, apps: &[String]) -> (Vec<String>, HashMap<String, String>) {
    let mut tokens = Vec::new();
    let mut labels = HashMap::new();
    for e in 0..lexicon.len() {
        if let Some(t) = entry_token(lexicon, e, vocab) {
            if labels.contains_key(&t) {
                continue;
            }
            let group = if lexicon.is_energetic(e) { "energetic" } else { "chemical" };
            labels.insert(t.clone(), group.to_owned());
            tokens.push(t);
        }
    }
    for a in apps {
        if vocab.id(a).is_some() && !labels.contains_key(a) {
            labels.insert(a.clone(), "application".to_owned());
            tokens.push(a.clone());
        }
    }
    if tokens.len() < 2 {
        tokens = vocab.tokens().iter().take(50).cloned().collect();
    }
    (tokens, labels)
}
