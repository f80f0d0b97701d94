use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use chemvec::chemlex::classifier::{featurize_dataset, load_labeled_chemicals};
use chemvec::chemlex::resolver::HttpBackend;
use chemvec::chemlex::{
    classify_energetic, featurize_sum_over_bonds, parse_smiles, train_linear_classifier, ChemLexicon, LinearModel,
    Resolver,
};
use chemvec::embedspace::{
    analogy, application_words, group_table, hubness, nearest, parse_word_list, pca_project, EmbeddingSpace,
    FilterLevel,
};
use chemvec::ingest::{ingest_patent_dir, DocumentStore, SourceKind};
use chemvec::EmbeddingModel;
use chemvec_cli::config::{ensure_valid, validate_config, RunConfig, TextSource};
use chemvec_cli::pipeline::{self, add_text_dir, application_list, files, load_groups};
use chemvec_cli::{run_pipeline, run_stage, CliError, CliResult, Stage, StageReport};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "chemvec", version, about = "Word embeddings for energetic-materials text")]
struct Cli {
    /// TOML run configuration. Defaults apply to anything it leaves out.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed; each stage derives its own from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Single worker everywhere; repeated runs give identical files.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Where stage outputs are read and written.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the configuration and exit.
    Validate,
    /// Run the whole pipeline, or one stage with --only.
    Run {
        /// ingest, prep, chem, cooc, word2vec, glove or report
        #[arg(long)]
        only: Option<String>,
    },
    /// Build the document store from patents and plain text.
    #[command(subcommand)]
    Ingest(IngestCommand),
    /// Clean and tokenize the document store, then build the vocabulary.
    Prep,
    /// Chemical classifier and name lookup.
    #[command(subcommand)]
    Chem(ChemCommand),
    /// Build the co-occurrence matrix from the prepared corpus.
    Cooc,
    /// Train one embedding model on the prepared corpus.
    Train {
        #[arg(value_parser = ["w2v", "word2vec", "glove"])]
        model: String,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Inspect a trained embedding model.
    #[command(subcommand)]
    Query(QueryCommand),
}

#[derive(Subcommand)]
enum IngestCommand {
    /// Parse patent XML and keep patents in the given classes.
    Patents {
        #[arg(long)]
        xml_dir: PathBuf,
        /// Classification prefixes, comma separated. Defaults to the configured classes.
        #[arg(long, value_delimiter = ',')]
        classes: Option<Vec<String>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Add every .txt file of a directory to the store.
    Text {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        venue: Option<String>,
        #[arg(long, default_value = "proceedings")]
        kind: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ChemCommand {
    /// Train the bond-count classifier on `name<TAB>smiles<TAB>label` rows.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score SMILES strings with a trained classifier.
    Classify {
        #[arg(long)]
        model: PathBuf,
        smiles: Vec<String>,
    },
    /// Score the lexicon and count chemical mentions in the prepared corpus.
    Stats,
    /// Look names up in the resolver cache, then the remote service if configured.
    Resolve {
        #[arg(long)]
        cache: Option<PathBuf>,
        names: Vec<String>,
    },
}

#[derive(Args)]
struct ModelArg {
    /// Embedding model file. Defaults to the word2vec model in the output directory.
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Subcommand)]
enum QueryCommand {
    /// Closest words to a word by cosine similarity.
    Nearest {
        #[command(flatten)]
        model: ModelArg,
        word: String,
        #[arg(long, default_value_t = 5)]
        k: usize,
        /// all, chemicals or energetics
        #[arg(long, default_value = "all")]
        filter: String,
        #[arg(long)]
        lexicon: Option<PathBuf>,
    },
    /// Mean similarity between every pair of word groups in a JSON file.
    Groups {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        groups: PathBuf,
    },
    /// Project words onto their principal components.
    Pca {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, value_delimiter = ',', required = true)]
        tokens: Vec<String>,
        #[arg(long, default_value_t = 2)]
        ncomp: usize,
    },
    /// Solve a : b :: c : ?
    Analogy {
        #[command(flatten)]
        model: ModelArg,
        a: String,
        b: String,
        c: String,
        #[arg(long, default_value_t = 5)]
        k: usize,
    },
    /// Application words closest to a chemical.
    Apps {
        #[command(flatten)]
        model: ModelArg,
        chemical: String,
        #[arg(long)]
        apps: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        k: usize,
    },
    /// How often each word appears in other words' neighbor lists.
    Hubness {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, default_value_t = 10)]
        k: usize,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load_config(cli: &Cli) -> CliResult<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if cli.deterministic {
        cfg.deterministic = true;
    }
    if let Some(d) = &cli.out_dir {
        cfg.out_dir = std::path::absolute(d).map_err(|e| CliError::io(d, e))?;
    }
    Ok(cfg)
}

/// Validation for a single stage: only ingest needs input directories.
fn ensure_valid_for(cfg: &RunConfig, stage: Stage) -> CliResult<()> {
    let errors: Vec<_> = validate_config(cfg)
        .into_iter()
        .filter(|e| stage == Stage::Ingest || e.field != "inputs")
        .collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(errors))
    }
}

fn print_report(stage: Stage, report: &StageReport) {
    println!("{}: wrote {}", stage.name(), report.outputs.join(", "));
    for (k, v) in &report.notes {
        println!("  {k} = {v}");
    }
}

fn stage(cfg: &RunConfig, stage: Stage) -> CliResult<()> {
    ensure_valid_for(cfg, stage)?;
    let report = run_stage(cfg, stage)?;
    print_report(stage, &report);
    Ok(())
}

fn execute(cli: Cli) -> CliResult<()> {
    let mut cfg = load_config(&cli)?;
    match cli.command {
        Command::Validate => {
            ensure_valid(&cfg)?;
            println!("ok (config hash {})", cfg.hash());
            Ok(())
        }
        Command::Run { only: None } => {
            let manifest = run_pipeline(&cfg)?;
            for rec in &manifest.stages {
                println!("{:<9} {:>8.2}s  {}", rec.stage.name(), rec.seconds, rec.report.outputs.join(", "));
            }
            println!("complete: {}", cfg.resolve(&cfg.out_dir).display());
            Ok(())
        }
        Command::Run { only: Some(name) } => {
            let st = Stage::parse(&name).ok_or_else(|| CliError::Usage(format!("unknown stage {name:?}")))?;
            stage(&cfg, st)
        }
        Command::Ingest(cmd) => ingest(&cfg, cmd),
        Command::Prep => stage(&cfg, Stage::Prep),
        Command::Cooc => stage(&cfg, Stage::Cooc),
        Command::Train {
            model,
            dim,
            window,
            epochs,
        } => {
            let st = if model == "glove" { Stage::Glove } else { Stage::Word2vec };
            if st == Stage::Glove {
                cfg.glove.dim = dim.unwrap_or(cfg.glove.dim);
                cfg.glove.epochs = epochs.unwrap_or(cfg.glove.epochs);
                if window.is_some() {
                    return Err(CliError::Usage("glove takes its window from the cooc stage".into()));
                }
            } else {
                cfg.word2vec.dim = dim.unwrap_or(cfg.word2vec.dim);
                cfg.word2vec.window = window.unwrap_or(cfg.word2vec.window);
                cfg.word2vec.epochs = epochs.unwrap_or(cfg.word2vec.epochs);
            }
            stage(&cfg, st)
        }
        Command::Chem(cmd) => chem(&cfg, cmd),
        Command::Query(cmd) => query(&cfg, cmd),
    }
}

fn open_store(cfg: &RunConfig, out: Option<PathBuf>) -> CliResult<(PathBuf, DocumentStore)> {
    let path = out.unwrap_or_else(|| cfg.out_path(files::STORE));
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    let store = if path.exists() { DocumentStore::load(&path)? } else { DocumentStore::new() };
    Ok((path, store))
}

fn ingest(cfg: &RunConfig, cmd: IngestCommand) -> CliResult<()> {
    let (path, store) = match cmd {
        IngestCommand::Patents { xml_dir, classes, out } => {
            let (path, mut store) = open_store(cfg, out)?;
            let classes = classes.unwrap_or_else(|| cfg.inputs.patent_classes.clone());
            let (docs, errors) = ingest_patent_dir(&xml_dir, &classes)?;
            for (file, e) in &errors {
                eprintln!("warning: {}: {e}", file.display());
            }
            let mut added = 0;
            for doc in docs {
                if !store.contains(&doc.patent_id) {
                    store.append(doc.into_document())?;
                    added += 1;
                }
            }
            println!("kept {added} patents ({} parse errors)", errors.len());
            (path, store)
        }
        IngestCommand::Text { dir, venue, kind, out } => {
            let (path, mut store) = open_store(cfg, out)?;
            let kind = SourceKind::parse(&kind).ok_or_else(|| CliError::Usage(format!("unknown source kind {kind:?}")))?;
            let src = TextSource { dir, venue, kind };
            let added = add_text_dir(&mut store, &src.dir, &src)?;
            println!("added {added} documents");
            (path, store)
        }
    };
    store.save(&path)?;
    println!("store: {} ({} documents)", path.display(), store.len());
    Ok(())
}

fn chem(cfg: &RunConfig, cmd: ChemCommand) -> CliResult<()> {
    match cmd {
        ChemCommand::Train { data, out } => {
            let rows = load_labeled_chemicals(&data)?;
            let (_, features, labels) = featurize_dataset(&rows)?;
            let trained = train_linear_classifier(&features, &labels, &cfg.svm_effective())?;
            trained.model.save(&out, Some(&trained))?;
            println!("trained on {} molecules", trained.train_size);
            if let Some(h) = trained.holdout_metrics {
                println!(
                    "hold-out: accuracy {:.3}, auROC {:.3}, FPR {:.3}, TPR {:.3} ({} molecules)",
                    h.accuracy, h.auroc, h.false_positive_rate, h.true_positive_rate, h.examples
                );
            }
            Ok(())
        }
        ChemCommand::Classify { model, smiles } => {
            let model = LinearModel::load(&model)?;
            let schema = Arc::new(model.schema.clone());
            for s in smiles {
                let graph = parse_smiles(&s).map_err(chemvec::Error::from)?;
                let counts = featurize_sum_over_bonds(&graph, &schema);
                let c = classify_energetic(&model, &counts.features)?;
                println!("{s}\t{:.6}\t{}", c.score, if c.label { "energetic" } else { "not-energetic" });
            }
            Ok(())
        }
        ChemCommand::Stats => stage(cfg, Stage::Chem),
        ChemCommand::Resolve { cache, names } => {
            let cache = cache.or_else(|| cfg.inputs.resolver_cache.as_ref().map(|p| cfg.resolve(p)));
            let mut resolver = match &cache {
                Some(p) => Resolver::with_cache_file(p)?,
                None => Resolver::offline(Vec::new()),
            };
            if let Some(backend) = HttpBackend::from_env(Duration::from_secs(10)) {
                resolver = resolver.with_backend(Box::new(backend));
            }
            for name in names {
                match resolver.resolve_name(&name)? {
                    Some(r) => println!("{name}\t{}\t{}", r.canonical_name, r.smiles),
                    None => println!("{name}\t-\t-"),
                }
            }
            Ok(())
        }
    }
}

fn load_space(cfg: &RunConfig, arg: &ModelArg) -> CliResult<EmbeddingSpace> {
    let path = arg.model.clone().unwrap_or_else(|| cfg.out_path(files::WORD2VEC));
    Ok(EmbeddingSpace::new(&EmbeddingModel::load(&path)?))
}

fn query(cfg: &RunConfig, cmd: QueryCommand) -> CliResult<()> {
    match cmd {
        QueryCommand::Nearest {
            model,
            word,
            k,
            filter,
            lexicon,
        } => {
            let space = load_space(cfg, &model)?;
            let filter: FilterLevel = filter.parse()?;
            let lexicon = match lexicon {
                Some(p) => Some(ChemLexicon::load_tsv(&p)?),
                None => {
                    let produced = cfg.out_path(files::LEXICON);
                    if produced.exists() {
                        Some(ChemLexicon::load_tsv(&produced)?)
                    } else {
                        Some(pipeline::input_lexicon(cfg)?)
                    }
                }
            };
            print!("{}", nearest(&space, &word, k, filter, lexicon.as_ref())?.to_tsv());
        }
        QueryCommand::Groups { model, groups } => {
            let space = load_space(cfg, &model)?;
            let groups: Vec<(String, Vec<String>)> =
                load_groups(&groups)?.into_iter().map(|g| (g.name, g.tokens)).collect();
            print!("{}", group_table(&space, &groups).to_tsv());
        }
        QueryCommand::Pca { model, tokens, ncomp } => {
            let space = load_space(cfg, &model)?;
            print!("{}", pca_project(&space, &tokens, ncomp)?.to_csv(&HashMap::new()));
        }
        QueryCommand::Analogy { model, a, b, c, k } => {
            let space = load_space(cfg, &model)?;
            print!("{}", analogy(&space, &a, &b, &c, k)?.to_tsv());
        }
        QueryCommand::Apps { model, chemical, apps, k } => {
            let space = load_space(cfg, &model)?;
            let apps = match apps {
                Some(p) => parse_word_list(&read(&p)?),
                None => application_list(cfg)?,
            };
            print!("{}", application_words(&space, &chemical, &apps, k)?.to_tsv());
        }
        QueryCommand::Hubness { model, k } => {
            let space = load_space(cfg, &model)?;
            let ids: Vec<u32> = (0..space.len() as u32).collect();
            let report = hubness(&space, k, &ids)?;
            println!("k\t{}", report.k);
            println!("cosine_skewness\t{:.6}", report.cosine_skewness);
            println!("euclidean_skewness\t{:.6}", report.euclidean_skewness);
        }
    }
    Ok(())
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}
