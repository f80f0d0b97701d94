use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chemvec::chemlex::{ChemLexicon, Gazetteer};
use chemvec::ingest::{
    corpus_stats, ingest_patent_dir, load_plain_text, parse_patent_xml, DocumentStore, SourceKind,
};
use chemvec::textprep::{
    build_vocabulary, clean_text, is_table_like, prepare_documents, prepare_text, read_token_corpus,
    write_token_corpus, CleaningConfig,
};
use chemvec::{TokenizedCorpus, Vocabulary};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn patent(id: &str, class: &str, abstract_text: &str) -> String {
    format!(
        r#"<?xml version="1.0" encoding="UTF-8"?>
<us-patent-grant>
<us-bibliographic-data-grant>
<publication-reference><document-id><country>US</country><doc-number>{id}</doc-number></document-id></publication-reference>
<classification-national><country>US</country><main-classification>{class}</main-classification></classification-national>
<invention-title>Title {id}</invention-title>
</us-bibliographic-data-grant>
<abstract><p>{abstract_text}</p></abstract>
</us-patent-grant>
"#
    )
}

#[test]
fn fixture_patents_filter_to_explosives() {
    let (kept, errors) = ingest_patent_dir(&fixtures().join("patents"), &["C06B"]).unwrap();
    assert!(errors.is_empty());
    let ids: Vec<&str> = kept.iter().map(|p| p.patent_id.as_str()).collect();
    assert_eq!(ids, ["10000001", "10000003", "10000006"]);
    assert!(kept[0].body_text.contains("TNT"));

    let (by_us_class, _) = ingest_patent_dir(&fixtures().join("patents"), &["149"]).unwrap();
    assert!(by_us_class.iter().any(|p| p.patent_id == "10000001"));
}

#[test]
fn broken_patent_does_not_stop_the_bundle() {
    let bundle = [
        patent("20000001", "C06B 25/34", "A nitrocellulose propellant."),
        "<?xml version=\"1.0\"?>\n<us-patent-grant><abstract><p>unterminated".to_string(),
        patent("20000003", "C06B 31/02", "An ammonium nitrate explosive."),
    ]
    .concat();
    let parsed = parse_patent_xml(bundle.as_bytes());
    let ids: Vec<&str> = parsed.patents.iter().map(|p| p.patent_id.as_str()).collect();
    assert_eq!(ids, ["20000001", "20000003"]);
    assert_eq!(parsed.errors.len(), 1);
    assert_eq!(parsed.errors[0].chunk, 1);
}

#[test]
fn store_round_trips_and_rejects_duplicates() {
    let dir = tempfile::tempdir().unwrap();
    let (kept, _) = ingest_patent_dir(&fixtures().join("patents"), &["C06B"]).unwrap();
    let mut store = DocumentStore::new();
    for p in kept.clone() {
        store.append(p.into_document()).unwrap();
    }
    assert!(store.append(kept[0].clone().into_document()).is_err());
    let loaded = load_plain_text(&fixtures().join("text/article_01.txt"), &BTreeMap::new()).unwrap();
    store.append(loaded.document).unwrap();

    let path = dir.path().join("store.jsonl");
    store.save(&path).unwrap();
    let back = DocumentStore::load(&path).unwrap();
    assert_eq!(back.documents(), store.documents());
    assert_eq!(back.manifest()[&SourceKind::Patent], 3);
    assert_eq!(corpus_stats(&back).total_documents, 4);
}

#[test]
fn cleaning_drops_tables_and_references() {
    let raw = fs::read_to_string(fixtures().join("text/article_03.txt")).unwrap();
    let cfg = CleaningConfig::default();
    let cleaned = clean_text(&raw, &cfg);
    assert!(!cleaned.contains("8750"));
    assert!(!cleaned.contains("Smith, J."));
    assert!(is_table_like("1.82 8750 34.0 | 1.91 9100 39.0", 0.4));
    assert!(!is_table_like("The detonation velocity of RDX is high.", 0.4));
}

#[test]
fn multiword_names_become_single_tokens() {
    let lexicon = ChemLexicon::load_tsv(&fixtures().join("lexicon.tsv")).unwrap();
    let gazetteer = Gazetteer::new(&lexicon);
    let cfg = CleaningConfig::default();
    let with = prepare_text("The sample contained 2,4,6-trinitrotoluene and ammonium nitrate.", &cfg, Some(&gazetteer));
    let without = prepare_text("The sample contained 2,4,6-trinitrotoluene and ammonium nitrate.", &cfg, None);
    assert_eq!(with.len(), 1);
    assert!(with[0].len() < without[0].len(), "{with:?} vs {without:?}");
    assert!(with[0].iter().any(|t| t.contains("ammonium") && t.contains("nitrate")), "{with:?}");
}

#[test]
fn fixture_text_prepares_into_a_vocabulary() {
    let mut docs = Vec::new();
    for i in 1..=5 {
        let path = fixtures().join(format!("text/article_0{i}.txt"));
        docs.push(load_plain_text(&path, &BTreeMap::new()).unwrap().document);
    }
    let sentences = prepare_documents(&docs, &CleaningConfig::default(), None);
    assert!(sentences.len() > 100);
    assert!(sentences.iter().flatten().all(|t| t == &t.to_lowercase()));

    let vocab = build_vocabulary(&sentences, 3).unwrap();
    assert!(vocab.counts().iter().all(|&c| c >= 3));
    assert!(vocab.counts().windows(2).all(|w| w[0] >= w[1]));
    let corpus = TokenizedCorpus::encode(&sentences, &vocab);
    assert_eq!(corpus.vocab_ref, vocab.hash_hex());
    assert_eq!(corpus.num_tokens() as u64, vocab.counts().iter().sum::<u64>());

    let dir = tempfile::tempdir().unwrap();
    let vocab_path = dir.path().join("vocab.tsv");
    vocab.save_tsv(&vocab_path).unwrap();
    assert_eq!(Vocabulary::load_tsv(&vocab_path).unwrap(), vocab);
    let corpus_path = dir.path().join("corpus.txt");
    write_token_corpus(&corpus_path, &sentences).unwrap();
    assert_eq!(read_token_corpus(&corpus_path).unwrap(), sentences);
}
