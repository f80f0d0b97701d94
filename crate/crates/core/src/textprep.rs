//! Text cleaning, chemical-name merging, sentence segmentation, tokenization,
//! vocabulary construction and frequency subsampling.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use regex::Regex;
use sha2::{Digest, Sha256};

use crate::chemlex::Gazetteer;
use crate::error::{Error, Result};
use crate::ingest::Document;

/// Function words removed during tokenization unless a custom list is supplied.
pub const DEFAULT_STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "also", "am", "an", "and", "any",
    "are", "aren", "as", "at", "be", "because", "been", "before", "being", "below", "between",
    "both", "but", "by", "can", "could", "couldn", "did", "didn", "do", "does", "doesn", "doing",
    "don", "down", "during", "each", "either", "et", "etc", "few", "for", "from", "further",
    "had", "hadn", "has", "hasn", "have", "haven", "having", "he", "her", "here", "hers",
    "herself", "him", "himself", "his", "how", "however", "if", "in", "into", "is", "isn", "it",
    "its", "itself", "just", "may", "me", "might", "more", "most", "must", "my", "myself",
    "neither", "nor", "not", "now", "of", "off", "on", "once", "only", "or", "other", "ought",
    "our", "ours", "ourselves", "out", "over", "own", "per", "same", "shall", "she", "should",
    "shouldn", "so", "some", "such", "than", "that", "the", "their", "theirs", "them",
    "themselves", "then", "there", "thereby", "therefore", "these", "they", "this", "those",
    "though", "through", "thus", "to", "too", "under", "until", "up", "upon", "us", "very", "via",
    "was", "wasn", "we", "were", "weren", "what", "when", "where", "whereas", "wherein",
    "whether", "which", "while", "who", "whom", "whose", "why", "will", "with", "within",
    "without", "won", "would", "wouldn", "yet", "you", "your", "yours", "yourself",
    "yourselves",
];

/// Abbreviations that would otherwise end a sentence early.
pub const DEFAULT_ABBREVIATION_PATTERNS: &[&str] = &[
    r"\b(?:Dr|Drs|Mr|Mrs|Ms|Prof|No|Nos|Fig|Figs|Eq|Eqs|Ref|Refs|Vol|Vols|Ch|Sec|Tab|Ex|Co|Inc|Ltd|Corp|Jr|Sr|St|Pat|Appl|approx|ca|cf|vs|al|etc|wt|vol|resp|min|max|temp)\.",
    r"(?i)\be\.g\.",
    r"(?i)\bi\.e\.",
    r"\bU\.S\.(?:A\.)?",
];

/// Lines with a larger share of non-alphabetic characters are treated as tables.
pub const DEFAULT_MAX_NON_ALPHA_FRACTION: f64 = 0.4;

#[derive(Debug, Clone)]
pub struct CleaningConfig {
    pub stopwords: BTreeSet<String>,
    abbreviations: Vec<Regex>,
    pub drop_numeric: bool,
    /// Drop lines whose non-whitespace characters are more than this fraction
    /// non-alphabetic. `None` keeps every line.
    pub max_non_alpha_fraction: Option<f64>,
    /// Cut everything from a line reading "References" or "Bibliography" onwards.
    pub strip_references: bool,
}

impl Default for CleaningConfig {
    fn default() -> Self {
        let patterns: Vec<String> = DEFAULT_ABBREVIATION_PATTERNS
            .iter()
            .map(|s| s.to_string())
            .collect();
        CleaningConfig::new(
            DEFAULT_STOPWORDS.iter().map(|s| s.to_string()),
            &patterns,
            true,
        )
        .expect("bundled abbreviation patterns compile")
    }
}

impl CleaningConfig {
    pub fn new(
        stopwords: impl IntoIterator<Item = String>,
        abbreviation_patterns: &[String],
        drop_numeric: bool,
    ) -> Result<Self> {
        let abbreviations = abbreviation_patterns
            .iter()
            .map(|p| Regex::new(p))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(CleaningConfig {
            stopwords: stopwords.into_iter().map(|w| w.to_lowercase()).collect(),
            abbreviations,
            drop_numeric,
            max_non_alpha_fraction: Some(DEFAULT_MAX_NON_ALPHA_FRACTION),
            strip_references: true,
        })
    }

    pub fn abbreviation_patterns(&self) -> Vec<&str> {
        self.abbreviations.iter().map(Regex::as_str).collect()
    }

    /// Adds the words of a stop-word file (one per line, `#` comments allowed).
    pub fn extend_stopwords_from_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.stopwords.extend(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_lowercase),
        );
        Ok(())
    }
}

/// True when the share of non-alphabetic characters among the line's
/// non-whitespace characters exceeds `max_fraction`.
pub fn is_table_like(line: &str, max_fraction: f64) -> bool {
    let (mut total, mut non_alpha) = (0usize, 0usize);
    for c in line.chars().filter(|c| !c.is_whitespace()) {
        total += 1;
        if !c.is_alphabetic() {
            non_alpha += 1;
        }
    }
    total > 0 && non_alpha as f64 > max_fraction * total as f64
}

fn is_reference_heading(line: &str) -> bool {
    let l = line.trim().trim_end_matches(':').to_lowercase();
    matches!(
        l.as_str(),
        "references" | "bibliography" | "literature cited" | "works cited"
    )
}

fn is_decimal_or_percent(core: &str) -> bool {
    let s = core.strip_prefix(['+', '-', '~']).unwrap_or(core);
    if let Some(num) = s.strip_suffix('%') {
        return !num.is_empty() && num.split_once('.').map_or(
            num.chars().all(|c| c.is_ascii_digit()),
            |(a, b)| a.chars().all(|c| c.is_ascii_digit()) && !b.is_empty() && b.chars().all(|c| c.is_ascii_digit()),
        );
    }
    match s.split_once('.') {
        Some((whole, frac)) => {
            whole.chars().all(|c| c.is_ascii_digit())
                && !frac.is_empty()
                && frac.chars().all(|c| c.is_ascii_digit())
        }
        None => false,
    }
}

fn strip_numbers(text: &str) -> String {
    let mut out: Vec<String> = Vec::new();
    for token in text.split_whitespace() {
        let lead = token.trim_start_matches(['(', '[']);
        let core = lead.trim_end_matches([',', ';', ':', '.', '!', '?', ')', ']']);
        let trailing = &lead[core.len()..];
        if is_decimal_or_percent(core) {
            if let Some(p) = trailing.chars().find(|c| matches!(c, '.' | '!' | '?')) {
                if let Some(prev) = out.last_mut() {
                    prev.push(p);
                }
            }
        } else {
            out.push(token.to_owned());
        }
    }
    out.join(" ")
}

/// Removes line breaks, table-like lines, references, decimal numbers and
/// percentages, and rewrites abbreviations without their periods.
pub fn clean_text(raw: &str, cfg: &CleaningConfig) -> String {
    let mut kept: Vec<&str> = Vec::new();
    for line in raw.lines() {
        if cfg.strip_references && is_reference_heading(line) {
            break;
        }
        if let Some(max) = cfg.max_non_alpha_fraction {
            if is_table_like(line, max) {
                continue;
            }
        }
        kept.push(line);
    }
    let mut text = kept.join(" ");
    for re in &cfg.abbreviations {
        text = re
            .replace_all(&text, |caps: &regex::Captures| caps[0].replace('.', ""))
            .into_owned();
    }
    if cfg.drop_numeric {
        strip_numbers(&text)
    } else {
        text.split_whitespace().collect::<Vec<_>>().join(" ")
    }
}

/// Deletes spaces and dashes from every multiword or dashed chemical name.
pub fn merge_entities(text: &str, gazetteer: &Gazetteer) -> String {
    let mentions = gazetteer.find(text);
    if mentions.is_empty() {
        return text.to_owned();
    }
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for m in mentions {
        out.push_str(&text[last..m.start]);
        out.extend(
            text[m.start..m.end]
                .chars()
                .filter(|c| !c.is_whitespace() && !is_dash(*c)),
        );
        last = m.end;
    }
    out.push_str(&text[last..]);
    out
}

pub(crate) fn is_dash(c: char) -> bool {
    matches!(c, '-' | '\u{2010}' | '\u{2011}' | '\u{2012}' | '\u{2013}' | '\u{2014}')
}

/// Splits after `.`, `!` or `?` when followed by whitespace and an uppercase
/// letter or digit.
pub fn segment_sentences(text: &str) -> Vec<String> {
    let mut sentences = Vec::new();
    let mut start = 0;
    for (i, c) in text.char_indices() {
        if !matches!(c, '.' | '!' | '?') {
            continue;
        }
        let end = i + c.len_utf8();
        let rest = &text[end..];
        let trimmed = rest.trim_start();
        if trimmed.len() == rest.len() {
            continue;
        }
        if trimmed
            .chars()
            .next()
            .is_some_and(|n| n.is_uppercase() || n.is_ascii_digit())
        {
            let s = text[start..end].trim();
            if !s.is_empty() {
                sentences.push(s.to_owned());
            }
            start = end;
        }
    }
    let s = text[start..].trim();
    if !s.is_empty() {
        sentences.push(s.to_owned());
    }
    sentences
}

/// Lowercases and splits on non-alphanumeric characters. A comma between two
/// digits stays inside the token so merged locant names ("1,2,4") survive.
pub fn tokenize(sentence: &str, cfg: &CleaningConfig) -> Vec<String> {
    let lower: Vec<char> = sentence.to_lowercase().chars().collect();
    let mut tokens = Vec::new();
    let mut current = String::new();
    for (i, &c) in lower.iter().enumerate() {
        let keep = c.is_alphanumeric()
            || (c == ','
                && !current.is_empty()
                && i > 0
                && lower[i - 1].is_ascii_digit()
                && lower.get(i + 1).is_some_and(|n| n.is_ascii_digit()));
        if keep {
            current.push(c);
        } else if !current.is_empty() {
            push_token(&mut tokens, std::mem::take(&mut current), cfg);
        }
    }
    if !current.is_empty() {
        push_token(&mut tokens, current, cfg);
    }
    tokens
}

fn push_token(tokens: &mut Vec<String>, token: String, cfg: &CleaningConfig) {
    if token.chars().count() >= 2 && !cfg.stopwords.contains(&token) {
        tokens.push(token);
    }
}

/// Runs clean, merge, segment and tokenize over one document.
pub fn prepare_text(text: &str, cfg: &CleaningConfig, gazetteer: Option<&Gazetteer>) -> Vec<Vec<String>> {
    let cleaned = clean_text(text, cfg);
    let merged = match gazetteer {
        Some(g) => merge_entities(&cleaned, g),
        None => cleaned,
    };
    segment_sentences(&merged)
        .iter()
        .map(|s| tokenize(s, cfg))
        .filter(|t| !t.is_empty())
        .collect()
}

/// Prepares all documents in parallel, preserving document order.
pub fn prepare_documents(
    docs: &[Document],
    cfg: &CleaningConfig,
    gazetteer: Option<&Gazetteer>,
) -> Vec<Vec<String>> {
    docs.par_iter()
        .map(|d| prepare_text(&d.text, cfg, gazetteer))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, u32>,
    min_count: u64,
    total_tokens: u64,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, id: u32) -> u64 {
        self.counts[id as usize]
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    /// Tokens in the input, retained or not.
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn dropped_tokens(&self) -> u64 {
        self.total_tokens - self.counts.iter().sum::<u64>()
    }

    /// Relative frequency of a retained word in the full input.
    pub fn frequency(&self, id: u32) -> f64 {
        self.counts[id as usize] as f64 / self.total_tokens as f64
    }

    /// Short stable identifier derived from the token list.
    pub fn hash_hex(&self) -> String {
        vocab_hash(&self.tokens)
    }

    /// Builds a vocabulary from explicit `(token, count)` rows in id order.
    pub fn from_counts(rows: Vec<(String, u64)>, min_count: u64, total_tokens: u64) -> Result<Self> {
        let mut index = HashMap::with_capacity(rows.len());
        let mut tokens = Vec::with_capacity(rows.len());
        let mut counts = Vec::with_capacity(rows.len());
        for (i, (tok, count)) in rows.into_iter().enumerate() {
            if index.insert(tok.clone(), i as u32).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate token {tok:?}")));
            }
            tokens.push(tok);
            counts.push(count);
        }
        let retained: u64 = counts.iter().sum();
        if total_tokens < retained {
            return Err(Error::InvalidArgument(
                "total token count is smaller than retained counts".into(),
            ));
        }
        Ok(Vocabulary {
            tokens,
            counts,
            index,
            min_count,
            total_tokens,
        })
    }

    /// Writes `token<TAB>id<TAB>count` rows after a `#` header line.
    pub fn save_tsv(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(
            w,
            "# total_tokens={} min_count={}",
            self.total_tokens, self.min_count
        )
        .map_err(io)?;
        for (i, (tok, count)) in self.tokens.iter().zip(&self.counts).enumerate() {
            writeln!(w, "{tok}\t{i}\t{count}").map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn load_tsv(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut rows = Vec::new();
        let mut total = None;
        let mut min_count = 1;
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let bad = |message: String| Error::Format {
                what: "vocabulary",
                line: n + 1,
                message,
            };
            if let Some(header) = line.strip_prefix('#') {
                for kv in header.split_whitespace() {
                    match kv.split_once('=') {
                        Some(("total_tokens", v)) => {
                            total = Some(v.parse().map_err(|_| bad(format!("bad total {v:?}")))?)
                        }
                        Some(("min_count", v)) => {
                            min_count = v.parse().map_err(|_| bad(format!("bad min_count {v:?}")))?
                        }
                        _ => {}
                    }
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(bad("expected token, id, count".into()));
            }
            let id: usize = fields[1].parse().map_err(|_| bad("bad id".into()))?;
            if id != rows.len() {
                return Err(bad(format!("ids must be dense, expected {}", rows.len())));
            }
            let count: u64 = fields[2].parse().map_err(|_| bad("bad count".into()))?;
            rows.push((fields[0].to_owned(), count));
        }
        let retained = rows.iter().map(|r| r.1).sum();
        Vocabulary::from_counts(rows, min_count, total.unwrap_or(retained))
    }
}

pub fn vocab_hash(tokens: &[String]) -> String {
    let mut hasher = Sha256::new();
    for t in tokens {
        hasher.update(t.as_bytes());
        hasher.update([0u8]);
    }
    let digest = hasher.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Counts tokens and keeps those seen at least `min_count` times, ordered by
/// descending frequency with ties broken lexicographically.
pub fn build_vocabulary<S: AsRef<str>>(sentences: &[Vec<S>], min_count: u64) -> Result<Vocabulary> {
    if min_count < 1 {
        return Err(Error::InvalidArgument("min_count must be at least 1".into()));
    }
    let mut freq: HashMap<&str, u64> = HashMap::new();
    let mut total = 0u64;
    for tok in sentences.iter().flatten() {
        *freq.entry(tok.as_ref()).or_default() += 1;
        total += 1;
    }
    if total == 0 {
        return Err(Error::EmptyCorpus);
    }
    let mut kept: Vec<(&str, u64)> = freq.into_iter().filter(|&(_, c)| c >= min_count).collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    Vocabulary::from_counts(
        kept.into_iter().map(|(t, c)| (t.to_owned(), c)).collect(),
        min_count,
        total,
    )
}

/// Sentences of word ids. Every id is below the vocabulary size and no
/// sentence is empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedCorpus {
    pub sentences: Vec<Vec<u32>>,
    pub vocab_ref: String,
}

impl TokenizedCorpus {
    /// Maps tokens to ids, dropping out-of-vocabulary tokens and empty sentences.
    pub fn encode<S: AsRef<str>>(sentences: &[Vec<S>], vocab: &Vocabulary) -> Self {
        let sentences = sentences
            .iter()
            .map(|s| s.iter().filter_map(|t| vocab.id(t.as_ref())).collect::<Vec<_>>())
            .filter(|s| !s.is_empty())
            .collect();
        TokenizedCorpus {
            sentences,
            vocab_ref: vocab.hash_hex(),
        }
    }

    pub fn from_ids(sentences: Vec<Vec<u32>>, vocab_ref: impl Into<String>) -> Self {
        TokenizedCorpus {
            sentences: sentences.into_iter().filter(|s| !s.is_empty()).collect(),
            vocab_ref: vocab_ref.into(),
        }
    }

    pub fn num_tokens(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn check_vocab(&self, vocab: &Vocabulary) -> Result<()> {
        let expected = vocab.hash_hex();
        if self.vocab_ref != expected {
            return Err(Error::VocabularyMismatch {
                corpus: self.vocab_ref.clone(),
                vocab: expected,
            });
        }
        self.check_ids(vocab.len())
    }

    pub fn check_ids(&self, vocab_size: usize) -> Result<()> {
        match self.sentences.iter().flatten().find(|&&id| id as usize >= vocab_size) {
            Some(&id) => Err(Error::IdOutOfRange {
                id: id as usize,
                size: vocab_size,
            }),
            None => Ok(()),
        }
    }
}

/// Probability of discarding an occurrence of a word with relative frequency `f`.
pub fn discard_probability(f: f64, t: f64) -> f64 {
    if f <= t {
        0.0
    } else {
        1.0 - (t / f).sqrt()
    }
}

/// Randomly drops occurrences of words more frequent than `t`.
///
/// Each sentence draws from its own generator derived from `seed` and the
/// sentence index, so the result does not depend on evaluation order.
pub fn subsample(corpus: &TokenizedCorpus, vocab: &Vocabulary, t: f64, seed: u64) -> Result<TokenizedCorpus> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "subsampling threshold must be in (0, 1], got {t}"
        )));
    }
    corpus.check_vocab(vocab)?;
    let discard: Vec<f64> = (0..vocab.len() as u32)
        .map(|id| discard_probability(vocab.frequency(id), t))
        .collect();
    let sentences = corpus
        .sentences
        .par_iter()
        .enumerate()
        .map(|(idx, sentence)| {
            let mut rng = sentence_rng(seed, idx as u64);
            sentence
                .iter()
                .copied()
                .filter(|&id| {
                    let p = discard[id as usize];
                    p == 0.0 || rng.random::<f64>() >= p
                })
                .collect::<Vec<u32>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .filter(|s| !s.is_empty())
        .collect();
    Ok(TokenizedCorpus {
        sentences,
        vocab_ref: corpus.vocab_ref.clone(),
    })
}

pub(crate) fn sentence_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Writes one sentence per line with space-separated tokens.
pub fn write_token_corpus<S: AsRef<str>>(path: &Path, sentences: &[Vec<S>]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for s in sentences {
        let line = s.iter().map(AsRef::as_ref).collect::<Vec<&str>>().join(" ");
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_token_corpus(path: &Path) -> Result<Vec<Vec<String>>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let tokens: Vec<String> = line.split_whitespace().map(str::to_owned).collect();
        if !tokens.is_empty() {
            out.push(tokens);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg_with(stop: &[&str]) -> CleaningConfig {
        CleaningConfig {
            stopwords: stop.iter().map(|s| s.to_string()).collect(),
            ..CleaningConfig::default()
        }
    }

    #[test]
    fn clean_text_examples() {
        let cfg = CleaningConfig::default();
        assert_eq!(clean_text("density is 1.89 g/cc", &cfg), "density is g/cc");
        assert_eq!(clean_text("Dr. Smith\nreported", &cfg), "Dr Smith reported");
        assert_eq!(clean_text("", &cfg), "");
        assert_eq!(clean_text("yield was 45% overall", &cfg), "yield was overall");
        assert_eq!(clean_text("see Fig. 3 and e.g. RDX", &cfg), "see Fig 3 and eg RDX");
        assert_eq!(clean_text("mass of 2.5. Next", &cfg), "mass of. Next");
    }

    #[test]
    fn clean_text_drops_table_lines_and_references() {
        let cfg = CleaningConfig::default();
        let raw = "HMX is dense.\n1.91 | 9.1 | 39 | 0.5\nRDX too.\nReferences\n[1] Smith J.";
        assert_eq!(clean_text(raw, &cfg), "HMX is dense. RDX too.");
    }

    #[test]
    fn segmentation() {
        assert_eq!(
            segment_sentences("RDX detonates. HMX is similar."),
            vec!["RDX detonates.", "HMX is similar."]
        );
        assert_eq!(
            segment_sentences("no terminal punctuation"),
            vec!["no terminal punctuation"]
        );
        assert!(segment_sentences("").is_empty());
        assert_eq!(segment_sentences("see eg. the text"), vec!["see eg. the text"]);
        assert_eq!(segment_sentences("Done! 2 more? Yes."), vec!["Done!", "2 more?", "Yes."]);
    }

    #[test]
    fn tokenization() {
        let cfg = cfg_with(&["the"]);
        assert_eq!(tokenize("The RDX-based charge", &cfg), vec!["rdx", "based", "charge"]);
        assert_eq!(tokenize("HMX.", &cfg), vec!["hmx"]);
        assert!(tokenize("a I", &cfg_with(&["a"])).is_empty());
        assert_eq!(tokenize("C06B and TATB", &cfg), vec!["c06b", "and", "tatb"]);
        assert_eq!(
            tokenize("3nitro1,2,4triazol5one, then", &cfg),
            vec!["3nitro1,2,4triazol5one", "then"]
        );
    }

    #[test]
    fn vocabulary_examples() {
        let s = vec![vec!["a", "b", "a"]];
        let v = build_vocabulary(&s, 2).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v.id("a"), Some(0));
        assert_eq!(v.count(0), 2);
        assert_eq!(v.total_tokens(), 3);
        assert_eq!(v.dropped_tokens(), 1);

        let v = build_vocabulary(&s, 1).unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v.id("a"), Some(0));
        assert_eq!(v.id("b"), Some(1));

        let empty: Vec<Vec<&str>> = vec![];
        assert!(matches!(build_vocabulary(&empty, 1), Err(Error::EmptyCorpus)));
        assert!(build_vocabulary(&s, 0).is_err());
    }

    #[test]
    fn vocabulary_ties_are_lexicographic() {
        let s = vec![vec!["zeta", "alpha", "mid", "mid"]];
        let v = build_vocabulary(&s, 1).unwrap();
        assert_eq!(v.tokens(), &["mid", "alpha", "zeta"]);
    }

    #[test]
    fn vocabulary_tsv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.tsv");
        let v = build_vocabulary(&[vec!["x", "y", "x", "z"]], 2).unwrap();
        v.save_tsv(&path).unwrap();
        assert_eq!(Vocabulary::load_tsv(&path).unwrap(), v);
    }

    #[test]
    fn subsample_boundary_never_removes() {
        // "a" has frequency exactly 0.5
        let s = vec![vec!["a", "b"]; 1000];
        let v = build_vocabulary(&s, 1).unwrap();
        let c = TokenizedCorpus::encode(&s, &v);
        let out = subsample(&c, &v, 0.5, 7).unwrap();
        assert_eq!(out, c);
        let out = subsample(&c, &v, 1.0, 7).unwrap();
        assert_eq!(out, c);
    }

    #[test]
    fn subsample_removal_rate_matches_formula() {
        // Word 0 has f = 0.4 and t = 0.1, so p = 1 - sqrt(1/4) = 0.5.
        let n = 100_000usize;
        let mut sentences = Vec::new();
        for i in 0..n {
            sentences.push(vec![0u32, 1 + (i % 3) as u32, 4 + (i % 2) as u32]);
        }
        // Pad to total = 2.5 n so that f(0) = 0.4.
        let total = (n as f64 * 2.5) as u64;
        let vocab = Vocabulary::from_counts(
            (0..6).map(|i| (format!("w{i}"), if i == 0 { n as u64 } else { 1 })).collect(),
            1,
            total,
        )
        .unwrap();
        assert!((vocab.frequency(0) - 0.4).abs() < 1e-12);
        let corpus = TokenizedCorpus::from_ids(sentences, vocab.hash_hex());
        let out = subsample(&corpus, &vocab, 0.1, 42).unwrap();
        let kept = out.sentences.iter().flatten().filter(|&&id| id == 0).count();
        let removal = 1.0 - kept as f64 / n as f64;
        assert!((0.48..=0.52).contains(&removal), "removal rate {removal}");
    }

    #[test]
    fn subsample_is_reproducible() {
        let s: Vec<Vec<String>> = (0..200)
            .map(|i| vec!["the".into(), format!("w{}", i % 7), "the".into()])
            .collect();
        let v = build_vocabulary(&s, 1).unwrap();
        let c = TokenizedCorpus::encode(&s, &v);
        let a = subsample(&c, &v, 0.01, 3).unwrap();
        let b = subsample(&c, &v, 0.01, 3).unwrap();
        assert_eq!(a, b);
        assert!(a.num_tokens() < c.num_tokens());
    }

    proptest! {
        #[test]
        fn tokenize_is_idempotent(s in "\\PC{0,80}") {
            let cfg = CleaningConfig::default();
            let once = tokenize(&s, &cfg);
            let twice = tokenize(&once.join(" "), &cfg);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn vocabulary_accounts_for_every_token(
            sentences in prop::collection::vec(prop::collection::vec("[a-e]{1,2}", 0..8), 1..10),
            min_count in 1u64..4,
        ) {
            prop_assume!(sentences.iter().any(|s| !s.is_empty()));
            let total: usize = sentences.iter().map(Vec::len).sum();
            let v = build_vocabulary(&sentences, min_count).unwrap();
            let retained: u64 = v.counts().iter().sum();
            prop_assert_eq!(retained + v.dropped_tokens(), total as u64);
            prop_assert!(v.counts().iter().all(|&c| c >= min_count));
            if min_count == 1 {
                let distinct: BTreeSet<&String> = sentences.iter().flatten().collect();
                prop_assert_eq!(v.len(), distinct.len());
            }
        }
    }
}
