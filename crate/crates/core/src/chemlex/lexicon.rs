use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textprep::is_dash;

const SEED_LEXICON: &str = include_str!("../../data/seed_lexicon.tsv");

/// Short English words that collide with chemical abbreviations or element
/// symbols. Surface forms equal to one of these are never matched.
pub const DEFAULT_STOP_CHEMICALS: &[&str] = &[
    "am", "an", "and", "as", "at", "be", "by", "ca", "co", "he", "in", "is", "it", "mg", "no",
    "or", "so", "us",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexEntry {
    pub canonical_name: String,
    pub synonyms: Vec<String>,
    pub smiles: Option<String>,
    pub energetic_score: Option<f64>,
    pub energetic_label: Option<bool>,
}

impl LexEntry {
    pub fn new(name: impl Into<String>) -> Self {
        LexEntry {
            canonical_name: name.into(),
            synonyms: Vec::new(),
            smiles: None,
            energetic_score: None,
            energetic_label: None,
        }
    }

    pub fn with_synonyms<S: Into<String>>(mut self, synonyms: impl IntoIterator<Item = S>) -> Self {
        self.synonyms = synonyms.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_smiles(mut self, smiles: impl Into<String>) -> Self {
        self.smiles = Some(smiles.into());
        self
    }

    pub fn with_label(mut self, label: bool) -> Self {
        self.energetic_label = Some(label);
        self
    }

    /// Canonical name followed by the synonyms.
    pub fn names(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.canonical_name.as_str()).chain(self.synonyms.iter().map(String::as_str))
    }
}

/// Lowercase form with whitespace and dashes removed, the shape a name takes
/// after merging and tokenization.
pub fn merged_form(name: &str) -> String {
    name.chars()
        .filter(|c| !c.is_whitespace() && !is_dash(*c))
        .flat_map(char::to_lowercase)
        .collect()
}

/// Lowercase form with runs of whitespace collapsed and dash variants unified.
pub(crate) fn surface_key(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    for word in name.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(
            word.chars()
                .map(|c| if is_dash(c) { '-' } else { c })
                .flat_map(char::to_lowercase),
        );
    }
    out
}

/// Curated chemical names. Canonical names are unique ignoring case, and each
/// synonym belongs to exactly one entry.
#[derive(Debug, Clone)]
pub struct ChemLexicon {
    entries: Vec<LexEntry>,
    by_key: HashMap<String, usize>,
    stop_names: BTreeSet<String>,
}

impl ChemLexicon {
    pub fn new(entries: Vec<LexEntry>) -> Result<Self> {
        let mut by_key: HashMap<String, usize> = HashMap::new();
        for (idx, entry) in entries.iter().enumerate() {
            if entry.canonical_name.trim().is_empty() {
                return Err(Error::InvalidArgument(format!("lexicon entry {idx} has no name")));
            }
            for name in entry.names() {
                for key in [surface_key(name), merged_form(name)] {
                    if key.is_empty() {
                        continue;
                    }
                    match by_key.get(&key) {
                        Some(&other) if other != idx => {
                            return Err(Error::InvalidArgument(format!(
                                "name {name:?} of {:?} collides with {:?}",
                                entry.canonical_name, entries[other].canonical_name
                            )))
                        }
                        _ => {
                            by_key.insert(key, idx);
                        }
                    }
                }
            }
        }
        Ok(ChemLexicon {
            entries,
            by_key,
            stop_names: DEFAULT_STOP_CHEMICALS.iter().map(|s| s.to_string()).collect(),
        })
    }

    /// The bundled seed list of energetics-domain chemicals.
    pub fn seed() -> Self {
        Self::parse_tsv(SEED_LEXICON).expect("bundled lexicon is valid")
    }

    pub fn entries(&self) -> &[LexEntry] {
        &self.entries
    }

    pub fn entry(&self, id: usize) -> &LexEntry {
        &self.entries[id]
    }

    pub fn entries_mut(&mut self) -> &mut [LexEntry] {
        &mut self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn stop_names(&self) -> &BTreeSet<String> {
        &self.stop_names
    }

    pub fn set_stop_names<S: Into<String>>(&mut self, names: impl IntoIterator<Item = S>) {
        self.stop_names = names.into_iter().map(|s| s.into().to_lowercase()).collect();
    }

    pub fn is_stop_name(&self, name: &str) -> bool {
        self.stop_names.contains(&surface_key(name))
    }

    /// Case-insensitive lookup by any name, synonym or merged form.
    pub fn lookup(&self, name: &str) -> Option<usize> {
        self.by_key
            .get(&surface_key(name))
            .or_else(|| self.by_key.get(&merged_form(name)))
            .copied()
    }

    /// Single-token forms under which an entry can appear in a tokenized corpus.
    pub fn token_forms(&self, id: usize) -> BTreeSet<String> {
        self.entries[id]
            .names()
            .filter(|n| !self.is_stop_name(n))
            .map(merged_form)
            .filter(|m| is_single_token(m))
            .collect()
    }

    /// Maps every single-token form to its entry.
    pub fn token_index(&self) -> HashMap<String, usize> {
        let mut index = HashMap::new();
        for id in 0..self.entries.len() {
            for form in self.token_forms(id) {
                index.insert(form, id);
            }
        }
        index
    }

    pub fn is_energetic(&self, id: usize) -> bool {
        self.entries[id].energetic_label == Some(true)
    }

    pub fn parse_tsv(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |message: String| Error::Format {
                what: "lexicon",
                line: n + 1,
                message,
            };
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.is_empty() || fields[0].trim().is_empty() {
                return Err(bad("missing canonical name".into()));
            }
            let mut entry = LexEntry::new(fields[0].trim());
            if let Some(syn) = fields.get(1) {
                entry.synonyms = syn
                    .split(';')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::to_owned)
                    .collect();
            }
            entry.smiles = fields
                .get(2)
                .map(|s| s.trim())
                .filter(|s| !s.is_empty())
                .map(str::to_owned);
            entry.energetic_label = match fields.get(3).map(|s| s.trim().to_ascii_lowercase()) {
                None => None,
                Some(l) => parse_label(&l).map_err(bad)?,
            };
            entries.push(entry);
        }
        ChemLexicon::new(entries)
    }

    pub fn load_tsv(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_tsv(&text)
    }

    pub fn save_tsv(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        writeln!(out, "# canonical_name\tsynonyms\tsmiles\tlabel")?;
        for e in &self.entries {
            let label = match e.energetic_label {
                Some(true) => "1",
                Some(false) => "0",
                None => "",
            };
            writeln!(
                out,
                "{}\t{}\t{}\t{}",
                e.canonical_name,
                e.synonyms.join(";"),
                e.smiles.as_deref().unwrap_or(""),
                label
            )?;
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Parses a label cell: `1/0`, `true/false`, `energetic/non-energetic`, or empty.
pub fn parse_label(cell: &str) -> std::result::Result<Option<bool>, String> {
    match cell.trim().to_ascii_lowercase().as_str() {
        "" => Ok(None),
        "1" | "true" | "yes" | "energetic" | "e" => Ok(Some(true)),
        "0" | "false" | "no" | "non-energetic" | "nonenergetic" | "n" => Ok(Some(false)),
        other => Err(format!("bad label {other:?}")),
    }
}

fn is_single_token(s: &str) -> bool {
    let chars: Vec<char> = s.chars().collect();
    chars.len() >= 2
        && chars.iter().enumerate().all(|(i, &c)| {
            c.is_alphanumeric()
                || (c == ','
                    && i > 0
                    && chars[i - 1].is_ascii_digit()
                    && chars.get(i + 1).is_some_and(|n| n.is_ascii_digit()))
        })
}
