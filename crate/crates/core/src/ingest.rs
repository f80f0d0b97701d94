//! Document acquisition: patent XML bundles, plain-text files and the
//! JSON-lines document store.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use quick_xml::events::Event;
use quick_xml::Reader;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Metadata key recording which XML sections were concatenated into the body.
pub const TEXT_FIELDS_KEY: &str = "text_fields";
const TEXT_FIELDS: &str = "abstract+description";

const PATENT_ROOTS: &[&str] = &[
    "us-patent-grant",
    "us-patent-application",
    "patent-document",
    "patent",
];
const BODY_SECTIONS: &[&str] = &["abstract", "description"];
const SKIPPED_SUBTREES: &[&str] = &[
    "us-field-of-classification-search",
    "field-of-search",
    "references-cited",
    "us-references-cited",
    "tables",
    "table",
    "maths",
];
/// Elements whose whole text content is a classification code.
const CODE_ELEMENTS: &[&str] = &[
    "main-classification",
    "further-classification",
    "classification",
    "classification-cpc-text",
    "classification-ipcr-text",
    "classification-symbol",
];
/// Elements holding a code split into section/class/subclass/group parts.
const STRUCTURED_CODES: &[&str] = &["classification-cpc", "classification-ipcr"];
const CODE_PARTS: &[&str] = &["section", "class", "subclass", "main-group", "subgroup"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatentDoc {
    pub patent_id: String,
    pub classifications: Vec<String>,
    pub title: String,
    pub body_text: String,
}

impl PatentDoc {
    /// Converts the patent into a store document, recording provenance in `meta`.
    pub fn into_document(self) -> Document {
        let mut meta = BTreeMap::new();
        meta.insert("classification".to_owned(), self.classifications.join(","));
        meta.insert(TEXT_FIELDS_KEY.to_owned(), TEXT_FIELDS.to_owned());
        if !self.title.is_empty() {
            meta.insert("title".to_owned(), self.title.clone());
        }
        let text = match (self.title.is_empty(), self.body_text.is_empty()) {
            (false, false) => format!("{}. {}", self.title, self.body_text),
            (false, true) => self.title,
            _ => self.body_text,
        };
        Document {
            doc_id: self.patent_id,
            source_kind: SourceKind::Patent,
            text,
            meta,
        }
    }
}

/// A problem with one patent inside a bulk file. Parsing continues past it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PatentParseError {
    /// Index of the XML document within the bulk file (split on declarations).
    pub chunk: usize,
    /// Byte offset of the failure within the whole input.
    pub offset: u64,
    pub message: String,
}

impl fmt::Display for PatentParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "document {} at byte {}: {}",
            self.chunk, self.offset, self.message
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PatentParse {
    pub patents: Vec<PatentDoc>,
    pub errors: Vec<PatentParseError>,
}

/// Splits a bulk file into independent XML documents at each `<?xml` declaration.
///
/// Returns `(offset, bytes)` pairs. Content before the first declaration is kept
/// as its own chunk when it is not blank.
pub fn split_xml_documents(bytes: &[u8]) -> Vec<(usize, &[u8])> {
    const DECL: &[u8] = b"<?xml";
    let mut starts: Vec<usize> = bytes
        .windows(DECL.len())
        .enumerate()
        .filter(|(_, w)| *w == DECL)
        .map(|(i, _)| i)
        .collect();
    if starts.first() != Some(&0) {
        starts.insert(0, 0);
    }
    let mut out = Vec::with_capacity(starts.len());
    for (k, &start) in starts.iter().enumerate() {
        let end = starts.get(k + 1).copied().unwrap_or(bytes.len());
        let chunk = &bytes[start..end];
        if chunk.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        out.push((start, chunk));
    }
    out
}

/// Parses a single patent XML document or a bulk concatenation of them.
///
/// Errors are collected per document; a failure in one document never stops
/// the others from being parsed. When no patent could be parsed at all, a
/// summary error is appended.
pub fn parse_patent_xml(bytes: &[u8]) -> PatentParse {
    let mut result = PatentParse::default();
    for (chunk_idx, (offset, chunk)) in split_xml_documents(bytes).into_iter().enumerate() {
        parse_chunk(chunk_idx, offset as u64, chunk, &mut result);
    }
    if result.patents.is_empty() {
        result.errors.push(PatentParseError {
            chunk: 0,
            offset: 0,
            message: format!(
                "no parseable patents ({} document error(s))",
                result.errors.len()
            ),
        });
    }
    result
}

#[derive(Default)]
struct PatentBuilder {
    root_id: Option<String>,
    publication_number: Option<String>,
    any_number: Option<String>,
    codes: Vec<String>,
    title: Vec<String>,
    body: Vec<String>,
    glue_next: bool,
}

impl PatentBuilder {
    fn finish(self) -> std::result::Result<PatentDoc, String> {
        let patent_id = self
            .publication_number
            .or(self.root_id)
            .or(self.any_number)
            .map(|s| s.trim().to_owned())
            .filter(|s| !s.is_empty())
            .ok_or_else(|| "patent has no document number".to_owned())?;
        let mut seen = HashSet::new();
        let classifications = self
            .codes
            .into_iter()
            .filter(|c| !c.is_empty() && seen.insert(c.clone()))
            .collect();
        Ok(PatentDoc {
            patent_id,
            classifications,
            title: join_fragments(&self.title),
            body_text: join_fragments(&self.body),
        })
    }
}

fn join_fragments(parts: &[String]) -> String {
    let mut out = String::new();
    for word in parts.iter().flat_map(|p| p.split_whitespace()) {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Uppercases a classification code and strips all whitespace.
pub fn normalize_code(code: &str) -> String {
    code.chars()
        .filter(|c| !c.is_whitespace())
        .flat_map(char::to_uppercase)
        .collect()
}

fn parse_chunk(chunk_idx: usize, base: u64, chunk: &[u8], out: &mut PatentParse) {
    let mut reader = Reader::from_reader(chunk);
    reader.config_mut().check_end_names = true;

    let mut stack: Vec<String> = Vec::new();
    let mut current: Option<(usize, PatentBuilder)> = None;
    // Text accumulated for the innermost open code element.
    let mut code_text: Option<(usize, String)> = None;
    let mut structured: Option<(usize, BTreeMap<String, String>)> = None;

    let record = |out: &mut PatentParse, offset: u64, message: String| {
        out.errors.push(PatentParseError {
            chunk: chunk_idx,
            offset: base + offset,
            message,
        });
    };

    loop {
        let event = match reader.read_event() {
            Ok(ev) => ev,
            Err(e) => {
                record(out, reader.error_position(), e.to_string());
                return;
            }
        };
        match event {
            Event::Start(e) => {
                let name = String::from_utf8_lossy(e.local_name().as_ref()).into_owned();
                if current.is_none() && PATENT_ROOTS.contains(&name.as_str()) {
                    let mut builder = PatentBuilder::default();
                    for attr in e.attributes().flatten() {
                        let key = attr.key.local_name();
                        if key.as_ref() == b"file" || key.as_ref() == b"id" {
                            if let Ok(v) = attr.unescape_value() {
                                let v = v.trim();
                                let v = v.split('-').next().unwrap_or(v);
                                let v = v.trim_end_matches(".XML").trim_end_matches(".xml");
                                builder.root_id = Some(v.to_owned());
                            }
                        }
                    }
                    current = Some((stack.len(), builder));
                } else if current.is_some() {
                    if STRUCTURED_CODES.contains(&name.as_str()) && structured.is_none() {
                        structured = Some((stack.len(), BTreeMap::new()));
                    } else if (CODE_ELEMENTS.contains(&name.as_str())
                        || (structured.is_some() && CODE_PARTS.contains(&name.as_str())))
                        && code_text.is_none()
                    {
                        code_text = Some((stack.len(), String::new()));
                    }
                }
                stack.push(name);
            }
            Event::Empty(_) => {}
            Event::End(_) => {
                let Some(name) = stack.pop() else {
                    continue;
                };
                let depth = stack.len();
                if let Some((d, text)) = code_text.take() {
                    if d == depth {
                        if let Some((_, parts)) = structured.as_mut() {
                            parts.insert(name.clone(), text.trim().to_owned());
                        } else if let Some((_, b)) = current.as_mut() {
                            if !in_skipped(&stack) {
                                b.codes.push(normalize_code(&text));
                            }
                        }
                    } else {
                        code_text = Some((d, text));
                    }
                }
                if structured.as_ref().is_some_and(|(d, _)| *d == depth) {
                    let (_, parts) = structured.take().expect("checked above");
                    if let Some((_, b)) = current.as_mut() {
                        if !in_skipped(&stack) {
                            b.codes.push(structured_code(&parts));
                        }
                    }
                }
                if current.as_ref().is_some_and(|(d, _)| *d == depth) {
                    let (_, builder) = current.take().expect("checked above");
                    match builder.finish() {
                        Ok(doc) => out.patents.push(doc),
                        Err(msg) => record(out, reader.buffer_position(), msg),
                    }
                }
            }
            Event::Text(t) => {
                let text = match t.xml_content() {
                    Ok(s) => s.into_owned(),
                    Err(e) => {
                        record(out, reader.buffer_position(), e.to_string());
                        String::new()
                    }
                };
                route_text(&stack, &text, &mut current, &mut code_text);
            }
            Event::CData(t) => {
                let text = String::from_utf8_lossy(&t.into_inner()).into_owned();
                route_text(&stack, &text, &mut current, &mut code_text);
            }
            Event::GeneralRef(r) => {
                let resolved = match r.resolve_char_ref() {
                    Ok(Some(c)) => Some(c.to_string()),
                    _ => r.decode().ok().and_then(|name| {
                        quick_xml::escape::resolve_predefined_entity(&name).map(str::to_owned)
                    }),
                };
                if let Some(text) = resolved {
                    route_text_glued(&stack, &text, &mut current, &mut code_text);
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }

    if current.is_some() {
        record(
            out,
            chunk.len() as u64,
            format!(
                "unexpected end of input inside <{}>",
                stack.last().map(String::as_str).unwrap_or("?")
            ),
        );
    }
}

fn structured_code(parts: &BTreeMap<String, String>) -> String {
    let get = |k: &str| parts.get(k).map(String::as_str).unwrap_or("");
    let mut code = format!("{}{}{}", get("section"), get("class"), get("subclass"));
    let group = get("main-group");
    if !group.is_empty() {
        code.push_str(group);
        let sub = get("subgroup");
        if !sub.is_empty() {
            code.push('/');
            code.push_str(sub);
        }
    }
    normalize_code(&code)
}

fn in_skipped(stack: &[String]) -> bool {
    stack.iter().any(|n| SKIPPED_SUBTREES.contains(&n.as_str()))
}

fn route_text(
    stack: &[String],
    text: &str,
    current: &mut Option<(usize, PatentBuilder)>,
    code_text: &mut Option<(usize, String)>,
) {
    if let Some((_, buf)) = code_text.as_mut() {
        buf.push_str(text);
        return;
    }
    let Some((_, builder)) = current.as_mut() else {
        return;
    };
    if in_skipped(stack) {
        return;
    }
    let name = stack.last().map(String::as_str).unwrap_or("");
    if name == "doc-number" {
        let in_publication = stack.iter().any(|n| n == "publication-reference");
        if in_publication && builder.publication_number.is_none() {
            builder.publication_number = Some(text.trim().to_owned());
        } else if builder.any_number.is_none() {
            builder.any_number = Some(text.trim().to_owned());
        }
    } else if stack.iter().any(|n| n == "invention-title") {
        push_fragment(&mut builder.title, text, builder.glue_next);
    } else if stack.iter().any(|n| BODY_SECTIONS.contains(&n.as_str())) {
        push_fragment(&mut builder.body, text, builder.glue_next);
    }
    builder.glue_next = false;
}

fn push_fragment(target: &mut Vec<String>, text: &str, glue: bool) {
    match target.last_mut() {
        Some(last) if glue => last.push_str(text),
        _ => target.push(text.to_owned()),
    }
}

/// Entity references continue the preceding text fragment instead of starting a new one.
fn route_text_glued(
    stack: &[String],
    text: &str,
    current: &mut Option<(usize, PatentBuilder)>,
    code_text: &mut Option<(usize, String)>,
) {
    if code_text.is_some() {
        return route_text(stack, text, current, code_text);
    }
    let Some((_, builder)) = current.as_mut() else {
        return;
    };
    if in_skipped(stack) {
        return;
    }
    let target = if stack.iter().any(|n| n == "invention-title") {
        &mut builder.title
    } else if stack.iter().any(|n| BODY_SECTIONS.contains(&n.as_str())) {
        &mut builder.body
    } else {
        return;
    };
    push_fragment(target, text, true);
    builder.glue_next = true;
}

/// True iff any classification of `doc` starts with any of the `wanted` prefixes.
pub fn filter_by_classification<S: AsRef<str>>(doc: &PatentDoc, wanted: &[S]) -> bool {
    doc.classifications.iter().any(|code| {
        wanted
            .iter()
            .any(|prefix| code.starts_with(&normalize_code(prefix.as_ref())))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Patent,
    Proceedings,
    Other,
}

impl SourceKind {
    pub const ALL: [SourceKind; 3] = [SourceKind::Patent, SourceKind::Proceedings, SourceKind::Other];

    pub fn as_str(self) -> &'static str {
        match self {
            SourceKind::Patent => "patent",
            SourceKind::Proceedings => "proceedings",
            SourceKind::Other => "other",
        }
    }

    pub fn parse(s: &str) -> Option<SourceKind> {
        match s.trim().to_ascii_lowercase().as_str() {
            "patent" | "patents" => Some(SourceKind::Patent),
            "proceedings" | "proceeding" => Some(SourceKind::Proceedings),
            "other" => Some(SourceKind::Other),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub source_kind: SourceKind,
    pub text: String,
    #[serde(default)]
    pub meta: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadedText {
    pub document: Document,
    /// Number of invalid UTF-8 sequences replaced by U+FFFD.
    pub replacements: usize,
}

/// Loads a UTF-8 text file as a document.
///
/// `meta` may carry `doc_id` and `source_kind`; otherwise the file name is the
/// id and the kind is `other`.
pub fn load_plain_text(path: &Path, meta: &BTreeMap<String, String>) -> Result<LoadedText> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut text = String::with_capacity(bytes.len());
    let mut replacements = 0;
    for chunk in bytes.utf8_chunks() {
        text.push_str(chunk.valid());
        if !chunk.invalid().is_empty() {
            text.push(char::REPLACEMENT_CHARACTER);
            replacements += 1;
        }
    }
    if text.trim().is_empty() {
        return Err(Error::EmptyDocument(path.display().to_string()));
    }
    let mut meta = meta.clone();
    let doc_id = meta.remove("doc_id").unwrap_or_else(|| {
        path.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string())
    });
    let source_kind = meta
        .remove("source_kind")
        .and_then(|k| SourceKind::parse(&k))
        .unwrap_or(SourceKind::Other);
    Ok(LoadedText {
        document: Document {
            doc_id,
            source_kind,
            text,
            meta,
        },
        replacements,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub per_kind: BTreeMap<SourceKind, usize>,
    pub total_chars: usize,
    pub total_documents: usize,
}

/// Append-only collection of documents with unique ids.
#[derive(Debug, Clone, Default)]
pub struct DocumentStore {
    documents: Vec<Document>,
    ids: HashSet<String>,
}

impl DocumentStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn append(&mut self, doc: Document) -> Result<()> {
        if doc.text.trim().is_empty() {
            return Err(Error::EmptyDocument(doc.doc_id));
        }
        if doc.doc_id.is_empty() {
            return Err(Error::InvalidArgument("document id is empty".into()));
        }
        if !self.ids.insert(doc.doc_id.clone()) {
            return Err(Error::DuplicateDocument(doc.doc_id));
        }
        self.documents.push(doc);
        Ok(())
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn contains(&self, doc_id: &str) -> bool {
        self.ids.contains(doc_id)
    }

    pub fn manifest(&self) -> BTreeMap<SourceKind, usize> {
        corpus_stats(self).per_kind
    }

    /// Path of the manifest written next to a store file.
    pub fn manifest_path(store_path: &Path) -> PathBuf {
        store_path.with_extension("manifest.json")
    }

    /// Writes the store as JSON lines plus a manifest next to it.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for doc in &self.documents {
            serde_json::to_writer(&mut w, doc)?;
            w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;

        let manifest_path = Self::manifest_path(path);
        let stats = corpus_stats(self);
        let json = serde_json::to_string_pretty(&stats)?;
        fs::write(&manifest_path, json + "\n").map_err(|e| Error::io(&manifest_path, e))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut store = DocumentStore::new();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let doc: Document = serde_json::from_str(&line).map_err(|e| Error::Format {
                what: "document store",
                line: n + 1,
                message: e.to_string(),
            })?;
            store.append(doc)?;
        }
        Ok(store)
    }
}

pub fn corpus_stats(store: &DocumentStore) -> CorpusStats {
    let mut per_kind: BTreeMap<SourceKind, usize> =
        SourceKind::ALL.iter().map(|&k| (k, 0)).collect();
    let mut total_chars = 0;
    for doc in store.documents() {
        *per_kind.entry(doc.source_kind).or_default() += 1;
        total_chars += doc.text.chars().count();
    }
    CorpusStats {
        per_kind,
        total_chars,
        total_documents: store.len(),
    }
}

pub type FileParseError = (PathBuf, PatentParseError);

/// Reads every `*.xml` file of a directory (sorted by name), keeping the
/// patents whose classification matches one of `classes`.
pub fn ingest_patent_dir<S: AsRef<str>>(
    dir: &Path,
    classes: &[S],
) -> Result<(Vec<PatentDoc>, Vec<FileParseError>)> {
    let mut kept = Vec::new();
    let mut errors = Vec::new();
    for path in sorted_files(dir, &["xml"])? {
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let parsed = parse_patent_xml(&bytes);
        errors.extend(parsed.errors.into_iter().map(|e| (path.clone(), e)));
        kept.extend(
            parsed
                .patents
                .into_iter()
                .filter(|p| filter_by_classification(p, classes)),
        );
    }
    Ok((kept, errors))
}

/// Lists the regular files of `dir` with one of the given extensions, sorted by path.
pub fn sorted_files(dir: &Path, extensions: &[&str]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let matches = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| extensions.iter().any(|x| x.eq_ignore_ascii_case(e)));
        if path.is_file() && matches {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Distinct classification codes across a set of patents.
pub fn classification_codes(patents: &[PatentDoc]) -> BTreeSet<String> {
    patents
        .iter()
        .flat_map(|p| p.classifications.iter().cloned())
        .collect()
}
