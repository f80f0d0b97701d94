//! Sparse word-word co-occurrence counts over a sliding window.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textprep::TokenizedCorpus;

const MAGIC: &[u8; 8] = b"CHVCOOC1";
const CHUNK_SENTENCES: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    Uniform,
    InverseDistance,
}

impl Weighting {
    fn weight(self, distance: usize) -> f64 {
        match self {
            Weighting::Uniform => 1.0,
            Weighting::InverseDistance => 1.0 / distance as f64,
        }
    }

    fn tag(self) -> u8 {
        match self {
            Weighting::Uniform => 0,
            Weighting::InverseDistance => 1,
        }
    }
}

impl fmt::Display for Weighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Weighting::Uniform => "uniform",
            Weighting::InverseDistance => "inverse-distance",
        })
    }
}

impl FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "uniform" => Ok(Weighting::Uniform),
            "inverse-distance" | "inverse" => Ok(Weighting::InverseDistance),
            other => Err(Error::InvalidArgument(format!("unknown weighting {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoocConfig {
    pub window: usize,
    pub weighting: Weighting,
    /// Count only right-hand neighbors, so that `X[i][j]` counts `j` after `i`
    /// and the matrix is asymmetric.
    pub distinguish_sides: bool,
}

impl Default for CoocConfig {
    fn default() -> Self {
        CoocConfig {
            window: 8,
            weighting: Weighting::Uniform,
            distinguish_sides: false,
        }
    }
}

/// Sorted coordinate triples of positive raw (weighted) counts.
#[derive(Debug, Clone, PartialEq)]
pub struct CoocMatrix {
    pub vocab_size: usize,
    pub config: CoocConfig,
    entries: Vec<(u32, u32, f64)>,
}

impl CoocMatrix {
    pub fn from_triples(vocab_size: usize, config: CoocConfig, mut entries: Vec<(u32, u32, f64)>) -> Result<Self> {
        entries.sort_by_key(|&(i, j, _)| (i, j));
        for w in entries.windows(2) {
            if (w[0].0, w[0].1) == (w[1].0, w[1].1) {
                return Err(Error::InvalidArgument(format!("duplicate entry ({}, {})", w[0].0, w[0].1)));
            }
        }
        for &(i, j, x) in &entries {
            let id = i.max(j) as usize;
            if id >= vocab_size {
                return Err(Error::IdOutOfRange { id, size: vocab_size });
            }
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::InvalidArgument(format!("entry ({i}, {j}) has value {x}")));
            }
        }
        Ok(CoocMatrix {
            vocab_size,
            config,
            entries,
        })
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, i: u32, j: u32) -> f64 {
        self.entries
            .binary_search_by_key(&(i, j), |&(a, b, _)| (a, b))
            .map_or(0.0, |k| self.entries[k].2)
    }

    pub fn entries(&self) -> &[(u32, u32, f64)] {
        &self.entries
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.2).sum()
    }

    pub fn save_binary(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        w.write_all(MAGIC).map_err(io)?;
        w.write_all(&(self.vocab_size as u64).to_le_bytes()).map_err(io)?;
        w.write_all(&(self.config.window as u32).to_le_bytes()).map_err(io)?;
        // weighting, sides, values are raw counts
        w.write_all(&[self.config.weighting.tag(), self.config.distinguish_sides as u8, 1])
            .map_err(io)?;
        w.write_all(&(self.entries.len() as u64).to_le_bytes()).map_err(io)?;
        for &(i, j, x) in &self.entries {
            w.write_all(&i.to_le_bytes()).map_err(io)?;
            w.write_all(&j.to_le_bytes()).map_err(io)?;
            w.write_all(&x.to_le_bytes()).map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn save_tsv(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(
            w,
            "# vocab_size={} window={} weighting={} distinguish_sides={} values=raw",
            self.vocab_size, self.config.window, self.config.weighting, self.config.distinguish_sides
        )
        .map_err(io)?;
        for &(i, j, x) in &self.entries {
            writeln!(w, "{i}\t{j}\t{x:?}").map_err(io)?;
        }
        w.flush().map_err(io)
    }

    /// Writes TSV when the extension is `.tsv`, binary otherwise.
    pub fn save(&self, path: &Path) -> Result<()> {
        if path.extension().is_some_and(|e| e == "tsv") {
            self.save_tsv(path)
        } else {
            self.save_binary(path)
        }
    }

    /// Reads either format, detected from the leading bytes.
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        if bytes.starts_with(MAGIC) {
            Self::read_binary(&bytes[MAGIC.len()..])
        } else {
            Self::read_tsv(BufReader::new(&bytes[..]))
        }
    }

    fn read_binary(mut r: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::ModelFile(format!("co-occurrence file: {m}"));
        let mut u64b = [0u8; 8];
        let mut u32b = [0u8; 4];
        let mut flags = [0u8; 3];
        r.read_exact(&mut u64b).map_err(|_| bad("truncated header"))?;
        let vocab_size = u64::from_le_bytes(u64b) as usize;
        r.read_exact(&mut u32b).map_err(|_| bad("truncated header"))?;
        let window = u32::from_le_bytes(u32b) as usize;
        r.read_exact(&mut flags).map_err(|_| bad("truncated header"))?;
        let weighting = match flags[0] {
            0 => Weighting::Uniform,
            1 => Weighting::InverseDistance,
            _ => return Err(bad("unknown weighting")),
        };
        r.read_exact(&mut u64b).map_err(|_| bad("truncated header"))?;
        let nnz = u64::from_le_bytes(u64b) as usize;
        if r.len() != nnz * 16 {
            return Err(bad("entry count does not match file size"));
        }
        let entries = r
            .chunks_exact(16)
            .map(|c| {
                (
                    u32::from_le_bytes(c[0..4].try_into().expect("4 bytes")),
                    u32::from_le_bytes(c[4..8].try_into().expect("4 bytes")),
                    f64::from_le_bytes(c[8..16].try_into().expect("8 bytes")),
                )
            })
            .collect();
        let config = CoocConfig {
            window,
            weighting,
            distinguish_sides: flags[1] != 0,
        };
        CoocMatrix::from_triples(vocab_size, config, entries)
    }

    fn read_tsv(r: impl BufRead) -> Result<Self> {
        let mut vocab_size = None;
        let mut config = CoocConfig::default();
        let mut entries = Vec::new();
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            let bad = |message: String| Error::Format {
                what: "co-occurrence TSV",
                line: n + 1,
                message,
            };
            if let Some(header) = line.strip_prefix('#') {
                for kv in header.split_whitespace() {
                    let Some((k, v)) = kv.split_once('=') else { continue };
                    match k {
                        "vocab_size" => vocab_size = Some(v.parse().map_err(|_| bad(format!("bad {k}")))?),
                        "window" => config.window = v.parse().map_err(|_| bad(format!("bad {k}")))?,
                        "weighting" => config.weighting = v.parse()?,
                        "distinguish_sides" => {
                            config.distinguish_sides = v.parse().map_err(|_| bad(format!("bad {k}")))?
                        }
                        _ => {}
                    }
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 3 {
                return Err(bad("expected i<TAB>j<TAB>x".into()));
            }
            let parse_id = |s: &str| s.trim().parse::<u32>().map_err(|_| bad(format!("bad id {s:?}")));
            let x = f[2].trim().parse::<f64>().map_err(|_| bad(format!("bad value {:?}", f[2])))?;
            entries.push((parse_id(f[0])?, parse_id(f[1])?, x));
        }
        let vocab_size = vocab_size.ok_or(Error::Format {
            what: "co-occurrence TSV",
            line: 1,
            message: "missing vocab_size header".into(),
        })?;
        CoocMatrix::from_triples(vocab_size, config, entries)
    }
}

/// Nonzero entries sorted by `(i, j)`.
pub fn iterate_nonzero(matrix: &CoocMatrix) -> impl ExactSizeIterator<Item = (u32, u32, f64)> + '_ {
    matrix.entries.iter().copied()
}

fn accumulate(sentences: &[Vec<u32>], cfg: &CoocConfig) -> HashMap<(u32, u32), f64> {
    let mut acc: HashMap<(u32, u32), f64> = HashMap::new();
    for s in sentences {
        for (c, &center) in s.iter().enumerate() {
            for d in 1..=cfg.window {
                let Some(&right) = s.get(c + d) else { break };
                let w = cfg.weighting.weight(d);
                *acc.entry((center, right)).or_insert(0.0) += w;
                if !cfg.distinguish_sides {
                    *acc.entry((right, center)).or_insert(0.0) += w;
                }
            }
        }
    }
    acc
}

/// Counts co-occurrences within each sentence. Sentences are processed in
/// fixed-size chunks in parallel and merged in chunk order, so results are
/// bitwise reproducible.
pub fn build_cooccurrence(corpus: &TokenizedCorpus, vocab_size: usize, cfg: &CoocConfig) -> Result<CoocMatrix> {
    if cfg.window < 1 {
        return Err(Error::InvalidArgument("window half-size must be at least 1".into()));
    }
    corpus.check_ids(vocab_size)?;
    let partials: Vec<HashMap<(u32, u32), f64>> = corpus
        .sentences
        .par_chunks(CHUNK_SENTENCES)
        .map(|chunk| accumulate(chunk, cfg))
        .collect();
    let mut iter = partials.into_iter();
    let mut total = iter.next().unwrap_or_default();
    for part in iter {
        let mut keys: Vec<_> = part.into_iter().collect();
        keys.sort_unstable_by_key(|e| e.0);
        for (k, x) in keys {
            *total.entry(k).or_insert(0.0) += x;
        }
    }
    let entries: Vec<(u32, u32, f64)> = total.into_iter().map(|((i, j), x)| (i, j, x)).collect();
    CoocMatrix::from_triples(vocab_size, *cfg, entries)
}
