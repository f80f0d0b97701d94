//! Dense matrices and the trained embedding model shared by both trainers.

use std::collections::HashMap;
use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textprep::vocab_hash;

const MAGIC: &[u8; 8] = b"CHVEMB01";

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    actual: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::DimensionMismatch {
                expected: self.data.len(),
                actual: other.data.len(),
            });
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Word2vec,
    Glove,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Word2vec => "word2vec",
            Algorithm::Glove => "glove",
        }
    }
}

/// Which rows answer similarity queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryVectors {
    /// Word (center) vectors only.
    Word,
    /// Sum of word and context vectors.
    Combined,
}

/// Trained word and context vectors with their vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    pub algorithm: Algorithm,
    pub query: QueryVectors,
    pub vocab_ref: String,
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    pub word: Matrix,
    pub context: Matrix,
    pub word_bias: Option<Vec<f64>>,
    pub context_bias: Option<Vec<f64>>,
}

impl EmbeddingModel {
    pub fn new(algorithm: Algorithm, tokens: Vec<String>, word: Matrix, context: Matrix) -> Result<Self> {
        if word.rows() != tokens.len() || context.rows() != tokens.len() {
            return Err(Error::DimensionMismatch {
                expected: tokens.len(),
                actual: word.rows().max(context.rows()),
            });
        }
        if word.cols() != context.cols() {
            return Err(Error::DimensionMismatch {
                expected: word.cols(),
                actual: context.cols(),
            });
        }
        if word.cols() == 0 {
            return Err(Error::InvalidArgument("embedding dimension must be positive".into()));
        }
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Ok(EmbeddingModel {
            algorithm,
            query: match algorithm {
                Algorithm::Word2vec => QueryVectors::Word,
                Algorithm::Glove => QueryVectors::Combined,
            },
            vocab_ref: vocab_hash(&tokens),
            tokens,
            index,
            word,
            context,
            word_bias: None,
            context_bias: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.word.cols()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn check_id(&self, id: u32) -> Result<()> {
        if (id as usize) < self.tokens.len() {
            Ok(())
        } else {
            Err(Error::IdOutOfRange {
                id: id as usize,
                size: self.tokens.len(),
            })
        }
    }

    pub fn is_finite(&self) -> bool {
        self.word.is_finite()
            && self.context.is_finite()
            && self.word_bias.iter().chain(&self.context_bias).flatten().all(|x| x.is_finite())
    }

    /// Vectors used for similarity queries, selected by `self.query`.
    pub fn query_vectors(&self) -> Matrix {
        match self.query {
            QueryVectors::Word => self.word.clone(),
            QueryVectors::Combined => self.word.add(&self.context).expect("shapes checked at construction"),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        let header = serde_json::json!({
            "algorithm": self.algorithm,
            "query": self.query,
            "vocab_size": self.len(),
            "dim": self.dim(),
            "vocab_hash": self.vocab_ref,
            "biases": self.word_bias.is_some(),
        })
        .to_string();
        w.write_all(MAGIC).map_err(io)?;
        w.write_all(&(header.len() as u64).to_le_bytes()).map_err(io)?;
        w.write_all(header.as_bytes()).map_err(io)?;
        for t in &self.tokens {
            w.write_all(t.as_bytes()).map_err(io)?;
            w.write_all(b"\n").map_err(io)?;
        }
        let mut floats = |xs: &[f64]| -> Result<()> {
            for x in xs {
                w.write_all(&x.to_le_bytes()).map_err(io)?;
            }
            Ok(())
        };
        floats(self.word.data())?;
        floats(self.context.data())?;
        if let (Some(a), Some(b)) = (&self.word_bias, &self.context_bias) {
            floats(a)?;
            floats(b)?;
        }
        w.flush().map_err(io)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let bad = |m: &str| Error::ModelFile(format!("{}: {m}", path.display()));
        let mut r = bytes.strip_prefix(MAGIC.as_slice()).ok_or_else(|| bad("not an embedding model"))?;
        let mut len = [0u8; 8];
        r.read_exact(&mut len).map_err(|_| bad("truncated"))?;
        let len = u64::from_le_bytes(len) as usize;
        if r.len() < len {
            return Err(bad("truncated header"));
        }
        #[derive(Deserialize)]
        struct Header {
            algorithm: Algorithm,
            query: QueryVectors,
            vocab_size: usize,
            dim: usize,
            vocab_hash: String,
            biases: bool,
        }
        let header: Header = serde_json::from_slice(&r[..len])?;
        r = &r[len..];
        let mut tokens = Vec::with_capacity(header.vocab_size);
        for _ in 0..header.vocab_size {
            let end = r.iter().position(|&b| b == b'\n').ok_or_else(|| bad("truncated vocabulary"))?;
            let tok = std::str::from_utf8(&r[..end]).map_err(|_| bad("vocabulary is not UTF-8"))?;
            tokens.push(tok.to_owned());
            r = &r[end + 1..];
        }
        let n = header.vocab_size * header.dim;
        let expect = 8 * (2 * n + if header.biases { 2 * header.vocab_size } else { 0 });
        if r.len() != expect {
            return Err(bad("parameter block has the wrong size"));
        }
        let mut floats = r.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
        let mut take = |k: usize| floats.by_ref().take(k).collect::<Vec<f64>>();
        let word = Matrix::from_vec(header.vocab_size, header.dim, take(n))?;
        let context = Matrix::from_vec(header.vocab_size, header.dim, take(n))?;
        let mut model = EmbeddingModel::new(header.algorithm, tokens, word, context)?;
        if model.vocab_ref != header.vocab_hash {
            return Err(bad("vocabulary hash mismatch"));
        }
        model.query = header.query;
        if header.biases {
            model.word_bias = Some(take(header.vocab_size));
            model.context_bias = Some(take(header.vocab_size));
        }
        Ok(model)
    }

    /// Plain text: a `V D` header line, then one word and its query vector per line.
    pub fn save_text(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        let q = self.query_vectors();
        writeln!(w, "{} {}", self.len(), self.dim()).map_err(io)?;
        for (i, t) in self.tokens.iter().enumerate() {
            write!(w, "{t}").map_err(io)?;
            for x in q.row(i) {
                write!(w, " {x}").map_err(io)?;
            }
            writeln!(w).map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> EmbeddingModel {
        let w = Matrix::from_rows(&[vec![1.0, 0.5], vec![-0.25, 2.0]]).unwrap();
        let c = Matrix::from_rows(&[vec![0.0, 1.0], vec![3.0, -1.0]]).unwrap();
        EmbeddingModel::new(Algorithm::Glove, vec!["a".into(), "b".into()], w, c).unwrap()
    }

    #[test]
    fn binary_round_trip() {
        let mut m = toy();
        m.word_bias = Some(vec![0.1, 0.2]);
        m.context_bias = Some(vec![-0.1, 0.0]);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.bin");
        m.save(&p).unwrap();
        assert_eq!(EmbeddingModel::load(&p).unwrap(), m);
    }

    #[test]
    fn combined_query_vectors() {
        let m = toy();
        assert_eq!(m.query_vectors().row(1), &[2.75, 1.0]);
    }

    #[test]
    fn text_export() {
        let m = toy();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.txt");
        m.save_text(&p).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().next(), Some("2 2"));
        assert_eq!(text.lines().nth(1), Some("a 1 1.5"));
    }

    #[test]
    fn shape_checks() {
        let w = Matrix::zeros(2, 3);
        let c = Matrix::zeros(2, 2);
        assert!(EmbeddingModel::new(Algorithm::Word2vec, vec!["a".into(), "b".into()], w, c).is_err());
        assert!(Matrix::from_vec(2, 2, vec![0.0; 3]).is_err());
    }
}
