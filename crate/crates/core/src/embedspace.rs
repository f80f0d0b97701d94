//! Queries over trained vectors: similarity, filtered rankings, group
//! similarity, analogies, PCA and hubness.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chemlex::ChemLexicon;
use crate::embedding::{dot, EmbeddingModel, Matrix};
use crate::error::{Error, Result};

const APPLICATION_WORDS: &str = include_str!("../data/application_words.txt");

/// The bundled list of 80 application words.
pub fn default_application_words() -> Vec<String> {
    parse_word_list(APPLICATION_WORDS)
}

/// One word per line; blank lines and `#` comments are skipped.
pub fn parse_word_list(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

pub fn euclidean(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
}

/// Query vectors with cached norms and a token index.
#[derive(Debug, Clone)]
pub struct EmbeddingSpace {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    vectors: Matrix,
    norms: Vec<f64>,
}

impl EmbeddingSpace {
    pub fn new(model: &EmbeddingModel) -> Self {
        Self::from_vectors(model.tokens().to_vec(), model.query_vectors()).expect("model shapes are consistent")
    }

    pub fn from_vectors(tokens: Vec<String>, vectors: Matrix) -> Result<Self> {
        if tokens.len() != vectors.rows() {
            return Err(Error::DimensionMismatch {
                expected: tokens.len(),
                actual: vectors.rows(),
            });
        }
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        let norms = (0..vectors.rows()).map(|i| norm(vectors.row(i))).collect();
        Ok(EmbeddingSpace {
            tokens,
            index,
            vectors,
            norms,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn vector(&self, id: u32) -> &[f64] {
        self.vectors.row(id as usize)
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    /// Looks a token up, failing with the closest spellings when absent.
    pub fn require(&self, token: &str) -> Result<u32> {
        self.id(token).ok_or_else(|| Error::OutOfVocabulary {
            token: token.to_owned(),
            suggestions: self.suggestions(token, 3),
        })
    }

    fn suggestions(&self, token: &str, n: usize) -> Vec<String> {
        let mut scored: Vec<(usize, usize)> = self
            .tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (strsim::levenshtein(token, t), i))
            .collect();
        scored.sort_unstable();
        scored.into_iter().take(n).map(|(_, i)| self.tokens[i].clone()).collect()
    }

    fn cosine_ids(&self, a: u32, b: u32) -> f64 {
        let d = dot(self.vector(a), self.vector(b));
        (d / (self.norms[a as usize] * self.norms[b as usize])).clamp(-1.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterLevel {
    AllWords,
    /// Tokens that are a form of some lexicon entry.
    ChemicalNames,
    /// Lexicon tokens whose entry is labeled energetic.
    LikelyEnergetics,
}

impl std::str::FromStr for FilterLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "all" | "all_words" => Ok(FilterLevel::AllWords),
            "chemicals" | "chemical_names" => Ok(FilterLevel::ChemicalNames),
            "energetics" | "likely_energetics" => Ok(FilterLevel::LikelyEnergetics),
            other => Err(Error::InvalidArgument(format!("unknown filter {other:?}"))),
        }
    }
}

/// Ids allowed by a filter, ascending.
pub fn candidate_ids(space: &EmbeddingSpace, filter: FilterLevel, lexicon: Option<&ChemLexicon>) -> Result<Vec<u32>> {
    if filter == FilterLevel::AllWords {
        return Ok((0..space.len() as u32).collect());
    }
    let lexicon = lexicon.ok_or_else(|| Error::InvalidArgument("this filter needs a chemical lexicon".into()))?;
    let index = lexicon.token_index();
    let ids: BTreeSet<u32> = index
        .iter()
        .filter(|(_, &e)| filter == FilterLevel::ChemicalNames || lexicon.is_energetic(e))
        .filter_map(|(t, _)| space.id(t))
        .collect();
    Ok(ids.into_iter().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedItem {
    pub id: u32,
    pub token: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimilarityRanking {
    pub query: String,
    pub filter: Option<FilterLevel>,
    pub items: Vec<RankedItem>,
}

impl SimilarityRanking {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("rank\ttoken\tscore\n");
        for (r, item) in self.items.iter().enumerate() {
            let _ = writeln!(out, "{}\t{}\t{:.6}", r + 1, item.token, item.score);
        }
        out
    }

    pub fn tokens(&self) -> Vec<&str> {
        self.items.iter().map(|i| i.token.as_str()).collect()
    }
}

/// Top `k` candidates by cosine to `target`, skipping `exclude` and
/// zero-norm rows. Ties go to the smaller id.
fn rank(space: &EmbeddingSpace, target: &[f64], k: usize, candidates: &[u32], exclude: &[u32]) -> Result<Vec<RankedItem>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let tn = norm(target);
    if tn == 0.0 {
        return Err(Error::ZeroVector);
    }
    let mut scored: Vec<(f64, u32)> = candidates
        .iter()
        .copied()
        .filter(|id| !exclude.contains(id) && space.norms[*id as usize] > 0.0)
        .map(|id| {
            let s = dot(target, space.vector(id)) / (tn * space.norms[id as usize]);
            (s.clamp(-1.0, 1.0), id)
        })
        .collect();
    if scored.is_empty() {
        return Err(Error::EmptyCandidateSet);
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    scored.truncate(k);
    Ok(scored
        .into_iter()
        .map(|(score, id)| RankedItem {
            id,
            token: space.token(id).to_owned(),
            score,
        })
        .collect())
}

pub fn nearest(
    space: &EmbeddingSpace,
    query: &str,
    k: usize,
    filter: FilterLevel,
    lexicon: Option<&ChemLexicon>,
) -> Result<SimilarityRanking> {
    let q = space.require(query)?;
    let candidates = candidate_ids(space, filter, lexicon)?;
    Ok(SimilarityRanking {
        query: query.to_owned(),
        filter: Some(filter),
        items: rank(space, space.vector(q), k, &candidates, &[q])?,
    })
}

/// The `k` application words closest to a chemical.
pub fn application_words<S: AsRef<str>>(space: &EmbeddingSpace, chem: &str, apps: &[S], k: usize) -> Result<SimilarityRanking> {
    let q = space.require(chem)?;
    let mut candidates: Vec<u32> = apps.iter().filter_map(|a| space.id(a.as_ref())).collect();
    candidates.sort_unstable();
    candidates.dedup();
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no application word is in the vocabulary".into()));
    }
    Ok(SimilarityRanking {
        query: chem.to_owned(),
        filter: None,
        items: rank(space, space.vector(q), k, &candidates, &[q])?,
    })
}

pub fn analogy(space: &EmbeddingSpace, a: &str, b: &str, c: &str, k: usize) -> Result<SimilarityRanking> {
    let ids = [space.require(a)?, space.require(b)?, space.require(c)?];
    let target: Vec<f64> = (0..space.dim())
        .map(|d| space.vector(ids[1])[d] - space.vector(ids[0])[d] + space.vector(ids[2])[d])
        .collect();
    let all: Vec<u32> = (0..space.len() as u32).collect();
    Ok(SimilarityRanking {
        query: format!("{a}:{b}::{c}:?"),
        filter: Some(FilterLevel::AllWords),
        items: rank(space, &target, k, &all, &ids)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSimilarity {
    pub group_a: Vec<String>,
    pub group_b: Vec<String>,
    /// Requested tokens absent from the vocabulary.
    pub missing: Vec<String>,
    pub pairs: usize,
    pub mean_cosine: f64,
    pub mean_euclidean: f64,
    /// Euclidean distance between unit-normalized vectors.
    pub mean_euclidean_normalized: f64,
}

fn in_vocab<S: AsRef<str>>(space: &EmbeddingSpace, group: &[S], missing: &mut Vec<String>) -> Vec<u32> {
    let mut ids = Vec::new();
    for t in group {
        match space.id(t.as_ref()) {
            Some(id) if !ids.contains(&id) => ids.push(id),
            Some(_) => {}
            None => missing.push(t.as_ref().to_owned()),
        }
    }
    ids
}

/// Mean cosine and Euclidean distance over cross pairs, or over unordered
/// distinct pairs when both groups are the same set.
pub fn group_similarity<S: AsRef<str>>(space: &EmbeddingSpace, group_a: &[S], group_b: &[S]) -> Result<GroupSimilarity> {
    let mut missing = Vec::new();
    let a = in_vocab(space, group_a, &mut missing);
    let b = in_vocab(space, group_b, &mut missing);
    missing.sort();
    missing.dedup();
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyGroup { missing });
    }
    let same = a.iter().collect::<BTreeSet<_>>() == b.iter().collect::<BTreeSet<_>>();
    let pairs: Vec<(u32, u32)> = if same {
        let mut ids = a.clone();
        ids.sort_unstable();
        (0..ids.len())
            .flat_map(|i| ((i + 1)..ids.len()).map(move |j| (i, j)))
            .map(|(i, j)| (ids[i], ids[j]))
            .collect()
    } else {
        a.iter().flat_map(|&x| b.iter().map(move |&y| (x, y))).collect()
    };
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("a single-token group has no distinct pairs".into()));
    }
    let unit = |id: u32| -> Result<Vec<f64>> {
        let n = space.norms[id as usize];
        if n == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(space.vector(id).iter().map(|x| x / n).collect())
    };
    let (mut cos, mut euc, mut euc_n) = (0.0, 0.0, 0.0);
    for &(x, y) in &pairs {
        cos += cosine(space.vector(x), space.vector(y))?;
        euc += euclidean(space.vector(x), space.vector(y))?;
        euc_n += euclidean(&unit(x)?, &unit(y)?)?;
    }
    let n = pairs.len() as f64;
    let names = |ids: &[u32]| ids.iter().map(|&i| space.token(i).to_owned()).collect();
    Ok(GroupSimilarity {
        group_a: names(&a),
        group_b: names(&b),
        missing,
        pairs: pairs.len(),
        mean_cosine: cos / n,
        mean_euclidean: euc / n,
        mean_euclidean_normalized: euc_n / n,
    })
}

/// Pairwise group similarities, upper triangle including the diagonal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupTable {
    pub names: Vec<String>,
    /// `cells[i][j]` for `j >= i`; `None` where a group could not be scored.
    pub cells: Vec<Vec<Option<GroupSimilarity>>>,
}

pub fn group_table(space: &EmbeddingSpace, groups: &[(String, Vec<String>)]) -> GroupTable {
    let n = groups.len();
    let cells = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if j < i {
                        None
                    } else {
                        group_similarity(space, &groups[i].1, &groups[j].1).ok()
                    }
                })
                .collect()
        })
        .collect();
    GroupTable {
        names: groups.iter().map(|g| g.0.clone()).collect(),
        cells,
    }
}

impl GroupTable {
    /// Rows and columns are groups; each cell is `cosine (euclidean)`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("group");
        for n in &self.names {
            out.push('\t');
            out.push_str(n);
        }
        out.push('\n');
        for (i, row) in self.cells.iter().enumerate() {
            out.push_str(&self.names[i]);
            for cell in row {
                out.push('\t');
                if let Some(c) = cell {
                    let _ = write!(out, "{:.3} ({:.3})", c.mean_cosine, c.mean_euclidean);
                }
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PcaProjection {
    pub tokens: Vec<String>,
    pub mean: Vec<f64>,
    /// `ncomp x D`, orthonormal rows.
    pub components: Vec<Vec<f64>>,
    /// Covariance eigenvalues, descending.
    pub explained_variance: Vec<f64>,
    /// `n x ncomp`.
    pub coordinates: Vec<Vec<f64>>,
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues descending with eigenvectors as columns.
pub fn symmetric_eigen(a: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: a.cols(),
        });
    }
    let mut m = a.clone();
    let mut v = Matrix::zeros(n, n);
    for i in 0..n {
        v.set(i, i, 1.0);
    }
    let scale: f64 = m.data().iter().map(|x| x * x).sum();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m.get(i, j).powi(2))
            .sum();
        if off <= 1e-30 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                if apq.abs() < f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (m.get(q, q) - m.get(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (kp, kq) = (m.get(k, p), m.get(k, q));
                    m.set(k, p, c * kp - s * kq);
                    m.set(k, q, s * kp + c * kq);
                }
                for k in 0..n {
                    let (pk, qk) = (m.get(p, k), m.get(q, k));
                    m.set(p, k, c * pk - s * qk);
                    m.set(q, k, s * pk + c * qk);
                }
                for k in 0..n {
                    let (kp, kq) = (v.get(k, p), v.get(k, q));
                    v.set(k, p, c * kp - s * kq);
                    v.set(k, q, s * kp + c * kq);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m.get(y, y).total_cmp(&m.get(x, x)).then(x.cmp(&y)));
    let values = order.iter().map(|&i| m.get(i, i)).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        for k in 0..n {
            vectors.set(k, col, v.get(k, i));
        }
    }
    Ok((values, vectors))
}

/// Mean, unit components, explained variances and per-row coordinates.
pub type PcaParts = (Vec<f64>, Vec<Vec<f64>>, Vec<f64>, Vec<Vec<f64>>);

/// Principal components of the rows of `data`.
pub fn pca(data: &Matrix, ncomp: usize) -> Result<PcaParts> {
    let (n, d) = (data.rows(), data.cols());
    if ncomp == 0 || ncomp > n.min(d) {
        return Err(Error::InvalidArgument(format!(
            "ncomp must lie in 1..={} for {n} points in {d} dimensions",
            n.min(d)
        )));
    }
    let mean: Vec<f64> = (0..d).map(|k| (0..n).map(|i| data.get(i, k)).sum::<f64>() / n as f64).collect();
    let centered: Vec<Vec<f64>> = (0..n)
        .map(|i| data.row(i).iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect();
    let denom = (n.max(2) - 1) as f64;
    let mut cov = Matrix::zeros(d, d);
    for a in 0..d {
        for b in a..d {
            let s: f64 = centered.iter().map(|r| r[a] * r[b]).sum::<f64>() / denom;
            cov.set(a, b, s);
            cov.set(b, a, s);
        }
    }
    let (values, vectors) = symmetric_eigen(&cov)?;
    let mut components = Vec::with_capacity(ncomp);
    for c in 0..ncomp {
        let mut comp: Vec<f64> = (0..d).map(|k| vectors.get(k, c)).collect();
        let lead = comp
            .iter()
            .enumerate()
            .fold((0usize, 0.0f64), |best, (k, x)| if x.abs() > best.1.abs() { (k, *x) } else { best });
        if lead.1 < 0.0 {
            comp.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(comp);
    }
    let explained = values.iter().take(ncomp).map(|v| v.max(0.0)).collect();
    let coords = centered
        .iter()
        .map(|r| components.iter().map(|c| dot(r, c)).collect())
        .collect();
    Ok((mean, components, explained, coords))
}

pub fn pca_project<S: AsRef<str>>(space: &EmbeddingSpace, tokens: &[S], ncomp: usize) -> Result<PcaProjection> {
    let mut kept = Vec::new();
    let mut rows = Vec::new();
    for t in tokens {
        let id = space.require(t.as_ref())?;
        kept.push(t.as_ref().to_owned());
        rows.push(space.vector(id).to_vec());
    }
    if rows.is_empty() {
        return Err(Error::EmptyCandidateSet);
    }
    let data = Matrix::from_rows(&rows)?;
    let (mean, components, explained_variance, coordinates) = pca(&data, ncomp)?;
    Ok(PcaProjection {
        tokens: kept,
        mean,
        components,
        explained_variance,
        coordinates,
    })
}

impl PcaProjection {
    /// `token,pc1,pc2,...,group` rows; tokens without a label get an empty group.
    pub fn to_csv(&self, labels: &HashMap<String, String>) -> String {
        let mut out = String::from("token");
        for c in 0..self.components.len() {
            let _ = write!(out, ",pc{}", c + 1);
        }
        out.push_str(",group\n");
        for (t, coords) in self.tokens.iter().zip(&self.coordinates) {
            out.push_str(t);
            for x in coords {
                let _ = write!(out, ",{x:.6}");
            }
            let _ = writeln!(out, ",{}", labels.get(t).map_or("", String::as_str));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Cosine,
    Euclidean,
}

/// For each candidate, how many other candidates list it among their `k`
/// nearest neighbors. Ties go to the smaller id.
pub fn hub_counts(space: &EmbeddingSpace, k: usize, candidates: &[u32], metric: Metric) -> Result<Vec<u64>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let lists: Vec<Vec<usize>> = (0..candidates.len())
        .into_par_iter()
        .map(|qi| {
            let q = candidates[qi];
            let mut scored: Vec<(f64, usize)> = candidates
                .iter()
                .enumerate()
                .filter(|&(ci, _)| ci != qi)
                .map(|(ci, &c)| {
                    let dist = match metric {
                        Metric::Cosine if space.norms[q as usize] == 0.0 || space.norms[c as usize] == 0.0 => 2.0,
                        Metric::Cosine => 1.0 - space.cosine_ids(q, c),
                        Metric::Euclidean => euclidean(space.vector(q), space.vector(c)).unwrap_or(f64::INFINITY),
                    };
                    (dist, ci)
                })
                .collect();
            scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(candidates[a.1].cmp(&candidates[b.1])));
            scored.into_iter().take(k).map(|(_, ci)| ci).collect()
        })
        .collect();
    let mut counts = vec![0u64; candidates.len()];
    for list in lists {
        for ci in list {
            counts[ci] += 1;
        }
    }
    Ok(counts)
}

/// Sample skewness `m3 / m2^1.5`; zero for constant data.
pub fn skewness(xs: &[u64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().map(|&x| x as f64).sum::<f64>() / n;
    let m2 = xs.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / n;
    let m3 = xs.iter().map(|&x| (x as f64 - mean).powi(3)).sum::<f64>() / n;
    if m2 == 0.0 {
        0.0
    } else {
        m3 / m2.powf(1.5)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HubnessReport {
    pub k: usize,
    pub tokens: Vec<String>,
    pub cosine_counts: Vec<u64>,
    pub euclidean_counts: Vec<u64>,
    pub cosine_skewness: f64,
    pub euclidean_skewness: f64,
}

pub fn hubness(space: &EmbeddingSpace, k: usize, candidates: &[u32]) -> Result<HubnessReport> {
    let cosine_counts = hub_counts(space, k, candidates, Metric::Cosine)?;
    let euclidean_counts = hub_counts(space, k, candidates, Metric::Euclidean)?;
    Ok(HubnessReport {
        k,
        tokens: candidates.iter().map(|&c| space.token(c).to_owned()).collect(),
        cosine_skewness: skewness(&cosine_counts),
        euclidean_skewness: skewness(&euclidean_counts),
        cosine_counts,
        euclidean_counts,
    })
}
