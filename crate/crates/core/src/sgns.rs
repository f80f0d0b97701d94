//! Skip-gram word2vec: exact softmax variants for small vocabularies and
//! negative sampling for real corpora.

use std::borrow::Cow;
use std::cell::RefCell;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use serde::{Deserialize, Serialize};

use crate::embedding::{dot, Algorithm, EmbeddingModel, Matrix};
use crate::error::{Error, Result};
use crate::textprep::{sentence_rng, subsample, TokenizedCorpus, Vocabulary};

/// Largest vocabulary accepted by the exact softmax modes.
pub const SOFTMAX_VOCAB_LIMIT: usize = 5000;
const DOT_CLIP: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// `softmax(W_ctx · w_c)`.
    FullSoftmax,
    /// `softmax(W · w_c)`, one matrix only.
    SingleSoftmax,
    NegativeSampling,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::FullSoftmax => "full_softmax",
            Mode::SingleSoftmax => "single_softmax",
            Mode::NegativeSampling => "negative_sampling",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "full_softmax" | "full" => Ok(Mode::FullSoftmax),
            "single_softmax" | "single" => Ok(Mode::SingleSoftmax),
            "negative_sampling" | "ns" | "neg" => Ok(Mode::NegativeSampling),
            other => Err(Error::InvalidArgument(format!("unknown training mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub dim: usize,
    pub window: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Floor of the linearly decaying learning rate.
    pub min_learning_rate: f64,
    pub negatives: usize,
    /// Subsampling threshold; 0 disables subsampling.
    pub subsample_t: f64,
    pub min_count: u64,
    pub seed: u64,
    pub mode: Mode,
    /// Draw each center's window uniformly from `1..=window`.
    pub shrink_window: bool,
    /// Worker threads. One worker is deterministic; more use lock-free shared updates.
    pub workers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 200,
            window: 8,
            epochs: 5,
            learning_rate: 0.025,
            min_learning_rate: 0.025 * 1e-4,
            negatives: 5,
            subsample_t: 1e-4,
            min_count: 5,
            seed: 1,
            mode: Mode::NegativeSampling,
            shrink_window: true,
            workers: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if self.dim == 0 {
            return bad("dimension must be positive");
        }
        if self.window == 0 {
            return bad("window must be positive");
        }
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        if self.min_learning_rate < 0.0 || self.min_learning_rate > self.learning_rate {
            return bad("minimum learning rate must lie in [0, learning_rate]");
        }
        if self.mode == Mode::NegativeSampling && self.negatives == 0 {
            return bad("negative sampling needs at least one negative");
        }
        if !(0.0..=1.0).contains(&self.subsample_t) {
            return bad("subsampling threshold must lie in [0, 1]");
        }
        if self.workers == 0 {
            return bad("workers must be positive");
        }
        Ok(())
    }
}

/// Softmax with max subtraction.
pub fn softmax(u: &[f64]) -> Result<Vec<f64>> {
    if u.is_empty() {
        return Err(Error::InvalidArgument("softmax of an empty vector".into()));
    }
    let max = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = u.iter().map(|x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / sum).collect())
}

/// `ln softmax(u)`, evaluated without forming the probabilities.
fn log_softmax(u: &[f64]) -> Vec<f64> {
    let max = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + u.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
    u.iter().map(|x| x - lse).collect()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `-ln sigmoid(x)`.
fn neg_log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layer {
    Word,
    Context,
}

/// Row access used by the update rules. Training writes in place; gradient
/// evaluation reads a frozen model and accumulates into separate buffers.
trait ParamRows {
    fn vocab(&self) -> usize;
    fn read(&self, layer: Layer, row: usize, out: &mut [f64]);
    fn add(&self, layer: Layer, row: usize, scale: f64, v: &[f64]);
}

struct SharedParams {
    dim: usize,
    vocab: usize,
    word: Vec<AtomicU64>,
    context: Vec<AtomicU64>,
}

impl SharedParams {
    fn new(m: &Matrix, c: &Matrix) -> Self {
        let atoms = |x: &Matrix| x.data().iter().map(|v| AtomicU64::new(v.to_bits())).collect();
        SharedParams {
            dim: m.cols(),
            vocab: m.rows(),
            word: atoms(m),
            context: atoms(c),
        }
    }

    fn layer(&self, layer: Layer) -> &[AtomicU64] {
        match layer {
            Layer::Word => &self.word,
            Layer::Context => &self.context,
        }
    }

    fn into_matrix(v: Vec<AtomicU64>, rows: usize, cols: usize) -> Matrix {
        let data = v.into_iter().map(|a| f64::from_bits(a.into_inner())).collect();
        Matrix::from_vec(rows, cols, data).expect("shape preserved")
    }
}

// Relaxed loads and stores: concurrent workers may overwrite each other's
// updates, which asynchronous SGD tolerates.
impl ParamRows for SharedParams {
    fn vocab(&self) -> usize {
        self.vocab
    }

    fn read(&self, layer: Layer, row: usize, out: &mut [f64]) {
        let cells = &self.layer(layer)[row * self.dim..(row + 1) * self.dim];
        for (o, c) in out.iter_mut().zip(cells) {
            *o = f64::from_bits(c.load(Ordering::Relaxed));
        }
    }

    fn add(&self, layer: Layer, row: usize, scale: f64, v: &[f64]) {
        if scale == 0.0 {
            return;
        }
        let cells = &self.layer(layer)[row * self.dim..(row + 1) * self.dim];
        for (c, x) in cells.iter().zip(v) {
            let old = f64::from_bits(c.load(Ordering::Relaxed));
            c.store((old + scale * x).to_bits(), Ordering::Relaxed);
        }
    }
}

struct GradientSink<'a> {
    model: &'a EmbeddingModel,
    d_word: RefCell<Matrix>,
    d_context: RefCell<Matrix>,
}

impl ParamRows for GradientSink<'_> {
    fn vocab(&self) -> usize {
        self.model.len()
    }

    fn read(&self, layer: Layer, row: usize, out: &mut [f64]) {
        let m = match layer {
            Layer::Word => &self.model.word,
            Layer::Context => &self.model.context,
        };
        out.copy_from_slice(m.row(row));
    }

    fn add(&self, layer: Layer, row: usize, scale: f64, v: &[f64]) {
        let mut m = match layer {
            Layer::Word => self.d_word.borrow_mut(),
            Layer::Context => self.d_context.borrow_mut(),
        };
        for (g, x) in m.row_mut(row).iter_mut().zip(v) {
            *g += scale * x;
        }
    }
}

struct Scratch {
    center: Vec<f64>,
    row: Vec<f64>,
    acc: Vec<f64>,
    scores: Vec<f64>,
    weights: Vec<f64>,
}

impl Scratch {
    fn new(dim: usize, vocab: usize) -> Self {
        Scratch {
            center: vec![0.0; dim],
            row: vec![0.0; dim],
            acc: vec![0.0; dim],
            scores: vec![0.0; vocab],
            weights: vec![0.0; vocab],
        }
    }
}

/// One exact softmax step for a center and its context multiset. Adds
/// `scale * gradient` to every touched row and returns the loss before the step.
fn softmax_step(p: &impl ParamRows, mode: Mode, center: usize, context: &[u32], scale: f64, s: &mut Scratch) -> f64 {
    let out_layer = match mode {
        Mode::FullSoftmax => Layer::Context,
        _ => Layer::Word,
    };
    p.read(Layer::Word, center, &mut s.center);
    for j in 0..p.vocab() {
        p.read(out_layer, j, &mut s.row);
        s.scores[j] = dot(&s.row, &s.center);
    }
    let log_probs = log_softmax(&s.scores);
    let loss: f64 = context.iter().map(|&o| -log_probs[o as usize]).sum();
    // dL/du = |C| y - sum of one-hots
    let n = context.len() as f64;
    for (g, lp) in s.weights.iter_mut().zip(&log_probs) {
        *g = n * lp.exp();
    }
    for &o in context {
        s.weights[o as usize] -= 1.0;
    }
    s.acc.iter_mut().for_each(|a| *a = 0.0);
    for j in 0..p.vocab() {
        let g = s.weights[j];
        if g == 0.0 {
            continue;
        }
        p.read(out_layer, j, &mut s.row);
        for (a, r) in s.acc.iter_mut().zip(&s.row) {
            *a += g * r;
        }
        p.add(out_layer, j, scale * g, &s.center);
    }
    p.add(Layer::Word, center, scale, &s.acc);
    loss
}

/// One negative-sampling step for a (center, context) pair.
fn negative_step(
    p: &impl ParamRows,
    center: usize,
    target: usize,
    negatives: &[u32],
    scale: f64,
    clip: bool,
    s: &mut Scratch,
) -> f64 {
    p.read(Layer::Word, center, &mut s.center);
    s.acc.iter_mut().for_each(|a| *a = 0.0);
    let mut loss = 0.0;
    let samples = std::iter::once((target, 1.0)).chain(negatives.iter().map(|&n| (n as usize, 0.0)));
    for (row, label) in samples {
        p.read(Layer::Context, row, &mut s.row);
        let raw = dot(&s.row, &s.center);
        let x = if clip { raw.clamp(-DOT_CLIP, DOT_CLIP) } else { raw };
        loss += if label == 1.0 { neg_log_sigmoid(x) } else { neg_log_sigmoid(-x) };
        let g = sigmoid(x) - label;
        for (a, r) in s.acc.iter_mut().zip(&s.row) {
            *a += g * r;
        }
        p.add(Layer::Context, row, scale * g, &s.center);
    }
    p.add(Layer::Word, center, scale, &s.acc);
    loss
}

/// Predicted distribution over the vocabulary for a center word.
pub fn skipgram_forward(center: u32, model: &EmbeddingModel, mode: Mode) -> Result<Vec<f64>> {
    model.check_id(center)?;
    let out = match mode {
        Mode::FullSoftmax => &model.context,
        Mode::SingleSoftmax => &model.word,
        Mode::NegativeSampling => {
            return Err(Error::InvalidArgument("forward pass needs a softmax mode".into()))
        }
    };
    let wc = model.word.row(center as usize);
    let u: Vec<f64> = (0..model.len()).map(|j| dot(out.row(j), wc)).collect();
    softmax(&u)
}

/// Cross-entropy `-sum ln y[o]` over the context words.
pub fn skipgram_loss(center: u32, context: &[u32], model: &EmbeddingModel, mode: Mode) -> Result<f64> {
    Ok(skipgram_gradients(center, context, model, mode)?.loss)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub loss: f64,
    pub word: Matrix,
    pub context: Matrix,
}

fn check_context(model: &EmbeddingModel, context: &[u32]) -> Result<()> {
    if context.is_empty() {
        return Err(Error::InvalidArgument("context is empty".into()));
    }
    context.iter().try_for_each(|&o| model.check_id(o))
}

/// Loss and its gradient with respect to both matrices, for a softmax mode.
pub fn skipgram_gradients(center: u32, context: &[u32], model: &EmbeddingModel, mode: Mode) -> Result<Gradients> {
    if mode == Mode::NegativeSampling {
        return Err(Error::InvalidArgument("use negative_sampling_gradients".into()));
    }
    model.check_id(center)?;
    check_context(model, context)?;
    let sink = GradientSink {
        model,
        d_word: RefCell::new(Matrix::zeros(model.len(), model.dim())),
        d_context: RefCell::new(Matrix::zeros(model.len(), model.dim())),
    };
    let mut s = Scratch::new(model.dim(), model.len());
    let loss = softmax_step(&sink, mode, center as usize, context, 1.0, &mut s);
    Ok(Gradients {
        loss,
        word: sink.d_word.into_inner(),
        context: sink.d_context.into_inner(),
    })
}

/// Negative-sampling loss `-ln s(c.o) - sum ln s(-c.n)` and its gradient for
/// fixed negatives, without dot-product clipping.
pub fn negative_sampling_gradients(center: u32, target: u32, negatives: &[u32], model: &EmbeddingModel) -> Result<Gradients> {
    model.check_id(center)?;
    model.check_id(target)?;
    check_context(model, negatives)?;
    let sink = GradientSink {
        model,
        d_word: RefCell::new(Matrix::zeros(model.len(), model.dim())),
        d_context: RefCell::new(Matrix::zeros(model.len(), model.dim())),
    };
    let mut s = Scratch::new(model.dim(), 0);
    let loss = negative_step(&sink, center as usize, target as usize, negatives, 1.0, false, &mut s);
    Ok(Gradients {
        loss,
        word: sink.d_word.into_inner(),
        context: sink.d_context.into_inner(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedSkipgram {
    pub model: EmbeddingModel,
    /// Mean loss per (center, context) pair in each epoch, measured during training.
    pub epoch_losses: Vec<f64>,
}

pub(crate) fn derive_seed(seed: u64, salt: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct EpochPlan<'a> {
    cfg: &'a TrainConfig,
    noise: Option<&'a WeightedAliasIndex<f64>>,
    seed: u64,
    done_before: usize,
    total: usize,
    processed: &'a AtomicUsize,
}

impl EpochPlan<'_> {
    fn learning_rate(&self) -> f64 {
        let progress = (self.done_before + self.processed.load(Ordering::Relaxed)) as f64 / self.total.max(1) as f64;
        (self.cfg.learning_rate * (1.0 - progress)).max(self.cfg.min_learning_rate)
    }

    /// Trains on sentences `[offset, offset + chunk.len())`; returns (loss sum, pairs).
    fn run(&self, p: &SharedParams, chunk: &[Vec<u32>], offset: usize) -> (f64, u64) {
        let cfg = self.cfg;
        let mut s = Scratch::new(p.dim, if cfg.mode == Mode::NegativeSampling { 0 } else { p.vocab });
        let mut context = Vec::with_capacity(2 * cfg.window);
        let mut negatives = Vec::with_capacity(cfg.negatives);
        let mut loss = 0.0;
        let mut pairs = 0u64;
        for (k, sentence) in chunk.iter().enumerate() {
            let mut rng = sentence_rng(self.seed, (offset + k) as u64);
            for (pos, &center) in sentence.iter().enumerate() {
                let lr = self.learning_rate();
                let reach = if cfg.shrink_window {
                    rng.random_range(1..=cfg.window)
                } else {
                    cfg.window
                };
                context.clear();
                let lo = pos.saturating_sub(reach);
                let hi = (pos + reach).min(sentence.len() - 1);
                context.extend((lo..=hi).filter(|&q| q != pos).map(|q| sentence[q]));
                if !context.is_empty() {
                    pairs += context.len() as u64;
                    match (cfg.mode, self.noise) {
                        (Mode::NegativeSampling, Some(noise)) => {
                            for &target in &context {
                                negatives.clear();
                                for _ in 0..cfg.negatives {
                                    let n = noise.sample(&mut rng) as u32;
                                    if n != target {
                                        negatives.push(n);
                                    }
                                }
                                loss += negative_step(p, center as usize, target as usize, &negatives, -lr, true, &mut s);
                            }
                        }
                        _ => loss += softmax_step(p, cfg.mode, center as usize, &context, -lr, &mut s),
                    }
                }
                self.processed.fetch_add(1, Ordering::Relaxed);
            }
        }
        (loss, pairs)
    }
}

/// Trains skip-gram embeddings over `corpus`, whose ids index `vocab`.
pub fn train_skipgram(corpus: &TokenizedCorpus, vocab: &Vocabulary, cfg: &TrainConfig) -> Result<TrainedSkipgram> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let v = vocab.len();
    corpus.check_vocab(vocab)?;
    if cfg.mode != Mode::NegativeSampling && v > SOFTMAX_VOCAB_LIMIT {
        return Err(Error::VocabularyTooLarge {
            size: v,
            limit: SOFTMAX_VOCAB_LIMIT,
            mode: cfg.mode.name(),
        });
    }
    let noise = match cfg.mode {
        Mode::NegativeSampling => Some(
            WeightedAliasIndex::new(vocab.counts().iter().map(|&c| (c as f64).powf(0.75)).collect())
                .map_err(|e| Error::InvalidArgument(format!("noise distribution: {e}")))?,
        ),
        _ => None,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let half = 0.5 / cfg.dim as f64;
    let init: Vec<f64> = (0..v * cfg.dim).map(|_| rng.random_range(-half..half)).collect();
    let params = SharedParams::new(&Matrix::from_vec(v, cfg.dim, init)?, &Matrix::zeros(v, cfg.dim));

    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut done_before = 0usize;
    for epoch in 0..cfg.epochs {
        let epoch_seed = derive_seed(cfg.seed, epoch as u64 + 1);
        let sentences: Cow<'_, TokenizedCorpus> = if cfg.subsample_t > 0.0 {
            Cow::Owned(subsample(corpus, vocab, cfg.subsample_t, derive_seed(epoch_seed, 0x5AB))?)
        } else {
            Cow::Borrowed(corpus)
        };
        let tokens = sentences.num_tokens();
        let processed = AtomicUsize::new(0);
        let plan = EpochPlan {
            cfg,
            noise: noise.as_ref(),
            seed: epoch_seed,
            done_before,
            total: tokens * cfg.epochs,
            processed: &processed,
        };
        let sents = &sentences.sentences;
        let (loss, pairs) = if cfg.workers == 1 {
            plan.run(&params, sents, 0)
        } else {
            let per = sents.len().div_ceil(cfg.workers).max(1);
            std::thread::scope(|scope| {
                let handles: Vec<_> = sents
                    .chunks(per)
                    .enumerate()
                    .map(|(w, chunk)| {
                        let plan = &plan;
                        let params = &params;
                        scope.spawn(move || plan.run(params, chunk, w * per))
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("training worker panicked"))
                    .fold((0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1))
            })
        };
        done_before += tokens;
        epoch_losses.push(if pairs == 0 { 0.0 } else { loss / pairs as f64 });
    }

    let SharedParams { word, context, .. } = params;
    let word = SharedParams::into_matrix(word, v, cfg.dim);
    let context = SharedParams::into_matrix(context, v, cfg.dim);
    let mut model = EmbeddingModel::new(Algorithm::Word2vec, vocab.tokens().to_vec(), word, context)?;
    model.vocab_ref = vocab.hash_hex();
    if !model.is_finite() {
        return Err(Error::InvalidArgument(
            "training diverged to non-finite values; lower the learning rate".into(),
        ));
    }
    Ok(TrainedSkipgram { model, epoch_losses })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(v: usize, d: usize, seed: u64) -> EmbeddingModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = |_: ()| {
            let data = (0..v * d).map(|_| rng.random_range(-1.0..1.0)).collect();
            Matrix::from_vec(v, d, data).unwrap()
        };
        let (w, c) = (m(()), m(()));
        let tokens = (0..v).map(|i| format!("w{i}")).collect();
        EmbeddingModel::new(Algorithm::Word2vec, tokens, w, c).unwrap()
    }

    #[test]
    fn softmax_examples() {
        let y = softmax(&[0.0, 0.0, 0.0]).unwrap();
        assert!(y.iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-15));
        let y = softmax(&[1.0, 2.0, 3.0]).unwrap();
        for (a, b) in y.iter().zip([0.09003, 0.24473, 0.66524]) {
            assert!((a - b).abs() < 1e-5);
        }
        assert_eq!(softmax(&[1000.0, 1000.0]).unwrap(), vec![0.5, 0.5]);
        assert!(softmax(&[]).is_err());
    }

    #[test]
    fn zero_context_matrix_gives_uniform() {
        let mut m = model(4, 3, 1);
        m.context = Matrix::zeros(4, 3);
        let y = skipgram_forward(2, &m, Mode::FullSoftmax).unwrap();
        assert!(y.iter().all(|p| (p - 0.25).abs() < 1e-15));
        let loss = skipgram_loss(2, &[1], &m, Mode::FullSoftmax).unwrap();
        assert!((loss - 4f64.ln()).abs() < 1e-12);
        assert!(skipgram_forward(4, &m, Mode::FullSoftmax).is_err());
        assert!(skipgram_loss(0, &[], &m, Mode::FullSoftmax).is_err());
    }

    #[test]
    fn hand_computed_forward() {
        let w = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.5, -1.0], vec![0.0, 2.0]]).unwrap();
        let c = Matrix::from_rows(&[vec![0.2, 0.1], vec![-0.3, 0.4], vec![1.0, 1.0]]).unwrap();
        let m = EmbeddingModel::new(Algorithm::Word2vec, vec!["a".into(), "b".into(), "c".into()], w, c).unwrap();
        // center b: u = (0.5*0.2 - 0.1, -0.15 - 0.4, 0.5 - 1) = (0, -0.55, -0.5)
        let u = [0.0f64, -0.55, -0.5];
        let z: f64 = u.iter().map(|x| x.exp()).sum();
        let y = skipgram_forward(1, &m, Mode::FullSoftmax).unwrap();
        for (a, x) in y.iter().zip(u) {
            assert!((a - x.exp() / z).abs() < 1e-12);
        }
    }

    #[test]
    fn single_softmax_orthonormal_peaks_at_center() {
        let w = Matrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let m = EmbeddingModel::new(
            Algorithm::Word2vec,
            vec!["a".into(), "b".into(), "c".into()],
            w,
            Matrix::zeros(3, 3),
        )
        .unwrap();
        for c in 0..3u32 {
            let y = skipgram_forward(c, &m, Mode::SingleSoftmax).unwrap();
            let best = (0..3).max_by(|&a, &b| y[a].total_cmp(&y[b])).unwrap();
            assert_eq!(best, c as usize);
        }
    }

    #[test]
    fn loss_matches_scalar_reimplementation() {
        let m = model(10, 4, 7);
        let center = 3usize;
        let ctx = [1u32, 5, 5, 9];
        let mut expected = 0.0;
        for &o in &ctx {
            let mut denom = 0.0;
            for j in 0..10 {
                let mut s = 0.0;
                for k in 0..4 {
                    s += m.context.get(j, k) * m.word.get(center, k);
                }
                denom += s.exp();
            }
            let mut num = 0.0;
            for k in 0..4 {
                num += m.context.get(o as usize, k) * m.word.get(center, k);
            }
            expected -= (num.exp() / denom).ln();
        }
        let got = skipgram_loss(center as u32, &ctx, &m, Mode::FullSoftmax).unwrap();
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn vocabulary_guard() {
        let counts: Vec<(String, u64)> = (0..SOFTMAX_VOCAB_LIMIT + 1).map(|i| (format!("t{i}"), 1)).collect();
        let n = counts.len() as u64;
        let vocab = Vocabulary::from_counts(counts, 1, n).unwrap();
        let corpus = TokenizedCorpus::from_ids(vec![vec![0, 1]], vocab.hash_hex());
        let cfg = TrainConfig {
            mode: Mode::FullSoftmax,
            ..Default::default()
        };
        assert!(matches!(
            train_skipgram(&corpus, &vocab, &cfg),
            Err(Error::VocabularyTooLarge { .. })
        ));
    }
}
