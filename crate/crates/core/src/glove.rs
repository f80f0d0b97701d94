//! GloVe: weighted least-squares fit of `w_i . w~_j + b_i + b~_j` to
//! `ln(1 + X_ij)` over the nonzero co-occurrence entries.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cooc::CoocMatrix;
use crate::embedding::{dot, Algorithm, EmbeddingModel, Matrix};
use crate::error::{Error, Result};
use crate::sgns::derive_seed;

/// Gradients of a single entry are clipped to this magnitude during training.
const GRAD_CLIP: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
    Adagrad,
}

impl std::str::FromStr for Optimizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sgd" => Ok(Optimizer::Sgd),
            "adagrad" => Ok(Optimizer::Adagrad),
            other => Err(Error::InvalidArgument(format!("unknown optimizer {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GloveConfig {
    pub dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub x_max: f64,
    pub alpha: f64,
    pub optimizer: Optimizer,
    pub seed: u64,
    pub workers: usize,
}

impl Default for GloveConfig {
    fn default() -> Self {
        GloveConfig {
            dim: 200,
            epochs: 25,
            learning_rate: 0.05,
            x_max: 100.0,
            alpha: 0.75,
            optimizer: Optimizer::Adagrad,
            seed: 1,
            workers: 1,
        }
    }
}

impl GloveConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if self.dim == 0 || self.epochs == 0 || self.workers == 0 {
            return bad("dimension, epochs and workers must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        if self.x_max.is_nan() || self.x_max <= 0.0 || self.alpha.is_nan() || self.alpha <= 0.0 {
            return bad("x_max and alpha must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GloveModel {
    pub word: Matrix,
    pub context: Matrix,
    pub word_bias: Vec<f64>,
    pub context_bias: Vec<f64>,
    pub x_max: f64,
    pub alpha: f64,
}

impl GloveModel {
    pub fn zeros(vocab: usize, dim: usize) -> Self {
        GloveModel {
            word: Matrix::zeros(vocab, dim),
            context: Matrix::zeros(vocab, dim),
            word_bias: vec![0.0; vocab],
            context_bias: vec![0.0; vocab],
            x_max: 100.0,
            alpha: 0.75,
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.word.rows()
    }

    pub fn dim(&self) -> usize {
        self.word.cols()
    }

    pub fn is_finite(&self) -> bool {
        self.word.is_finite()
            && self.context.is_finite()
            && self.word_bias.iter().chain(&self.context_bias).all(|x| x.is_finite())
    }

    /// Converts to the common model type, answering queries with `W + W~`.
    pub fn into_embedding(self, tokens: Vec<String>) -> Result<EmbeddingModel> {
        let mut m = EmbeddingModel::new(Algorithm::Glove, tokens, self.word, self.context)?;
        m.word_bias = Some(self.word_bias);
        m.context_bias = Some(self.context_bias);
        Ok(m)
    }
}

/// `(x / x_max)^alpha`, capped at 1.
pub fn glove_weight(x: f64, x_max: f64, alpha: f64) -> f64 {
    if x >= x_max {
        1.0
    } else {
        (x / x_max).powf(alpha)
    }
}

pub fn glove_pair_residual(model: &GloveModel, i: u32, j: u32, x: f64) -> Result<f64> {
    if x.is_nan() || x <= 0.0 {
        return Err(Error::InvalidArgument(format!("co-occurrence value must be positive, got {x}")));
    }
    let v = model.vocab_size();
    for id in [i, j] {
        if id as usize >= v {
            return Err(Error::IdOutOfRange { id: id as usize, size: v });
        }
    }
    let (i, j) = (i as usize, j as usize);
    Ok(dot(model.word.row(i), model.context.row(j)) + model.word_bias[i] + model.context_bias[j] - x.ln_1p())
}

fn check_shape(model: &GloveModel, cooc: &CoocMatrix) -> Result<()> {
    if cooc.vocab_size != model.vocab_size() {
        return Err(Error::DimensionMismatch {
            expected: model.vocab_size(),
            actual: cooc.vocab_size,
        });
    }
    Ok(())
}

/// `sum f(x) r^2` over the stored entries.
pub fn glove_loss(model: &GloveModel, cooc: &CoocMatrix) -> Result<f64> {
    check_shape(model, cooc)?;
    let mut loss = 0.0;
    for &(i, j, x) in cooc.entries() {
        let r = glove_pair_residual(model, i, j, x)?;
        loss += glove_weight(x, model.x_max, model.alpha) * r * r;
    }
    Ok(loss)
}

/// Gradient of [`glove_loss`] with respect to every parameter.
pub fn glove_gradients(model: &GloveModel, cooc: &CoocMatrix) -> Result<GloveModel> {
    check_shape(model, cooc)?;
    let mut g = GloveModel::zeros(model.vocab_size(), model.dim());
    for &(i, j, x) in cooc.entries() {
        let r = glove_pair_residual(model, i, j, x)?;
        let coef = 2.0 * glove_weight(x, model.x_max, model.alpha) * r;
        let (i, j) = (i as usize, j as usize);
        for k in 0..model.dim() {
            let gw = g.word.get(i, k) + coef * model.context.get(j, k);
            g.word.set(i, k, gw);
            let gc = g.context.get(j, k) + coef * model.word.get(i, k);
            g.context.set(j, k, gc);
        }
        g.word_bias[i] += coef;
        g.context_bias[j] += coef;
    }
    Ok(g)
}

/// `W + W~`.
pub fn combined_vectors(model: &GloveModel) -> Matrix {
    model.word.add(&model.context).expect("matching shapes")
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedGlove {
    pub model: GloveModel,
    /// Mean `f(x) r^2` per entry in each epoch, measured before each update.
    pub epoch_losses: Vec<f64>,
}

/// Parameters and AdaGrad accumulators shared between workers.
struct Shared {
    dim: usize,
    word: Vec<AtomicU64>,
    context: Vec<AtomicU64>,
    word_bias: Vec<AtomicU64>,
    context_bias: Vec<AtomicU64>,
    sq_word: Vec<AtomicU64>,
    sq_context: Vec<AtomicU64>,
    sq_word_bias: Vec<AtomicU64>,
    sq_context_bias: Vec<AtomicU64>,
}

fn atoms(xs: impl IntoIterator<Item = f64>) -> Vec<AtomicU64> {
    xs.into_iter().map(|x| AtomicU64::new(x.to_bits())).collect()
}

fn load(c: &AtomicU64) -> f64 {
    f64::from_bits(c.load(Ordering::Relaxed))
}

fn store(c: &AtomicU64, v: f64) {
    c.store(v.to_bits(), Ordering::Relaxed);
}

fn unatoms(v: Vec<AtomicU64>) -> Vec<f64> {
    v.into_iter().map(|a| f64::from_bits(a.into_inner())).collect()
}

impl Shared {
    fn step(&self, param: &AtomicU64, sq: &AtomicU64, grad: f64, cfg: &GloveConfig) {
        let delta = match cfg.optimizer {
            Optimizer::Sgd => cfg.learning_rate * grad,
            Optimizer::Adagrad => {
                let acc = load(sq) + grad * grad;
                store(sq, acc);
                cfg.learning_rate * grad / acc.sqrt()
            }
        };
        store(param, load(param) - delta);
    }

    /// One stochastic update; returns the weighted squared residual before it.
    fn update(&self, i: usize, j: usize, x: f64, cfg: &GloveConfig, wi: &mut [f64], cj: &mut [f64]) -> f64 {
        let d = self.dim;
        let wrow = &self.word[i * d..(i + 1) * d];
        let crow = &self.context[j * d..(j + 1) * d];
        for k in 0..d {
            wi[k] = load(&wrow[k]);
            cj[k] = load(&crow[k]);
        }
        let r = dot(wi, cj) + load(&self.word_bias[i]) + load(&self.context_bias[j]) - x.ln_1p();
        let f = glove_weight(x, cfg.x_max, cfg.alpha);
        let coef = (2.0 * f * r).clamp(-GRAD_CLIP, GRAD_CLIP);
        for k in 0..d {
            self.step(&wrow[k], &self.sq_word[i * d + k], coef * cj[k], cfg);
            self.step(&crow[k], &self.sq_context[j * d + k], coef * wi[k], cfg);
        }
        self.step(&self.word_bias[i], &self.sq_word_bias[i], coef, cfg);
        self.step(&self.context_bias[j], &self.sq_context_bias[j], coef, cfg);
        f * r * r
    }
}

/// Fits a GloVe model to the nonzero entries of `cooc`.
pub fn train_glove(cooc: &CoocMatrix, cfg: &GloveConfig) -> Result<TrainedGlove> {
    cfg.validate()?;
    if cooc.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let (v, d) = (cooc.vocab_size, cfg.dim);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let half = 0.5 / d as f64;
    let mut init = |n: usize| atoms((0..n).map(|_| rng.random_range(-half..half)).collect::<Vec<_>>());
    let shared = Shared {
        dim: d,
        word: init(v * d),
        context: init(v * d),
        word_bias: init(v),
        context_bias: init(v),
        sq_word: atoms(vec![1.0; v * d]),
        sq_context: atoms(vec![1.0; v * d]),
        sq_word_bias: atoms(vec![1.0; v]),
        sq_context_bias: atoms(vec![1.0; v]),
    };
    let entries = cooc.entries();
    let mut order: Vec<usize> = (0..entries.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let run = |shard: &[usize]| {
        let mut wi = vec![0.0; d];
        let mut cj = vec![0.0; d];
        shard
            .iter()
            .map(|&e| {
                let (i, j, x) = entries[e];
                shared.update(i as usize, j as usize, x, cfg, &mut wi, &mut cj)
            })
            .sum::<f64>()
    };
    for epoch in 0..cfg.epochs {
        let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, epoch as u64 + 1));
        order.shuffle(&mut shuffle_rng);
        let total = if cfg.workers == 1 {
            run(&order)
        } else {
            let per = order.len().div_ceil(cfg.workers);
            std::thread::scope(|scope| {
                let handles: Vec<_> = order.chunks(per).map(|shard| scope.spawn(|| run(shard))).collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("training worker panicked"))
                    .sum::<f64>()
            })
        };
        epoch_losses.push(total / entries.len() as f64);
    }
    let model = GloveModel {
        word: Matrix::from_vec(v, d, unatoms(shared.word))?,
        context: Matrix::from_vec(v, d, unatoms(shared.context))?,
        word_bias: unatoms(shared.word_bias),
        context_bias: unatoms(shared.context_bias),
        x_max: cfg.x_max,
        alpha: cfg.alpha,
    };
    if !model.is_finite() {
        return Err(Error::InvalidArgument(
            "training diverged to non-finite values; lower the learning rate".into(),
        ));
    }
    Ok(TrainedGlove { model, epoch_losses })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cooc::CoocConfig;

    fn matrix(v: usize, entries: Vec<(u32, u32, f64)>) -> CoocMatrix {
        CoocMatrix::from_triples(v, CoocConfig::default(), entries).unwrap()
    }

    #[test]
    fn residual_examples() {
        let m = GloveModel::zeros(2, 3);
        let r = glove_pair_residual(&m, 0, 1, std::f64::consts::E - 1.0).unwrap();
        assert!((r + 1.0).abs() < 1e-15);
        assert!(glove_pair_residual(&m, 0, 1, 0.0).is_err());
        let mut m = GloveModel::zeros(2, 1);
        m.word.set(0, 0, 2.0);
        m.context.set(1, 0, 0.5);
        m.word_bias[0] = 0.25;
        m.context_bias[1] = 3f64.ln() - 1.25;
        assert!(glove_pair_residual(&m, 0, 1, 2.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn loss_examples() {
        let mut m = GloveModel::zeros(2, 1);
        let r = 101f64.ln();
        let loss = glove_loss(&m, &matrix(2, vec![(0, 1, 100.0)])).unwrap();
        assert!((loss - r * r).abs() < 1e-12);
        // residual 1 at x = x_max / 16
        let x = 100.0 / 16.0;
        m.context_bias[1] = 1.0 + f64::ln_1p(x);
        let loss = glove_loss(&m, &matrix(2, vec![(0, 1, x)])).unwrap();
        assert!((loss - 0.125).abs() < 1e-12);
    }

    #[test]
    fn weight_function_shape() {
        assert_eq!(glove_weight(100.0, 100.0, 0.75), 1.0);
        assert_eq!(glove_weight(1e6, 100.0, 0.75), 1.0);
        assert!(glove_weight(1e-12, 100.0, 0.75) < 1e-8);
    }

    #[test]
    fn combined_examples() {
        let mut m = GloveModel::zeros(2, 2);
        m.word = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, -4.0]]).unwrap();
        assert_eq!(combined_vectors(&m), m.word);
        m.context = Matrix::from_rows(&[vec![-1.0, -2.0], vec![-3.0, 4.0]]).unwrap();
        assert_eq!(combined_vectors(&m), Matrix::zeros(2, 2));
    }

    #[test]
    fn empty_matrix_rejected() {
        assert!(train_glove(&matrix(3, vec![]), &GloveConfig::default()).is_err());
    }
}
