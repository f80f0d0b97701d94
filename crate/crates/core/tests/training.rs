use chemvec::cooc::{build_cooccurrence, CoocConfig};
use chemvec::glove::{train_glove, GloveConfig, Optimizer};
use chemvec::sgns::{train_skipgram, Mode, TrainConfig};
use chemvec::textprep::{discard_probability, subsample};
use chemvec::{TokenizedCorpus, Vocabulary};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Sentences from a few topics, each with its own slice of a small vocabulary.
fn topic_corpus(seed: u64, sentences: usize) -> (TokenizedCorpus, Vocabulary) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab_size = 40u32;
    let ids: Vec<Vec<u32>> = (0..sentences)
        .map(|_| {
            let topic = rng.random_range(0..4) * 10;
            (0..10).map(|_| topic + rng.random_range(0..10)).collect()
        })
        .collect();
    let mut counts = vec![0u64; vocab_size as usize];
    ids.iter().flatten().for_each(|&i| counts[i as usize] += 1);
    let total = counts.iter().sum();
    let rows = counts.into_iter().enumerate().map(|(i, c)| (format!("w{i}"), c)).collect();
    let vocab = Vocabulary::from_counts(rows, 1, total).unwrap();
    (TokenizedCorpus::from_ids(ids, vocab.hash_hex()), vocab)
}

fn small_config(mode: Mode) -> TrainConfig {
    TrainConfig {
        dim: 8,
        window: 3,
        epochs: 4,
        learning_rate: 0.05,
        subsample_t: 0.0,
        min_count: 1,
        seed: 9,
        mode,
        ..TrainConfig::default()
    }
}

#[test]
fn single_worker_training_is_reproducible() {
    let (corpus, vocab) = topic_corpus(1, 300);
    for mode in [Mode::NegativeSampling, Mode::FullSoftmax, Mode::SingleSoftmax] {
        let a = train_skipgram(&corpus, &vocab, &small_config(mode)).unwrap();
        let b = train_skipgram(&corpus, &vocab, &small_config(mode)).unwrap();
        assert_eq!(a, b, "{mode:?}");
        let other = train_skipgram(&corpus, &vocab, &TrainConfig { seed: 10, ..small_config(mode) }).unwrap();
        assert_ne!(a.model.word, other.model.word);
    }
    let cooc = build_cooccurrence(&corpus, vocab.len(), &CoocConfig::default()).unwrap();
    let cfg = GloveConfig {
        dim: 8,
        epochs: 5,
        ..GloveConfig::default()
    };
    assert_eq!(train_glove(&cooc, &cfg).unwrap(), train_glove(&cooc, &cfg).unwrap());
}

#[test]
fn skipgram_loss_falls() {
    let (corpus, vocab) = topic_corpus(2, 400);
    for mode in [Mode::NegativeSampling, Mode::FullSoftmax] {
        let trained = train_skipgram(&corpus, &vocab, &small_config(mode)).unwrap();
        let losses = &trained.epoch_losses;
        assert_eq!(losses.len(), 4);
        assert!(losses.last().unwrap() < losses.first().unwrap(), "{mode:?}: {losses:?}");
        assert!(trained.model.is_finite());
    }
}

#[test]
fn hogwild_training_stays_finite() {
    let (corpus, vocab) = topic_corpus(3, 400);
    let cfg = TrainConfig {
        workers: 4,
        ..small_config(Mode::NegativeSampling)
    };
    let trained = train_skipgram(&corpus, &vocab, &cfg).unwrap();
    assert!(trained.model.is_finite());
    assert!(trained.epoch_losses.last() < trained.epoch_losses.first());
}

#[test]
fn glove_loss_falls_for_both_optimizers() {
    let (corpus, vocab) = topic_corpus(4, 400);
    let cooc = build_cooccurrence(&corpus, vocab.len(), &CoocConfig::default()).unwrap();
    for optimizer in [Optimizer::Adagrad, Optimizer::Sgd] {
        let cfg = GloveConfig {
            dim: 8,
            epochs: 30,
            optimizer,
            learning_rate: if optimizer == Optimizer::Sgd { 0.01 } else { 0.05 },
            ..GloveConfig::default()
        };
        let trained = train_glove(&cooc, &cfg).unwrap();
        let losses = &trained.epoch_losses;
        assert!(losses.last().unwrap() < &(0.5 * losses[0]), "{optimizer:?}: {losses:?}");
        assert!(trained.model.is_finite());
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let (corpus, vocab) = topic_corpus(5, 10);
    for cfg in [
        TrainConfig { dim: 0, ..small_config(Mode::NegativeSampling) },
        TrainConfig { window: 0, ..small_config(Mode::NegativeSampling) },
        TrainConfig { learning_rate: -1.0, ..small_config(Mode::NegativeSampling) },
        TrainConfig { subsample_t: 2.0, ..small_config(Mode::NegativeSampling) },
    ] {
        assert!(train_skipgram(&corpus, &vocab, &cfg).is_err(), "{cfg:?}");
    }
    let stale = TokenizedCorpus::from_ids(corpus.sentences.clone(), "not-this-vocab");
    assert!(train_skipgram(&stale, &vocab, &small_config(Mode::NegativeSampling)).is_err());
}

#[test]
fn discard_probability_formula() {
    let t = 1e-4;
    assert_eq!(discard_probability(t, t), 0.0);
    assert_eq!(discard_probability(t / 3.0, t), 0.0);
    assert!((discard_probability(4.0 * t, t) - 0.5).abs() < 1e-15);
    assert!((discard_probability(100.0 * t, t) - 0.9).abs() < 1e-15);
}

#[test]
fn subsampling_removal_rate_is_calibrated() {
    let t = 1e-3;
    let vocab = Vocabulary::from_counts(vec![("hot".into(), 40_000), ("cold".into(), 10)], 1, 10_000_000).unwrap();
    let hot = vocab.id("hot").unwrap();
    let cold = vocab.id("cold").unwrap();
    let corpus = TokenizedCorpus::from_ids(vec![vec![hot; 40_000], vec![cold; 10]], vocab.hash_hex());
    let kept = subsample(&corpus, &vocab, t, 3).unwrap();
    let expected_keep = 1.0 - discard_probability(vocab.frequency(hot), t);
    let kept_hot = kept.sentences[0].len() as f64 / 40_000.0;
    assert!((kept_hot - expected_keep).abs() < 0.02, "{kept_hot} vs {expected_keep}");
    assert_eq!(kept.sentences[1].len(), 10);
    assert_eq!(subsample(&corpus, &vocab, t, 3).unwrap(), kept);
}
