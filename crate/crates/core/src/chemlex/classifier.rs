//! Linear SVM trained by stochastic subgradient descent on the regularized
//! hinge loss.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{featurize_sum_over_bonds, FeatureSchema, FeatureVector};
use super::lexicon::parse_label;
use super::smiles::{parse_smiles, MolGraph};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub schema: FeatureSchema,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub decision_threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub regularization: f64,
    pub seed: u64,
    /// Fraction of each class held out for evaluation; `None` trains on everything.
    pub holdout_fraction: Option<f64>,
    pub decision_threshold: f64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            epochs: 200,
            learning_rate: 0.1,
            regularization: 1e-3,
            seed: 0,
            holdout_fraction: Some(0.2),
            decision_threshold: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub false_positive_rate: f64,
    pub true_positive_rate: f64,
    pub auroc: f64,
    pub examples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedClassifier {
    pub model: LinearModel,
    pub config: SvmConfig,
    pub train_size: usize,
    pub train_metrics: Metrics,
    pub holdout_metrics: Option<Metrics>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Classification {
    pub score: f64,
    pub label: bool,
}

impl LinearModel {
    pub fn score(&self, x: &FeatureVector) -> Result<f64> {
        if x.values.len() != self.weights.len() || *x.schema != self.schema {
            return Err(Error::SchemaMismatch);
        }
        Ok(dot(&self.weights, &x.values) + self.bias)
    }

    pub fn save(&self, path: &Path, meta: Option<&TrainedClassifier>) -> Result<()> {
        let json = match meta {
            Some(t) => serde_json::to_string_pretty(t)?,
            None => serde_json::to_string_pretty(&serde_json::json!({ "model": self }))?,
        };
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    /// Reads a model file written by [`LinearModel::save`].
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        let model_value = value.get("model").cloned().unwrap_or(value);
        let model: LinearModel = serde_json::from_value(model_value)?;
        if model.weights.len() != model.schema.len() {
            return Err(Error::ModelFile(format!(
                "{} weights for {} features",
                model.weights.len(),
                model.schema.len()
            )));
        }
        Ok(model)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn classify_energetic(model: &LinearModel, x: &FeatureVector) -> Result<Classification> {
    let score = model.score(x)?;
    Ok(Classification {
        score,
        label: score > model.decision_threshold,
    })
}

fn check_inputs(features: &[FeatureVector], labels: &[bool]) -> Result<Arc<FeatureSchema>> {
    if features.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: features.len(),
            actual: labels.len(),
        });
    }
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives < 2 || negatives < 2 {
        return Err(Error::InsufficientClasses { positives, negatives });
    }
    let schema = Arc::clone(&features[0].schema);
    for f in features {
        if f.values.len() != schema.len() || *f.schema != *schema {
            return Err(Error::SchemaMismatch);
        }
    }
    Ok(schema)
}

/// Splits indices per class, holding out `ceil(fraction * class size)` of each.
fn stratified_split(labels: &[bool], fraction: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut hold = Vec::new();
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(rng);
        let n_hold = ((fraction * idx.len() as f64).ceil() as usize).clamp(1, idx.len() - 1);
        hold.extend_from_slice(&idx[..n_hold]);
        train.extend_from_slice(&idx[n_hold..]);
    }
    train.sort_unstable();
    hold.sort_unstable();
    (train, hold)
}

fn fit(features: &[FeatureVector], labels: &[bool], rows: &[usize], cfg: &SvmConfig, rng: &mut ChaCha8Rng) -> (Vec<f64>, f64) {
    let dim = features[0].values.len();
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut order = rows.to_vec();
    let mut step = 0usize;
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for &i in &order {
            step += 1;
            let eta = cfg.learning_rate / (1.0 + cfg.learning_rate * cfg.regularization * step as f64);
            let y = if labels[i] { 1.0 } else { -1.0 };
            let x = &features[i].values;
            let margin = y * (dot(&w, x) + b);
            let shrink = 1.0 - eta * cfg.regularization;
            w.iter_mut().for_each(|wk| *wk *= shrink);
            if margin < 1.0 {
                for (wk, xk) in w.iter_mut().zip(x) {
                    *wk += eta * y * xk;
                }
                b += eta * y;
            }
        }
    }
    (w, b)
}

pub fn train_linear_classifier(features: &[FeatureVector], labels: &[bool], cfg: &SvmConfig) -> Result<TrainedClassifier> {
    let schema = check_inputs(features, labels)?;
    if cfg.epochs == 0 || cfg.learning_rate.is_nan() || cfg.learning_rate <= 0.0 || cfg.regularization < 0.0 {
        return Err(Error::InvalidArgument(
            "epochs and learning rate must be positive, regularization non-negative".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (train, hold) = match cfg.holdout_fraction {
        Some(f) if f > 0.0 && f < 1.0 => stratified_split(labels, f, &mut rng),
        Some(f) if f != 0.0 => {
            return Err(Error::InvalidArgument(format!("holdout fraction {f} not in [0, 1)")))
        }
        _ => ((0..labels.len()).collect(), Vec::new()),
    };
    let (weights, bias) = fit(features, labels, &train, cfg, &mut rng);
    let model = LinearModel {
        schema: (*schema).clone(),
        weights,
        bias,
        decision_threshold: cfg.decision_threshold,
    };
    let train_metrics = evaluate(&model, features, labels, &train)?;
    let holdout_metrics = if hold.is_empty() {
        None
    } else {
        Some(evaluate(&model, features, labels, &hold)?)
    };
    Ok(TrainedClassifier {
        model,
        config: *cfg,
        train_size: train.len(),
        train_metrics,
        holdout_metrics,
    })
}

fn evaluate(model: &LinearModel, features: &[FeatureVector], labels: &[bool], rows: &[usize]) -> Result<Metrics> {
    let mut scores = Vec::with_capacity(rows.len());
    let (mut tp, mut fp, mut tn, mut fneg) = (0usize, 0usize, 0usize, 0usize);
    for &i in rows {
        let c = classify_energetic(model, &features[i])?;
        scores.push((c.score, labels[i]));
        match (c.label, labels[i]) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fneg += 1,
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    Ok(Metrics {
        accuracy: ratio(tp + tn, rows.len()),
        false_positive_rate: ratio(fp, fp + tn),
        true_positive_rate: ratio(tp, tp + fneg),
        auroc: auroc(&scores),
        examples: rows.len(),
    })
}

/// Area under the ROC curve from the Mann-Whitney rank sum, with tied scores
/// sharing their average rank. Returns 0.5 when a class is absent.
pub fn auroc(scored: &[(f64, bool)]) -> f64 {
    let n_pos = scored.iter().filter(|s| s.1).count();
    let n_neg = scored.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return 0.5;
    }
    let mut sorted: Vec<(f64, bool)> = scored.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1].0 == sorted[i].0 {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += avg_rank * sorted[i..=j].iter().filter(|s| s.1).count() as f64;
        i = j + 1;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    u / (n_pos * n_neg) as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledChemical {
    pub name: String,
    pub smiles: String,
    pub label: bool,
}

/// Reads `name<TAB>smiles<TAB>label` rows; `#` lines are comments.
pub fn parse_labeled_chemicals(text: &str) -> Result<Vec<LabeledChemical>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |message: String| Error::Format {
            what: "labeled chemicals",
            line: n + 1,
            message,
        };
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if fields.len() < 3 {
            return Err(bad(format!("expected 3 columns, found {}", fields.len())));
        }
        let label = parse_label(fields[2])
            .map_err(bad)?
            .ok_or_else(|| bad("missing label".into()))?;
        out.push(LabeledChemical {
            name: fields[0].to_owned(),
            smiles: fields[1].to_owned(),
            label,
        });
    }
    Ok(out)
}

pub fn load_labeled_chemicals(path: &Path) -> Result<Vec<LabeledChemical>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_labeled_chemicals(&text)
}

/// Parses every SMILES, builds the schema from their bonds and featurizes.
pub fn featurize_dataset(data: &[LabeledChemical]) -> Result<(Arc<FeatureSchema>, Vec<FeatureVector>, Vec<bool>)> {
    let graphs: Vec<MolGraph> = data
        .iter()
        .map(|c| parse_smiles(&c.smiles))
        .collect::<std::result::Result<_, _>>()?;
    let schema = Arc::new(FeatureSchema::from_graphs(&graphs));
    let features = graphs
        .iter()
        .map(|g| featurize_sum_over_bonds(g, &schema).features)
        .collect();
    Ok((schema, features, data.iter().map(|c| c.label).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn toy(seed: u64) -> (Vec<FeatureVector>, Vec<bool>) {
        let schema = Arc::new(FeatureSchema::new(["a", "b"]));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..40 {
            let pos = i % 2 == 0;
            let e1 = rng.random_range(-0.1..0.1);
            let e2 = rng.random_range(-0.1..0.1);
            let v = if pos { vec![2.0 + e1, e2] } else { vec![e1, 2.0 + e2] };
            xs.push(FeatureVector::new(v, Arc::clone(&schema)).unwrap());
            ys.push(pos);
        }
        (xs, ys)
    }

    #[test]
    fn separable_toy_set_is_learned() {
        let (xs, ys) = toy(1);
        let t = train_linear_classifier(&xs, &ys, &SvmConfig::default()).unwrap();
        let hold = t.holdout_metrics.unwrap();
        assert_eq!(hold.accuracy, 1.0);
        assert_eq!(hold.examples, 8);
        assert_eq!(hold.auroc, 1.0);
        assert_eq!(t.train_size, 32);
    }

    #[test]
    fn single_class_rejected() {
        let (xs, _) = toy(1);
        let ys = vec![true; xs.len()];
        assert!(matches!(
            train_linear_classifier(&xs, &ys, &SvmConfig::default()),
            Err(Error::InsufficientClasses { .. })
        ));
    }

    #[test]
    fn deterministic_given_seed() {
        let (xs, ys) = toy(2);
        let cfg = SvmConfig { seed: 9, ..Default::default() };
        let a = train_linear_classifier(&xs, &ys, &cfg).unwrap();
        let b = train_linear_classifier(&xs, &ys, &cfg).unwrap();
        assert_eq!(a.model.weights, b.model.weights);
        assert_eq!(a.model.bias, b.model.bias);
    }

    #[test]
    fn classify_arithmetic_and_threshold() {
        let schema = Arc::new(FeatureSchema::new(["a", "b"]));
        let mut m = LinearModel {
            schema: (*schema).clone(),
            weights: vec![1.0, -1.0],
            bias: 0.0,
            decision_threshold: 0.0,
        };
        let x = FeatureVector::new(vec![3.0, 1.0], Arc::clone(&schema)).unwrap();
        let c = classify_energetic(&m, &x).unwrap();
        assert_eq!(c.score, 2.0);
        assert!(c.label);
        m.decision_threshold = 5.0;
        assert!(!classify_energetic(&m, &x).unwrap().label);
        let other = Arc::new(FeatureSchema::new(["a", "b", "c"]));
        let wrong = FeatureVector::new(vec![3.0, 1.0, 0.0], other).unwrap();
        assert!(matches!(classify_energetic(&m, &wrong), Err(Error::SchemaMismatch)));
    }

    #[test]
    fn auroc_against_pair_counting() {
        let scored = [(0.1, false), (0.4, true), (0.35, false), (0.8, true), (0.4, false)];
        // brute force over positive/negative pairs, ties count half
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for p in scored.iter().filter(|s| s.1) {
            for n in scored.iter().filter(|s| !s.1) {
                pairs += 1.0;
                wins += if p.0 > n.0 { 1.0 } else if p.0 == n.0 { 0.5 } else { 0.0 };
            }
        }
        assert!((auroc(&scored) - wins / pairs).abs() < 1e-12);
    }

    #[test]
    fn model_file_round_trip() {
        let (xs, ys) = toy(3);
        let t = train_linear_classifier(&xs, &ys, &SvmConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        t.model.save(&path, Some(&t)).unwrap();
        assert_eq!(LinearModel::load(&path).unwrap(), t.model);
    }

    #[test]
    fn labeled_tsv() {
        let rows = parse_labeled_chemicals("# h\nTNT\tCc1ccccc1\t1\nethanol\tCCO\t0\n").unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].label && !rows[1].label);
        assert!(parse_labeled_chemicals("x\tC\n").is_err());
    }
}
