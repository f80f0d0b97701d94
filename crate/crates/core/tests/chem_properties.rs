use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use chemvec::chemlex::classifier::{featurize_dataset, load_labeled_chemicals};
use chemvec::chemlex::smiles::write_smiles_shuffled;
use chemvec::chemlex::{
    bond_key, classify_energetic, featurize_sum_over_bonds, parse_smiles, train_linear_classifier, write_smiles,
    FeatureSchema, FeatureVector, LinearModel, MolGraph, SvmConfig,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FRAGMENTS: &[&str] = &[
    "C", "CC", "O", "N", "Cl", "[N+](=O)[O-]", "O[N+](=O)[O-]", "C=O", "C#C", "c1ccccc1", "C1CCC1", "S",
];

/// A chain of fragments, some as branches, sometimes with a counter-ion.
fn random_smiles(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = String::from("C");
    for _ in 0..rng.random_range(1..8) {
        let frag = FRAGMENTS[rng.random_range(0..FRAGMENTS.len())];
        if rng.random::<bool>() {
            s.push('(');
            s.push_str(frag);
            s.push(')');
        } else {
            s.push_str(frag);
        }
    }
    if rng.random::<f64>() < 0.2 {
        s.push_str(".[NH4+]");
    }
    s
}

fn bond_multiset(g: &MolGraph) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for b in &g.bonds {
        *out.entry(bond_key(g, b)).or_insert(0) += 1;
    }
    out
}

fn atom_multiset(g: &MolGraph) -> BTreeMap<(String, bool, i8), usize> {
    let mut out = BTreeMap::new();
    for a in &g.atoms {
        *out.entry((a.element.clone(), a.aromatic, a.charge)).or_insert(0) += 1;
    }
    out
}

proptest! {
    #[test]
    fn rewriting_preserves_bonds(seed in any::<u64>(), order_seed in any::<u64>()) {
        let smiles = random_smiles(seed);
        let graph = parse_smiles(&smiles).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(order_seed);
        let rewritten = write_smiles_shuffled(&graph, &mut rng);
        let reparsed = parse_smiles(&rewritten).unwrap();
        prop_assert_eq!(bond_multiset(&graph), bond_multiset(&reparsed), "{} -> {}", smiles, rewritten);
        prop_assert_eq!(atom_multiset(&graph), atom_multiset(&reparsed));
        let canonical = parse_smiles(&write_smiles(&graph)).unwrap();
        prop_assert_eq!(bond_multiset(&graph), bond_multiset(&canonical));
    }

    #[test]
    fn feature_sum_accounts_for_every_bond(seed in any::<u64>(), keep in prop::collection::vec(any::<bool>(), 12)) {
        let graph = parse_smiles(&random_smiles(seed)).unwrap();
        let all: Vec<String> = bond_multiset(&graph).into_keys().collect();
        let kept: Vec<&String> = all.iter().zip(keep.iter().cycle()).filter(|(_, &k)| k).map(|(key, _)| key).collect();
        let schema = Arc::new(FeatureSchema::new(kept.iter().map(|k| k.as_str())));
        let counts = featurize_sum_over_bonds(&graph, &schema);
        let counted: f64 = counts.features.values.iter().sum();
        prop_assert_eq!(counted as usize + counts.unknown_bonds, graph.bonds.len());
        let multiset = bond_multiset(&graph);
        for (key, value) in schema.keys().iter().zip(&counts.features.values) {
            prop_assert_eq!(*value as usize, multiset[key]);
        }
    }

    #[test]
    fn raising_the_threshold_never_adds_positives(
        weights in prop::collection::vec(-3.0f64..3.0, 4),
        values in prop::collection::vec(0u8..6, 4),
        bias in -2.0f64..2.0,
        low in -10.0f64..10.0,
        gap in 0.0f64..10.0,
    ) {
        let schema = Arc::new(FeatureSchema::new(["C-C:1", "C-O:1", "N-O:2", "C-N:1"]));
        let x = FeatureVector::new(values.iter().map(|&v| v as f64).collect(), Arc::clone(&schema)).unwrap();
        let mut model = LinearModel { weights, bias, decision_threshold: low, schema: (*schema).clone() };
        let at_low = classify_energetic(&model, &x).unwrap();
        model.decision_threshold = low + gap;
        let at_high = classify_energetic(&model, &x).unwrap();
        prop_assert_eq!(at_low.score, at_high.score);
        prop_assert!(!at_high.label || at_low.label);
    }
}

#[test]
fn parser_rejects_malformed_input() {
    for bad in ["C(", "C)", "C1CC", "[N+", "Xx", "C==C"] {
        assert!(parse_smiles(bad).is_err(), "{bad} parsed");
    }
}

#[test]
fn nitro_group_bonds() {
    let g = parse_smiles("C[N+](=O)[O-]").unwrap();
    let keys = bond_multiset(&g);
    assert_eq!(keys.get("N-O:2"), Some(&1));
    assert_eq!(keys.get("N-O:1"), Some(&1));
    assert_eq!(keys.get("C-N:1"), Some(&1));
}

#[test]
fn fixture_training_set_separates() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/chem_training.tsv");
    let data = load_labeled_chemicals(&path).unwrap();
    let (_, features, labels) = featurize_dataset(&data).unwrap();
    let trained = train_linear_classifier(&features, &labels, &SvmConfig::default()).unwrap();
    let correct = features
        .iter()
        .zip(&labels)
        .filter(|(x, &y)| classify_energetic(&trained.model, x).unwrap().label == y)
        .count();
    assert!(correct as f64 >= 0.9 * labels.len() as f64, "{correct}/{}", labels.len());
}
