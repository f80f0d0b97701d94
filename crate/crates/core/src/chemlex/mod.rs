//! Chemical names: lexicon, gazetteer matching, name resolution, SMILES
//! parsing, bond-count features and the energetic classifier.

pub mod classifier;
pub mod features;
pub mod gazetteer;
pub mod lexicon;
pub mod resolver;
pub mod smiles;
pub mod stats;

pub use classifier::{
    classify_energetic, train_linear_classifier, Classification, LinearModel, Metrics, SvmConfig,
    TrainedClassifier,
};
pub use features::{bond_key, featurize_sum_over_bonds, BondCounts, FeatureSchema, FeatureVector};
pub use gazetteer::{find_chemical_mentions, find_chemical_mentions_in_tokens, Gazetteer, Mention};
pub use lexicon::{merged_form, ChemLexicon, LexEntry};
pub use resolver::{Resolved, Resolver};
pub use smiles::{parse_smiles, write_smiles, BondOrder, MolGraph, SmilesError};
pub use stats::{mention_stats, MentionStat};
