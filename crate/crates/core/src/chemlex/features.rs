use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::smiles::{Bond, MolGraph};

/// Ordered bond-type keys defining the columns of a feature vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureSchema(Vec<String>);

impl FeatureSchema {
    pub fn new<S: Into<String>>(keys: impl IntoIterator<Item = S>) -> Self {
        FeatureSchema(keys.into_iter().map(Into::into).collect())
    }

    /// Sorted union of the bond keys occurring in `graphs`.
    pub fn from_graphs<'a>(graphs: impl IntoIterator<Item = &'a MolGraph>) -> Self {
        let keys: BTreeSet<String> = graphs
            .into_iter()
            .flat_map(|g| g.bonds.iter().map(move |b| bond_key(g, b)))
            .collect();
        FeatureSchema(keys.into_iter().collect())
    }

    pub fn keys(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub schema: Arc<FeatureSchema>,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>, schema: Arc<FeatureSchema>) -> crate::Result<Self> {
        if values.len() != schema.len() {
            return Err(crate::Error::DimensionMismatch {
                expected: schema.len(),
                actual: values.len(),
            });
        }
        Ok(FeatureVector { values, schema })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BondCounts {
    pub features: FeatureVector,
    /// Bonds whose key is not in the schema.
    pub unknown_bonds: usize,
}

/// `"A-B:order"` with the two element symbols in alphabetical order.
pub fn bond_key(graph: &MolGraph, bond: &Bond) -> String {
    let x = graph.atoms[bond.a].element.as_str();
    let y = graph.atoms[bond.b].element.as_str();
    let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
    format!("{lo}-{hi}:{}", bond.order.key())
}

pub fn featurize_sum_over_bonds(mol: &MolGraph, schema: &Arc<FeatureSchema>) -> BondCounts {
    let column: HashMap<&str, usize> = schema
        .keys()
        .iter()
        .enumerate()
        .map(|(i, k)| (k.as_str(), i))
        .collect();
    let mut values = vec![0.0; schema.len()];
    let mut unknown_bonds = 0;
    for bond in &mol.bonds {
        match column.get(bond_key(mol, bond).as_str()) {
            Some(&i) => values[i] += 1.0,
            None => unknown_bonds += 1,
        }
    }
    BondCounts {
        features: FeatureVector {
            values,
            schema: Arc::clone(schema),
        },
        unknown_bonds,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chemlex::smiles::parse_smiles;

    fn schema(keys: &[&str]) -> Arc<FeatureSchema> {
        Arc::new(FeatureSchema::new(keys.iter().copied()))
    }

    #[test]
    fn ethanol_counts() {
        let g = parse_smiles("CCO").unwrap();
        let out = featurize_sum_over_bonds(&g, &schema(&["C-C:1", "C-O:1", "N-O:2"]));
        assert_eq!(out.features.values, vec![1.0, 1.0, 0.0]);
        assert_eq!(out.unknown_bonds, 0);
    }

    #[test]
    fn empty_molecule_is_zero() {
        let g = parse_smiles("").unwrap();
        let out = featurize_sum_over_bonds(&g, &schema(&["C-C:1", "C-O:1"]));
        assert_eq!(out.features.values, vec![0.0, 0.0]);
    }

    #[test]
    fn carbon_dioxide_double_bonds() {
        let g = parse_smiles("O=C=O").unwrap();
        let out = featurize_sum_over_bonds(&g, &schema(&["C-O:2"]));
        assert_eq!(out.features.values, vec![2.0]);
    }

    #[test]
    fn unknown_bonds_are_tallied() {
        let g = parse_smiles("CC=N").unwrap();
        let out = featurize_sum_over_bonds(&g, &schema(&["C-C:1"]));
        assert_eq!(out.features.values, vec![1.0]);
        assert_eq!(out.unknown_bonds, 1);
    }

    #[test]
    fn keys_sort_elements_and_mark_aromatic() {
        let g = parse_smiles("c1ccncc1O").unwrap();
        let s = FeatureSchema::from_graphs([&g]);
        assert_eq!(s.keys(), &["C-C:ar", "C-N:ar", "C-O:1"]);
    }
}
