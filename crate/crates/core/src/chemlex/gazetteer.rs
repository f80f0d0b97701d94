//! Dictionary matching of chemical names in running text and lists.

use std::collections::HashMap;

use serde::Serialize;

use super::lexicon::{merged_form, surface_key, ChemLexicon};
use crate::textprep::is_dash;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Mention {
    /// Index of the lexicon entry.
    pub entry: usize,
    /// Byte span in the searched text.
    pub start: usize,
    pub end: usize,
    pub surface: String,
}

#[derive(Debug, Default, Clone)]
struct Node {
    children: HashMap<char, u32>,
    entry: Option<u32>,
}

/// Character trie over the lowercase names, synonyms and merged forms of a lexicon.
#[derive(Debug, Clone)]
pub struct Gazetteer {
    nodes: Vec<Node>,
}

fn fold(c: char) -> char {
    if c.is_whitespace() {
        ' '
    } else if is_dash(c) {
        '-'
    } else {
        c.to_lowercase().next().unwrap_or(c)
    }
}

impl Gazetteer {
    pub fn new(lexicon: &ChemLexicon) -> Self {
        let mut g = Gazetteer {
            nodes: vec![Node::default()],
        };
        for (id, entry) in lexicon.entries().iter().enumerate() {
            for name in entry.names() {
                if lexicon.is_stop_name(name) {
                    continue;
                }
                g.insert(&surface_key(name), id as u32);
                g.insert(&merged_form(name), id as u32);
            }
        }
        g
    }

    fn insert(&mut self, key: &str, entry: u32) {
        if key.is_empty() {
            return;
        }
        let mut node = 0usize;
        for c in key.chars().map(fold) {
            node = match self.nodes[node].children.get(&c) {
                Some(&next) => next as usize,
                None => {
                    self.nodes.push(Node::default());
                    let next = self.nodes.len() - 1;
                    self.nodes[node].children.insert(c, next as u32);
                    next
                }
            };
        }
        // The first entry registered for a key wins; the lexicon rejects real collisions.
        self.nodes[node].entry.get_or_insert(entry);
    }

    /// Finds all mentions, case-insensitively. Matches must start and end at a
    /// non-alphanumeric boundary. Overlaps are resolved in favor of the longer
    /// span, then the earlier one.
    pub fn find(&self, text: &str) -> Vec<Mention> {
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let n = chars.len();
        let byte_at = |i: usize| if i < n { chars[i].0 } else { text.len() };
        let boundary = |i: usize| i >= n || !chars[i].1.is_alphanumeric();

        // (start char, end char, entry)
        let mut candidates: Vec<(usize, usize, u32)> = Vec::new();
        for start in 0..n {
            if start > 0 && chars[start - 1].1.is_alphanumeric() {
                continue;
            }
            let mut node = 0usize;
            let mut best = None;
            for (i, &(_, c)) in chars.iter().enumerate().skip(start) {
                match self.nodes[node].children.get(&fold(c)) {
                    Some(&next) => node = next as usize,
                    None => break,
                }
                if let Some(entry) = self.nodes[node].entry {
                    if boundary(i + 1) {
                        best = Some((i + 1, entry));
                    }
                }
            }
            if let Some((end, entry)) = best {
                candidates.push((start, end, entry));
            }
        }

        candidates.sort_by(|a, b| (b.1 - b.0).cmp(&(a.1 - a.0)).then(a.0.cmp(&b.0)));
        let mut taken = vec![false; n];
        let mut chosen = Vec::new();
        for (s, e, entry) in candidates {
            if taken[s..e].iter().any(|&t| t) {
                continue;
            }
            taken[s..e].iter_mut().for_each(|t| *t = true);
            chosen.push((s, e, entry));
        }
        chosen.sort_by_key(|c| c.0);
        chosen
            .into_iter()
            .map(|(s, e, entry)| {
                let (start, end) = (byte_at(s), byte_at(e));
                Mention {
                    entry: entry as usize,
                    start,
                    end,
                    surface: text[start..end].to_owned(),
                }
            })
            .collect()
    }
}

/// Gazetteer lookup over raw text.
pub fn find_chemical_mentions(text: &str, gazetteer: &Gazetteer) -> Vec<Mention> {
    gazetteer.find(text)
}

/// Gazetteer lookup over a token list; spans index into the space-joined tokens.
pub fn find_chemical_mentions_in_tokens<S: AsRef<str>>(tokens: &[S], gazetteer: &Gazetteer) -> Vec<Mention> {
    let joined = tokens.iter().map(AsRef::as_ref).collect::<Vec<_>>().join(" ");
    gazetteer.find(&joined)
}
