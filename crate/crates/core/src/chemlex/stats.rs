use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use super::gazetteer::Gazetteer;
use super::lexicon::ChemLexicon;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MentionStat {
    pub entry: usize,
    pub name: String,
    /// Occurrences of any of the entry's token forms.
    pub n: u64,
    /// Occurrences that the gazetteer also recognizes as a mention of the entry.
    pub n_ner: u64,
}

/// Per-chemical corpus counts over tokenized sentences, for chemicals that
/// occur at least once, sorted by `n` descending then name.
///
/// A token counts toward `n_ner` only when a gazetteer mention of the same
/// entry covers exactly that token, so `n_ner <= n` always holds.
pub fn mention_stats<S: AsRef<str> + Sync>(
    sentences: &[Vec<S>],
    lexicon: &ChemLexicon,
    gazetteer: &Gazetteer,
) -> Vec<MentionStat> {
    let index = lexicon.token_index();
    let per_sentence = |tokens: &Vec<S>| {
        let mut counts: HashMap<usize, (u64, u64)> = HashMap::new();
        let mut spans = Vec::with_capacity(tokens.len());
        let mut joined = String::new();
        for (i, t) in tokens.iter().enumerate() {
            if i > 0 {
                joined.push(' ');
            }
            let start = joined.len();
            joined.push_str(t.as_ref());
            spans.push((start, joined.len()));
            if let Some(&e) = index.get(t.as_ref()) {
                counts.entry(e).or_default().0 += 1;
            }
        }
        if counts.is_empty() {
            return counts;
        }
        let mentions = gazetteer.find(&joined);
        for m in mentions {
            if let Ok(k) = spans.binary_search(&(m.start, m.end)) {
                if index.get(tokens[k].as_ref()) == Some(&m.entry) {
                    counts.entry(m.entry).or_default().1 += 1;
                }
            }
        }
        counts
    };
    let totals = sentences
        .par_iter()
        .map(per_sentence)
        .reduce(HashMap::new, |mut a, b| {
            for (k, (n, ner)) in b {
                let slot = a.entry(k).or_default();
                slot.0 += n;
                slot.1 += ner;
            }
            a
        });
    let mut out: Vec<MentionStat> = totals
        .into_iter()
        .map(|(entry, (n, n_ner))| MentionStat {
            entry,
            name: lexicon.entry(entry).canonical_name.clone(),
            n,
            n_ner,
        })
        .collect();
    out.sort_by(|a, b| b.n.cmp(&a.n).then_with(|| a.name.cmp(&b.name)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chemlex::LexEntry;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    #[test]
    fn counts_each_sentence() {
        let lex = ChemLexicon::seed();
        let g = Gazetteer::new(&lex);
        let sents = vec![toks("hmx charge"), toks("pressed hmx"), toks("hmx rdx")];
        let stats = mention_stats(&sents, &lex, &g);
        assert_eq!(stats[0].name, "HMX");
        assert_eq!(stats[0].n, 3);
        assert_eq!(stats[0].n_ner, 3);
        assert_eq!(stats[1].name, "RDX");
        assert_eq!(stats[1].n, 1);
    }

    #[test]
    fn ner_count_excludes_stop_names() {
        let mut lex = ChemLexicon::new(vec![LexEntry::new("tin").with_synonyms(["sn"])]).unwrap();
        lex.set_stop_names(["tin"]);
        let g = Gazetteer::new(&lex);
        let stats = mention_stats(&[toks("sn and tin")], &lex, &g);
        assert_eq!(stats[0].n, 1);
        assert_eq!(stats[0].n_ner, 1);
    }

    #[test]
    fn merged_forms_count() {
        let lex = ChemLexicon::seed();
        let g = Gazetteer::new(&lex);
        let stats = mention_stats(&[toks("ammoniumnitrate prills")], &lex, &g);
        assert_eq!(stats[0].name, "ammonium nitrate");
        assert_eq!((stats[0].n, stats[0].n_ner), (1, 1));
    }
}
