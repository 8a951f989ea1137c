use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::EmbeddingSpace;
use crate::topicrank::normalize_key;
use crate::Scalar;

const ACRONYM_STOPWORDS: [&str; 6] = ["of", "and", "for", "the", "on", "in"];

fn trim_punct(s: &str) -> &str {
    s.trim_matches(|c: char| !c.is_alphanumeric())
}

fn long_form_for(before: &str, acronym: &str) -> Option<String> {
    let words: Vec<&str> = before.split_whitespace().collect();
    let letters: Vec<char> = acronym.chars().collect();
    let mut li = letters.len();
    let mut wi = words.len();
    let mut start = wi;
    while li > 0 {
        wi = wi.checked_sub(1)?;
        let w = trim_punct(words[wi]);
        let first = w.chars().next()?;
        // inner stopwords may supply a letter ("Bank of America", BOA) or be skipped
        if li < letters.len() && ACRONYM_STOPWORDS.contains(&w.to_lowercase().as_str()) {
            if li > 1 && first.to_ascii_uppercase() == letters[li - 1] {
                li -= 1;
            }
            continue;
        }
        if !first.is_uppercase() || first != letters[li - 1] {
            return None;
        }
        li -= 1;
        start = wi;
    }
    let long = words[start..].join(" ");
    Some(trim_punct(&long).to_string())
}

/// `(long form, acronym)` pairs written as `Long Form (LF)`, where the
/// acronym is 2 to 6 uppercase letters and each letter is the initial of a
/// preceding capitalized word, in order. Sorted, deduplicated.
pub fn extract_acronym_aliases<'a>(sentences: impl IntoIterator<Item = &'a str>) -> Vec<(String, String)> {
    let mut out = BTreeSet::new();
    for s in sentences {
        let mut from = 0;
        while let Some(open) = s[from..].find('(').map(|p| p + from) {
            let Some(close) = s[open..].find(')').map(|p| p + open) else {
                break;
            };
            let inner = s[open + 1..close].trim();
            if (2..=6).contains(&inner.len()) && inner.chars().all(|c| c.is_ascii_uppercase()) {
                if let Some(long) = long_form_for(&s[..open], inner) {
                    out.insert((long, inner.to_string()));
                }
            }
            from = open + 1;
        }
    }
    out.into_iter().collect()
}

fn trigrams(key: &str) -> BTreeSet<String> {
    let chars: Vec<char> = key.chars().collect();
    if chars.len() < 3 {
        return BTreeSet::from([key.to_string()]);
    }
    chars.windows(3).map(|w| w.iter().collect()).collect()
}

pub fn jaccard<E: Ord>(a: &BTreeSet<E>, b: &BTreeSet<E>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// Jaccard similarity of character trigram sets.
pub fn trigram_jaccard(a: &str, b: &str) -> f64 {
    jaccard(&trigrams(a), &trigrams(b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConflationConfig {
    /// τ as a fraction of the largest pairwise cosine between topic vectors.
    pub tau_fraction: f64,
    /// Absolute τ; overrides `tau_fraction` when set.
    pub tau: Option<f64>,
    pub min_trigram_jaccard: f64,
    pub min_doc_jaccard: f64,
}

impl Default for ConflationConfig {
    fn default() -> Self {
        ConflationConfig {
            tau_fraction: 0.6,
            tau: None,
            min_trigram_jaccard: 0.4,
            min_doc_jaccard: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ConflationCandidate<'a> {
    pub key: &'a str,
    pub ner_frequency: u64,
    pub doc_ids: &'a BTreeSet<String>,
}

/// Normalized acronym pairs usable by [`conflate`].
pub fn acronym_key_pairs(pairs: &[(String, String)]) -> BTreeSet<(String, String)> {
    pairs
        .iter()
        .filter_map(|(l, a)| Some((normalize_key(l).ok()?, normalize_key(a).ok()?)))
        .collect()
}

fn unit<T: Scalar>(v: &[T]) -> Vec<f64> {
    let norm = v.iter().map(|x| x.as_f64() * x.as_f64()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return vec![0.0; v.len()];
    }
    v.iter().map(|x| x.as_f64() / norm).collect()
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// τ for this set of topics, or `None` with fewer than two embedded.
pub fn conflation_threshold<T: Scalar>(keys: &[&str], space: &EmbeddingSpace<T>, config: &ConflationConfig) -> Option<f64> {
    let units: Vec<Vec<f64>> = keys.iter().filter_map(|k| space.topics.get(k)).map(unit).collect();
    if units.len() < 2 {
        return None;
    }
    if let Some(tau) = config.tau {
        return Some(tau);
    }
    let mut best = f64::NEG_INFINITY;
    for i in 0..units.len() {
        for j in i + 1..units.len() {
            best = best.max(cosine(&units[i], &units[j]));
        }
    }
    Some(config.tau_fraction * best)
}

/// At least one anti-over-merge check passes.
pub fn passes_checks(
    a: &ConflationCandidate<'_>,
    b: &ConflationCandidate<'_>,
    acronyms: &BTreeSet<(String, String)>,
    config: &ConflationConfig,
) -> bool {
    let (ka, kb) = (a.key.to_string(), b.key.to_string());
    acronyms.contains(&(ka.clone(), kb.clone()))
        || acronyms.contains(&(kb, ka))
        || trigram_jaccard(a.key, b.key) >= config.min_trigram_jaccard
        || jaccard(a.doc_ids, b.doc_ids) >= config.min_doc_jaccard
}

/// Merge iff both are embedded, their cosine reaches `tau`, and a check passes.
pub fn conflate<T: Scalar>(
    a: &ConflationCandidate<'_>,
    b: &ConflationCandidate<'_>,
    space: &EmbeddingSpace<T>,
    tau: f64,
    acronyms: &BTreeSet<(String, String)>,
    config: &ConflationConfig,
) -> bool {
    let (Some(va), Some(vb)) = (space.topics.get(a.key), space.topics.get(b.key)) else {
        return false;
    };
    tau > 0.0 && cosine(&unit(va), &unit(vb)) >= tau && passes_checks(a, b, acronyms, config)
}

/// Partition of topic keys into conflated groups.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conflation {
    canonical: BTreeMap<String, String>,
}

impl Conflation {
    /// Keys never seen map to themselves.
    pub fn canonical_of<'a>(&'a self, key: &'a str) -> &'a str {
        self.canonical.get(key).map_or(key, String::as_str)
    }

    pub fn is_canonical(&self, key: &str) -> bool {
        self.canonical_of(key) == key
    }

    /// Canonical key → merged-in keys (sorted), for every group.
    pub fn aliases(&self) -> BTreeMap<String, Vec<String>> {
        let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (k, c) in &self.canonical {
            let entry = out.entry(c.clone()).or_default();
            if k != c {
                entry.push(k.clone());
            }
        }
        out
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Union-find over merging pairs; each group's canonical key has the highest
/// NER frequency, ties to the smaller key.
pub fn conflate_topics<T: Scalar>(
    candidates: &[ConflationCandidate<'_>],
    space: &EmbeddingSpace<T>,
    acronyms: &BTreeSet<(String, String)>,
    config: &ConflationConfig,
) -> Conflation {
    let n = candidates.len();
    let mut parent: Vec<usize> = (0..n).collect();
    let keys: Vec<&str> = candidates.iter().map(|c| c.key).collect();
    if let Some(tau) = conflation_threshold(&keys, space, config) {
        for i in 0..n {
            for j in i + 1..n {
                if conflate(&candidates[i], &candidates[j], space, tau, acronyms, config) {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[ri.max(rj)] = ri.min(rj);
                    }
                }
            }
        }
    }
    let mut best: BTreeMap<usize, usize> = BTreeMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        let e = best.entry(root).or_insert(i);
        let (ci, ce) = (&candidates[i], &candidates[*e]);
        if (ci.ner_frequency, std::cmp::Reverse(ci.key)) > (ce.ner_frequency, std::cmp::Reverse(ce.key)) {
            *e = i;
        }
    }
    let mut canonical = BTreeMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        canonical.insert(candidates[i].key.to_string(), candidates[best[&root]].key.to_string());
    }
    Conflation { canonical }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cardbuild::EmbeddingTable;

    #[test]
    fn acronym_rules() {
        let got = extract_acronym_aliases([
            "Contoso Knowledge Hub (CKH) launched.",
            "The World Health Organization (WHO) said so.",
            "A result (see Chart 2) follows.",
            "Bank of America (BOA) and Department of Energy (DE).",
            "random words (RW)",
        ]);
        assert_eq!(
            got,
            vec![
                ("Bank of America".to_string(), "BOA".to_string()),
                ("Contoso Knowledge Hub".to_string(), "CKH".to_string()),
                ("Department of Energy".to_string(), "DE".to_string()),
                ("World Health Organization".to_string(), "WHO".to_string()),
            ]
        );
    }

    #[test]
    fn trigram_similarity() {
        assert_eq!(trigram_jaccard("abcd", "abcd"), 1.0);
        assert_eq!(trigram_jaccard("abcd", "wxyz"), 0.0);
        assert!((trigram_jaccard("abcd", "abce") - 1.0 / 3.0).abs() < 1e-12);
    }

    fn space(rows: &[(&str, [f64; 2])]) -> EmbeddingSpace<f64> {
        EmbeddingSpace {
            singular_values: vec![1.0, 1.0],
            topics: EmbeddingTable::new(
                rows.iter().map(|r| r.0.to_string()).collect(),
                2,
                rows.iter().flat_map(|r| r.1).collect(),
            )
            .unwrap(),
            docs: EmbeddingTable::empty(2),
            users: EmbeddingTable::empty(2),
        }
    }

    #[test]
    fn acronym_merge_keeps_frequent_key() {
        let s = space(&[("contoso knowledge hub", [1.0, 0.1]), ("ckh", [0.9, 0.1]), ("payroll", [0.0, 1.0])]);
        let (d1, d2, d3) = (
            BTreeSet::from(["a".to_string()]),
            BTreeSet::from(["b".to_string()]),
            BTreeSet::from(["c".to_string()]),
        );
        let cands = [
            ConflationCandidate { key: "contoso knowledge hub", ner_frequency: 10, doc_ids: &d1 },
            ConflationCandidate { key: "ckh", ner_frequency: 3, doc_ids: &d2 },
            ConflationCandidate { key: "payroll", ner_frequency: 5, doc_ids: &d3 },
        ];
        let acr = acronym_key_pairs(&[("Contoso Knowledge Hub".into(), "CKH".into())]);
        let c = conflate_topics(&cands, &s, &acr, &ConflationConfig::default());
        assert_eq!(c.canonical_of("ckh"), "contoso knowledge hub");
        assert_eq!(c.canonical_of("payroll"), "payroll");
        assert_eq!(c.aliases()["contoso knowledge hub"], vec!["ckh".to_string()]);
        // same geometry without the acronym: checks gate the merge
        let c = conflate_topics(&cands, &s, &BTreeSet::new(), &ConflationConfig::default());
        assert_eq!(c.canonical_of("ckh"), "ckh");
    }
}
