use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::CardError;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Bm25Params<T> {
    pub k1: T,
    pub b: T,
}

impl<T: Scalar> Default for Bm25Params<T> {
    fn default() -> Self {
        Bm25Params {
            k1: T::of(1.2),
            b: T::of(0.75),
        }
    }
}

impl<T: Scalar> Bm25Params<T> {
    pub fn new(k1: T, b: T) -> Result<Self, CardError> {
        if !(k1 > T::zero()) || !(b >= T::zero() && b <= T::one()) {
            return Err(CardError::InvalidParams(format!("k1 = {k1}, b = {b}")));
        }
        Ok(Bm25Params { k1, b })
    }
}

/// `ln(1 + (N − df + 0.5) / (df + 0.5))`, always positive.
pub fn bm25_idf<T: Scalar>(df: u64, n_docs: u64) -> T {
    let (df, n) = (T::of(df as f64), T::of(n_docs as f64));
    let half = T::of(0.5);
    (T::one() + (n - df + half) / (df + half)).ln()
}

pub fn bm25_weight<T: Scalar>(
    tf: u64,
    dl: u64,
    avgdl: T,
    df: u64,
    n_docs: u64,
    params: &Bm25Params<T>,
) -> Result<T, CardError> {
    if tf == 0 || df == 0 || dl == 0 || n_docs < df || !(avgdl > T::zero()) {
        return Err(CardError::InvalidParams(format!(
            "bm25 needs tf, df, dl ≥ 1, n_docs ≥ df, avgdl > 0 (tf {tf}, dl {dl}, avgdl {avgdl}, df {df}, n {n_docs})"
        )));
    }
    let Bm25Params { k1, b } = *params;
    let tf = T::of(tf as f64);
    let norm = T::one() - b + b * T::of(dl as f64) / avgdl;
    Ok(bm25_idf::<T>(df, n_docs) * tf * (k1 + T::one()) / (tf + k1 * norm))
}

/// Per-document topic counts and length in tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocTermStats {
    pub doc_id: String,
    pub length: u64,
    /// Topic key → mention count.
    pub counts: BTreeMap<String, u64>,
}

/// Sparse topic × document matrix stored by document column.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseTopicDocMatrix<T> {
    topic_ids: Vec<String>,
    doc_ids: Vec<String>,
    /// Per column, `(topic index, weight)` sorted by topic index.
    columns: Vec<Vec<(usize, T)>>,
    topic_index: HashMap<String, usize>,
    doc_index: HashMap<String, usize>,
}

impl<T: Scalar> SparseTopicDocMatrix<T> {
    pub fn new(
        topic_ids: Vec<String>,
        doc_ids: Vec<String>,
        mut columns: Vec<Vec<(usize, T)>>,
    ) -> Result<Self, CardError> {
        let bad = |why: String| Err(CardError::InvalidMatrix(why));
        if columns.len() != doc_ids.len() {
            return bad(format!("{} columns for {} documents", columns.len(), doc_ids.len()));
        }
        let topic_index = index_of(&topic_ids).map_err(CardError::InvalidMatrix)?;
        let doc_index = index_of(&doc_ids).map_err(CardError::InvalidMatrix)?;
        for (j, col) in columns.iter_mut().enumerate() {
            col.sort_by_key(|&(i, _)| i);
            for w in col.windows(2) {
                if w[0].0 == w[1].0 {
                    return bad(format!("duplicate entry ({}, {j})", w[0].0));
                }
            }
            for &(i, w) in col.iter() {
                if i >= topic_ids.len() {
                    return bad(format!("topic index {i} out of range"));
                }
                if !(w.is_finite() && w > T::zero()) {
                    return bad(format!("weight at ({i}, {j}) must be finite and positive"));
                }
            }
        }
        Ok(SparseTopicDocMatrix {
            topic_ids,
            doc_ids,
            columns,
            topic_index,
            doc_index,
        })
    }

    pub fn n_topics(&self) -> usize {
        self.topic_ids.len()
    }

    pub fn n_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    pub fn topic_ids(&self) -> &[String] {
        &self.topic_ids
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn topic_index(&self, key: &str) -> Option<usize> {
        self.topic_index.get(key).copied()
    }

    pub fn doc_index(&self, doc_id: &str) -> Option<usize> {
        self.doc_index.get(doc_id).copied()
    }

    pub fn column(&self, j: usize) -> &[(usize, T)] {
        &self.columns[j]
    }

    pub fn get(&self, i: usize, j: usize) -> Option<T> {
        let col = &self.columns[j];
        col.binary_search_by_key(&i, |&(t, _)| t).ok().map(|p| col[p].1)
    }

    pub fn frobenius_norm(&self) -> T {
        self.columns
            .iter()
            .flatten()
            .map(|&(_, w)| w * w)
            .sum::<T>()
            .sqrt()
    }
}

fn index_of(ids: &[String]) -> Result<HashMap<String, usize>, String> {
    let mut map = HashMap::with_capacity(ids.len());
    for (i, id) in ids.iter().enumerate() {
        if map.insert(id.clone(), i).is_some() {
            return Err(format!("duplicate id {id:?}"));
        }
    }
    Ok(map)
}

/// Matrix plus the topics dropped for having no occurrences.
#[derive(Debug, Clone)]
pub struct BuiltMatrix<T> {
    pub matrix: SparseTopicDocMatrix<T>,
    pub excluded_topics: Vec<String>,
}

/// One row per topic that occurs somewhere, one column per document holding
/// at least one of them. Corpus statistics (N, avgdl, df) use every document
/// in `docs`.
pub fn build_matrix<T: Scalar>(
    topics: &[String],
    docs: &[DocTermStats],
    params: &Bm25Params<T>,
) -> Result<BuiltMatrix<T>, CardError> {
    let n_docs = docs.len() as u64;
    let mut df: BTreeMap<&str, u64> = BTreeMap::new();
    for d in docs {
        for (k, &c) in &d.counts {
            if c > 0 {
                *df.entry(k.as_str()).or_default() += 1;
            }
        }
    }
    let mut kept = Vec::new();
    let mut seen = HashSet::new();
    let mut excluded_topics = Vec::new();
    for t in topics {
        if df.contains_key(t.as_str()) {
            if seen.insert(t.as_str()) {
                kept.push(t.clone());
            }
        } else {
            log::warn!("topic {t:?} does not occur in the corpus; left out of the matrix");
            excluded_topics.push(t.clone());
        }
    }
    let row: HashMap<&str, usize> = kept.iter().enumerate().map(|(i, k)| (k.as_str(), i)).collect();
    let avgdl = if docs.is_empty() {
        T::one()
    } else {
        T::of(docs.iter().map(|d| d.length.max(1)).sum::<u64>() as f64 / docs.len() as f64)
    };
    let columns: Vec<Option<(String, Vec<(usize, T)>)>> = docs
        .par_iter()
        .map(|d| {
            let mut col = Vec::new();
            for (k, &tf) in &d.counts {
                if let (Some(&i), true) = (row.get(k.as_str()), tf > 0) {
                    col.push((i, bm25_weight(tf, d.length.max(1), avgdl, df[k.as_str()], n_docs, params)?));
                }
            }
            Ok::<_, CardError>((!col.is_empty()).then(|| (d.doc_id.clone(), col)))
        })
        .collect::<Result<_, _>>()?;
    let (doc_ids, columns): (Vec<String>, Vec<_>) = columns.into_iter().flatten().unzip();
    Ok(BuiltMatrix {
        matrix: SparseTopicDocMatrix::new(kept, doc_ids, columns)?,
        excluded_topics,
    })
}
