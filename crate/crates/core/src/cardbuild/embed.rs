use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CardError, SparseTopicDocMatrix, SvdFactors};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingKind {
    Topic,
    Doc,
    User,
}

impl EmbeddingKind {
    pub fn code(self) -> u64 {
        match self {
            EmbeddingKind::Topic => 0,
            EmbeddingKind::Doc => 1,
            EmbeddingKind::User => 2,
        }
    }

    pub fn from_code(code: u64) -> Option<Self> {
        match code {
            0 => Some(EmbeddingKind::Topic),
            1 => Some(EmbeddingKind::Doc),
            2 => Some(EmbeddingKind::User),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EmbeddingKind::Topic => "topic",
            EmbeddingKind::Doc => "doc",
            EmbeddingKind::User => "user",
        }
    }
}

/// Named rows of equal dimension, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable<T> {
    ids: Vec<String>,
    dim: usize,
    data: Vec<T>,
    index: HashMap<String, usize>,
}

impl<T: Scalar> EmbeddingTable<T> {
    pub fn new(ids: Vec<String>, dim: usize, data: Vec<T>) -> Result<Self, CardError> {
        if data.len() != ids.len() * dim {
            return Err(CardError::DimensionMismatch {
                left: data.len(),
                right: ids.len() * dim,
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(CardError::InvalidMatrix("non-finite embedding value".into()));
        }
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(CardError::InvalidMatrix(format!("duplicate id {id:?}")));
            }
        }
        Ok(EmbeddingTable { ids, dim, data, index })
    }

    pub fn empty(dim: usize) -> Self {
        EmbeddingTable {
            ids: Vec::new(),
            dim,
            data: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn get(&self, id: &str) -> Option<&[T]> {
        self.position(id).map(|i| self.row(i))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSpace<T> {
    pub singular_values: Vec<T>,
    pub topics: EmbeddingTable<T>,
    pub docs: EmbeddingTable<T>,
    pub users: EmbeddingTable<T>,
}

impl<T: Scalar> EmbeddingSpace<T> {
    /// Topic and doc rows from the factorization; users from authorship.
    /// `authors` maps doc id to author id; empty author ids are ignored.
    pub fn from_factors(
        factors: SvdFactors<T>,
        matrix: &SparseTopicDocMatrix<T>,
        authors: &BTreeMap<String, String>,
    ) -> Result<Self, CardError> {
        let d = factors.rank;
        let topics = EmbeddingTable::new(matrix.topic_ids().to_vec(), d, factors.topic_vectors)?;
        let docs = EmbeddingTable::new(matrix.doc_ids().to_vec(), d, factors.doc_vectors)?;
        let users = build_user_table(&docs, authors)?;
        Ok(EmbeddingSpace {
            singular_values: factors.singular_values,
            topics,
            docs,
            users,
        })
    }

    pub fn empty(dim: usize) -> Self {
        EmbeddingSpace {
            singular_values: Vec::new(),
            topics: EmbeddingTable::empty(dim),
            docs: EmbeddingTable::empty(dim),
            users: EmbeddingTable::empty(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.topics.dim()
    }

    pub fn table(&self, kind: EmbeddingKind) -> &EmbeddingTable<T> {
        match kind {
            EmbeddingKind::Topic => &self.topics,
            EmbeddingKind::Doc => &self.docs,
            EmbeddingKind::User => &self.users,
        }
    }
}

pub fn relatedness<T: Scalar>(a: &[T], b: &[T]) -> Result<T, CardError> {
    if a.len() != b.len() {
        return Err(CardError::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(&x, &y)| x * y).sum())
}

/// Mean of the authored documents' rows; `None` when none are embedded.
pub fn user_embedding<T: Scalar>(authored: &[usize], docs: &EmbeddingTable<T>) -> Option<Vec<T>> {
    if authored.is_empty() {
        return None;
    }
    let mut acc = vec![T::zero(); docs.dim()];
    for &j in authored {
        for (a, &x) in acc.iter_mut().zip(docs.row(j)) {
            *a = *a + x;
        }
    }
    let n = T::of(authored.len() as f64);
    Some(acc.into_iter().map(|a| a / n).collect())
}

/// Users sorted by id.
pub fn build_user_table<T: Scalar>(
    docs: &EmbeddingTable<T>,
    authors: &BTreeMap<String, String>,
) -> Result<EmbeddingTable<T>, CardError> {
    let mut authored: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (doc_id, author) in authors {
        if author.is_empty() {
            continue;
        }
        if let Some(j) = docs.position(doc_id) {
            authored.entry(author.as_str()).or_default().push(j);
        }
    }
    let mut ids = Vec::new();
    let mut data = Vec::new();
    for (author, rows) in authored {
        if let Some(v) = user_embedding(&rows, docs) {
            ids.push(author.to_string());
            data.extend(v);
        }
    }
    EmbeddingTable::new(ids, docs.dim(), data)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Related {
    pub id: String,
    pub score: f64,
}

/// The `k` rows of `kind` most related to topic `query`, descending, ties by
/// id. The query itself is never returned.
pub fn top_k_related<T: Scalar>(
    query: &str,
    space: &EmbeddingSpace<T>,
    kind: EmbeddingKind,
    k: usize,
) -> Result<Vec<Related>, CardError> {
    top_k_related_where(query, space, kind, k, |_| true)
}

/// As [`top_k_related`], restricted to ids accepted by `keep`.
pub fn top_k_related_where<T: Scalar>(
    query: &str,
    space: &EmbeddingSpace<T>,
    kind: EmbeddingKind,
    k: usize,
    keep: impl Fn(&str) -> bool,
) -> Result<Vec<Related>, CardError> {
    let q = space
        .topics
        .get(query)
        .ok_or_else(|| CardError::UnknownId(query.to_string()))?;
    if k == 0 {
        return Ok(Vec::new());
    }
    let table = space.table(kind);
    let mut scored = Vec::new();
    for (i, id) in table.ids().iter().enumerate() {
        if (kind == EmbeddingKind::Topic && id == query) || !keep(id) {
            continue;
        }
        scored.push(Related {
            id: id.clone(),
            score: relatedness(q, table.row(i))?.as_f64(),
        });
    }
    scored.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.id.cmp(&b.id)));
    scored.truncate(k);
    Ok(scored)
}

#[derive(Serialize, Deserialize)]
struct EmbeddingIndex {
    kind: EmbeddingKind,
    rows: usize,
    dim: usize,
    ids: BTreeMap<String, usize>,
}

const HEADER_BYTES: usize = 24;

/// Writes `<stem>.bin` (three little-endian u64 header words `n, d, kind`,
/// then row-major little-endian f64) and `<stem>.json` (id → row).
pub fn write_embeddings<T: Scalar>(
    table: &EmbeddingTable<T>,
    kind: EmbeddingKind,
    dir: &Path,
    stem: &str,
) -> Result<(), CardError> {
    let bin = dir.join(format!("{stem}.bin"));
    let io = |path: &Path| {
        let p = path.display().to_string();
        move |source| CardError::Io { path: p, source }
    };
    let mut buf = Vec::with_capacity(HEADER_BYTES + table.data().len() * 8);
    for word in [table.len() as u64, table.dim() as u64, kind.code()] {
        buf.extend_from_slice(&word.to_le_bytes());
    }
    for x in table.data() {
        buf.extend_from_slice(&x.as_f64().to_le_bytes());
    }
    std::fs::File::create(&bin)
        .and_then(|mut f| f.write_all(&buf))
        .map_err(io(&bin))?;
    let index = EmbeddingIndex {
        kind,
        rows: table.len(),
        dim: table.dim(),
        ids: table.ids().iter().enumerate().map(|(i, id)| (id.clone(), i)).collect(),
    };
    let json = dir.join(format!("{stem}.json"));
    let text = serde_json::to_vec_pretty(&index).map_err(|e| CardError::Format(e.to_string()))?;
    std::fs::write(&json, text).map_err(io(&json))
}

pub fn read_embeddings<T: Scalar>(bin: &Path, json: &Path) -> Result<(EmbeddingKind, EmbeddingTable<T>), CardError> {
    let io = |path: &Path| {
        let p = path.display().to_string();
        move |source| CardError::Io { path: p, source }
    };
    let mut bytes = Vec::new();
    std::fs::File::open(bin)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(io(bin))?;
    if bytes.len() < HEADER_BYTES {
        return Err(CardError::Format("embedding file shorter than its header".into()));
    }
    let word = |i: usize| u64::from_le_bytes(bytes[i * 8..i * 8 + 8].try_into().expect("eight bytes"));
    let (n, d) = (word(0) as usize, word(1) as usize);
    let kind = EmbeddingKind::from_code(word(2)).ok_or_else(|| CardError::Format("unknown embedding kind".into()))?;
    if bytes.len() != HEADER_BYTES + n * d * 8 {
        return Err(CardError::Format(format!("expected {n} × {d} values")));
    }
    let data: Vec<T> = bytes[HEADER_BYTES..]
        .chunks_exact(8)
        .map(|c| T::of(f64::from_le_bytes(c.try_into().expect("eight bytes"))))
        .collect();
    let text = std::fs::read(json).map_err(io(json))?;
    let index: EmbeddingIndex = serde_json::from_slice(&text).map_err(|e| CardError::Format(e.to_string()))?;
    if index.rows != n || index.dim != d || index.kind != kind || index.ids.len() != n {
        return Err(CardError::Format("index does not match the binary header".into()));
    }
    let mut ids = vec![String::new(); n];
    for (id, row) in index.ids {
        if row >= n || !ids[row].is_empty() {
            return Err(CardError::Format(format!("bad row {row} for {id:?}")));
        }
        ids[row] = id;
    }
    Ok((kind, EmbeddingTable::new(ids, d, data)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: &[(&str, &[f64])]) -> EmbeddingTable<f64> {
        let dim = rows.first().map_or(0, |r| r.1.len());
        EmbeddingTable::new(
            rows.iter().map(|r| r.0.to_string()).collect(),
            dim,
            rows.iter().flat_map(|r| r.1.iter().copied()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn dot_products() {
        assert_eq!(relatedness(&[1.0, 2.0], &[3.0, -1.0]).unwrap(), 1.0);
        assert_eq!(relatedness(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!(relatedness(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn user_means() {
        let docs = table(&[("a", &[1.0, 2.0]), ("b", &[-1.0, -2.0]), ("c", &[3.0, 0.0])]);
        assert_eq!(user_embedding(&[2], &docs).unwrap(), vec![3.0, 0.0]);
        assert_eq!(user_embedding(&[0, 1], &docs).unwrap(), vec![0.0, 0.0]);
        assert_eq!(user_embedding(&[], &docs), None);
        let authors = BTreeMap::from([
            ("a".to_string(), "u1".to_string()),
            ("c".to_string(), "u1".to_string()),
            ("zz".to_string(), "u2".to_string()),
            ("b".to_string(), String::new()),
        ]);
        let users = build_user_table(&docs, &authors).unwrap();
        assert_eq!(users.ids(), ["u1".to_string()]);
        assert_eq!(users.get("u1").unwrap(), [2.0, 1.0]);
    }

    #[test]
    fn top_k_excludes_self_and_breaks_ties_by_id() {
        let space = EmbeddingSpace {
            singular_values: vec![1.0, 1.0],
            topics: table(&[("q", &[1.0, 0.0]), ("b", &[1.0, 0.0]), ("a", &[1.0, 0.0]), ("c", &[0.0, 1.0])]),
            docs: EmbeddingTable::empty(2),
            users: EmbeddingTable::empty(2),
        };
        let out = top_k_related("q", &space, EmbeddingKind::Topic, 2).unwrap();
        let ids: Vec<&str> = out.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["a", "b"]);
        assert!(top_k_related("q", &space, EmbeddingKind::Topic, 0).unwrap().is_empty());
        assert!(top_k_related("missing", &space, EmbeddingKind::Topic, 1).is_err());
    }

    #[test]
    fn binary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let t = table(&[("x/y", &[1.5, -2.0]), ("z", &[0.25, 3.0])]);
        write_embeddings(&t, EmbeddingKind::Doc, dir.path(), "docs").unwrap();
        let bytes = std::fs::read(dir.path().join("docs.bin")).unwrap();
        assert_eq!(bytes.len(), 24 + 4 * 8);
        assert_eq!(&bytes[16..24], &1u64.to_le_bytes());
        let (kind, back) =
            read_embeddings::<f64>(&dir.path().join("docs.bin"), &dir.path().join("docs.json")).unwrap();
        assert_eq!(kind, EmbeddingKind::Doc);
        assert_eq!(back, t);
    }
}
