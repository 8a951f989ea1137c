//! Randomized SVD that streams the matrix by document batches.
//!
//! The Gaussian test matrix row for document `j` is drawn from its own
//! ChaCha stream (`seed`, stream `j`), and every accumulation walks columns
//! in index order, so the factors do not depend on the batch size.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::linalg::{absorb_row, jacobi_svd, orthonormalize, Dense};
use super::{CardError, SparseTopicDocMatrix};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvdConfig {
    pub rank: usize,
    pub oversampling: usize,
    pub power_iterations: usize,
    pub batch_size: usize,
    pub memory_budget: u64,
    pub seed: u64,
}

impl Default for SvdConfig {
    fn default() -> Self {
        SvdConfig {
            rank: 32,
            oversampling: 8,
            power_iterations: 2,
            batch_size: 1024,
            memory_budget: 512 * 1024 * 1024,
            seed: 0,
        }
    }
}

impl SvdConfig {
    pub fn validate(&self, n_topics: usize, n_docs: usize) -> Result<(), CardError> {
        let l = self.rank + self.oversampling;
        if self.rank == 0 || self.batch_size == 0 {
            return Err(CardError::InvalidConfig("rank and batch size must be at least 1".into()));
        }
        if l > n_topics.min(n_docs) {
            return Err(CardError::InvalidConfig(format!(
                "rank + oversampling = {l} exceeds min(topics, docs) = {}",
                n_topics.min(n_docs)
            )));
        }
        Ok(())
    }
}

/// Byte accounting for the factorization's working set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryTracker {
    budget: u64,
    current: u64,
    peak: u64,
}

impl MemoryTracker {
    pub fn new(budget: u64) -> Self {
        MemoryTracker {
            budget,
            current: 0,
            peak: 0,
        }
    }

    pub fn alloc(&mut self, bytes: u64, what: &str) -> Result<(), CardError> {
        let next = self.current + bytes;
        if next > self.budget {
            return Err(CardError::OverBudget {
                what: what.to_string(),
                needed: next,
                budget: self.budget,
            });
        }
        self.current = next;
        self.peak = self.peak.max(next);
        Ok(())
    }

    pub fn free(&mut self, bytes: u64) {
        debug_assert!(bytes <= self.current);
        self.current -= bytes.min(self.current);
    }

    pub fn current(&self) -> u64 {
        self.current
    }

    pub fn peak(&self) -> u64 {
        self.peak
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }
}

/// Rank-`r` factors with singular values split symmetrically:
/// `topic_vectors · doc_vectorsᵀ` approximates the matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors<T> {
    pub rank: usize,
    /// `n_topics × rank`, row-major.
    pub topic_vectors: Vec<T>,
    /// `n_docs × rank`, row-major.
    pub doc_vectors: Vec<T>,
    /// Non-increasing, length `rank`.
    pub singular_values: Vec<T>,
    pub peak_bytes: u64,
    pub batch_size: usize,
}

impl<T: Scalar> SvdFactors<T> {
    pub fn topic_row(&self, i: usize) -> &[T] {
        &self.topic_vectors[i * self.rank..(i + 1) * self.rank]
    }

    pub fn doc_row(&self, j: usize) -> &[T] {
        &self.doc_vectors[j * self.rank..(j + 1) * self.rank]
    }
}

/// Upper bound on tracked bytes for a given batch size.
pub fn required_bytes<T>(n_topics: usize, n_docs: usize, config: &SvdConfig, batch: usize) -> u64 {
    let (m, n, r) = (n_topics as u64, n_docs as u64, config.rank as u64);
    let l = r + config.oversampling as u64;
    let words = 2 * m * l + 2 * l * l + l + m * r + n * r + batch as u64 * l;
    words * std::mem::size_of::<T>() as u64
}

fn omega_row<T: Scalar>(seed: u64, j: usize, out: &mut [T]) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(j as u64);
    for o in out.iter_mut() {
        let x: f64 = StandardNormal.sample(&mut rng);
        *o = T::of(x);
    }
}

fn batches(n: usize, size: usize) -> impl Iterator<Item = std::ops::Range<usize>> {
    (0..n).step_by(size).map(move |s| s..(s + size).min(n))
}

/// `z = Qᵀ·M_j` for one sparse column.
fn project_column<T: Scalar>(q: &Dense<T>, col: &[(usize, T)], z: &mut [T]) {
    for (k, zk) in z.iter_mut().enumerate() {
        let qk = q.col(k);
        *zk = col.iter().fold(T::zero(), |acc, &(i, w)| acc + w * qk[i]);
    }
}

/// `y += M_j · zᵀ` for one sparse column.
fn scatter_column<T: Scalar>(y: &mut Dense<T>, col: &[(usize, T)], z: &[T]) {
    for (k, &zk) in z.iter().enumerate() {
        let yk = y.col_mut(k);
        for &(i, w) in col {
            yk[i] = yk[i] + w * zk;
        }
    }
}

pub fn batched_randomized_svd<T: Scalar>(
    matrix: &SparseTopicDocMatrix<T>,
    config: &SvdConfig,
) -> Result<SvdFactors<T>, CardError> {
    let (m, n) = (matrix.n_topics(), matrix.n_docs());
    config.validate(m, n)?;
    let (r, l) = (config.rank, config.rank + config.oversampling);
    let minimum = required_bytes::<T>(m, n, config, 1);
    if minimum > config.memory_budget {
        return Err(CardError::BudgetTooSmall {
            budget: config.memory_budget,
            minimum,
        });
    }
    let mut batch = config.batch_size.min(n);
    while required_bytes::<T>(m, n, config, batch) > config.memory_budget {
        batch = (batch / 2).max(1);
    }
    if batch < config.batch_size.min(n) {
        log::info!("batch size reduced to {batch} to fit the memory budget");
    }
    let word = std::mem::size_of::<T>() as u64;
    let bytes = |count: usize| count as u64 * word;
    let mut mem = MemoryTracker::new(config.memory_budget);

    // pass 1: Y = M·Ω
    mem.alloc(bytes(m * l), "range sketch")?;
    let mut y = Dense::zeros(m, l);
    for range in batches(n, batch) {
        mem.alloc(bytes(range.len() * l), "test matrix block")?;
        let mut omega = vec![T::zero(); range.len() * l];
        for (o, j) in omega.chunks_mut(l).zip(range.clone()) {
            omega_row(config.seed, j, o);
        }
        for (o, j) in omega.chunks(l).zip(range.clone()) {
            scatter_column(&mut y, matrix.column(j), o);
        }
        mem.free(bytes(range.len() * l));
    }

    let orth = |y: &mut Dense<T>, mem: &mut MemoryTracker| -> Result<(), CardError> {
        mem.alloc(bytes(m * l), "householder reflectors")?;
        orthonormalize(y);
        mem.free(bytes(m * l));
        Ok(())
    };

    for _ in 0..config.power_iterations {
        orth(&mut y, &mut mem)?;
        mem.alloc(bytes(m * l), "power iterate")?;
        let mut next = Dense::zeros(m, l);
        for range in batches(n, batch) {
            mem.alloc(bytes(range.len() * l), "projection block")?;
            let mut z = vec![T::zero(); range.len() * l];
            for (zj, j) in z.chunks_mut(l).zip(range.clone()) {
                project_column(&y, matrix.column(j), zj);
            }
            for (zj, j) in z.chunks(l).zip(range.clone()) {
                scatter_column(&mut next, matrix.column(j), zj);
            }
            mem.free(bytes(range.len() * l));
        }
        y = next;
        mem.free(bytes(m * l));
    }
    orth(&mut y, &mut mem)?;
    let q = y;

    // pass 2: R from a streamed QR of Bᵀ = Mᵀ·Q
    mem.alloc(bytes(l * l), "triangular factor")?;
    let mut rf = Dense::zeros(l, l);
    for range in batches(n, batch) {
        mem.alloc(bytes(range.len() * l), "projection block")?;
        let mut b = vec![T::zero(); range.len() * l];
        for (bj, j) in b.chunks_mut(l).zip(range.clone()) {
            project_column(&q, matrix.column(j), bj);
        }
        for bj in b.chunks_mut(l) {
            absorb_row(&mut rf, bj);
        }
        mem.free(bytes(range.len() * l));
    }

    // B = Rᵀ·Q_Bᵀ, so the right singular vectors of R are B's left ones
    mem.alloc(bytes(l * l + l), "small svd")?;
    let (sigma, mut w) = jacobi_svd(rf);

    mem.alloc(bytes(m * r), "topic vectors")?;
    let roots: Vec<T> = sigma[..r].iter().map(|s| s.sqrt()).collect();
    let cutoff = sigma[0] * T::epsilon() * T::of(l as f64);
    let mut topic_vectors = vec![T::zero(); m * r];
    for k in 0..r {
        let wk = w.col(k);
        let mut u = vec![T::zero(); m];
        for (c, &wc) in wk.iter().enumerate() {
            for (ui, &qi) in u.iter_mut().zip(q.col(c)) {
                *ui = *ui + qi * wc;
            }
        }
        // deterministic sign: topic column sums to a non-negative value
        if u.iter().copied().sum::<T>() < T::zero() {
            u.iter_mut().for_each(|e| *e = -*e);
            w.col_mut(k).iter_mut().for_each(|e| *e = -*e);
        }
        for (i, ui) in u.into_iter().enumerate() {
            topic_vectors[i * r + k] = ui * roots[k];
        }
    }

    // pass 3: doc_j = b_jᵀ·W / √σ
    mem.alloc(bytes(n * r), "doc vectors")?;
    let mut doc_vectors = vec![T::zero(); n * r];
    for range in batches(n, batch) {
        mem.alloc(bytes(range.len() * l), "projection block")?;
        let mut b = vec![T::zero(); range.len() * l];
        for (bj, j) in b.chunks_mut(l).zip(range.clone()) {
            project_column(&q, matrix.column(j), bj);
        }
        for (bj, j) in b.chunks(l).zip(range.clone()) {
            for k in 0..r {
                if sigma[k] > cutoff {
                    let s: T = bj.iter().zip(w.col(k)).map(|(&x, &y)| x * y).sum();
                    doc_vectors[j * r + k] = s / roots[k];
                }
            }
        }
        mem.free(bytes(range.len() * l));
    }

    Ok(SvdFactors {
        rank: r,
        topic_vectors,
        doc_vectors,
        singular_values: sigma[..r].to_vec(),
        peak_bytes: mem.peak(),
        batch_size: batch,
    })
}
