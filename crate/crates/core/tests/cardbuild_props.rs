use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use topicforge::cardbuild::{
    batched_randomized_svd, bm25_weight, conflate_topics, relatedness, required_bytes, Bm25Params, CardError,
    ConflationCandidate, ConflationConfig, EmbeddingSpace, EmbeddingTable, SparseTopicDocMatrix, SvdConfig,
};

fn sparse(m: usize, n: usize, density: f64, seed: u64) -> (SparseTopicDocMatrix<f64>, DMatrix<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dense = DMatrix::zeros(m, n);
    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (j, col) in columns.iter_mut().enumerate() {
        for i in 0..m {
            if rng.random_bool(density) {
                let w = rng.random_range(0.1..3.0);
                dense[(i, j)] = w;
                col.push((i, w));
            }
        }
    }
    let matrix = SparseTopicDocMatrix::new(
        (0..m).map(|i| format!("t{i}")).collect(),
        (0..n).map(|j| format!("d{j}")).collect(),
        columns,
    )
    .unwrap();
    (matrix, dense)
}

fn reconstruction(m: usize, n: usize, f: &topicforge::cardbuild::SvdFactors<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m, n, |i, j| f.topic_row(i).iter().zip(f.doc_row(j)).map(|(a, b)| a * b).sum())
}

fn config(rank: usize, batch: usize) -> SvdConfig {
    SvdConfig {
        rank,
        oversampling: 5,
        power_iterations: 2,
        batch_size: batch,
        memory_budget: 64 << 20,
        seed: 3,
    }
}

#[test]
fn near_optimal_against_dense_svd() {
    for seed in 0..5 {
        let (m, n, r) = (40, 120, 5);
        let (matrix, dense) = sparse(m, n, 0.3, seed);
        let f = batched_randomized_svd(&matrix, &config(r, 16)).unwrap();
        let sv = dense.clone().svd(false, false).singular_values;
        let best: f64 = sv.iter().skip(r).map(|s| s * s).sum::<f64>().sqrt();
        let err = (&dense - reconstruction(m, n, &f)).norm();
        assert!(err <= 1.05 * best, "seed {seed}: {err} vs best {best}");
        // singular values of a projection never exceed the true ones
        for (k, s) in f.singular_values.iter().enumerate() {
            assert!(*s <= sv[k] * (1.0 + 1e-9), "σ{k}: {s} vs {}", sv[k]);
        }
        assert!((f.singular_values[0] - sv[0]).abs() <= 1e-3 * sv[0]);
    }
}

#[test]
fn exact_rank_is_recovered() {
    let (m, n, r) = (30, 80, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let a = DMatrix::from_fn(m, r, |_, _| rng.random_range(0.1..1.0));
    let b = DMatrix::from_fn(r, n, |_, _| rng.random_range(0.1..1.0));
    let dense = &a * &b;
    let matrix = SparseTopicDocMatrix::new(
        (0..m).map(|i| format!("t{i}")).collect(),
        (0..n).map(|j| format!("d{j}")).collect(),
        (0..n).map(|j| (0..m).map(|i| (i, dense[(i, j)])).collect()).collect(),
    )
    .unwrap();
    let f = batched_randomized_svd(&matrix, &config(r, 7)).unwrap();
    let rel = (&dense - reconstruction(m, n, &f)).norm() / dense.norm();
    assert!(rel <= 1e-8, "{rel}");

    // the topic factor spans the column space: projecting onto its QR basis
    // loses nothing
    let t = DMatrix::from_fn(m, r, |i, k| f.topic_row(i)[k]);
    let q = t.qr().q();
    let residual = (&dense - &q * (q.transpose() * &dense)).norm() / dense.norm();
    assert!(residual <= 1e-8, "{residual}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn batch_size_does_not_change_factors(seed in 0u64..1000, b1 in 1usize..40, b2 in 1usize..40) {
        let (matrix, _) = sparse(20, 50, 0.3, seed);
        let x = batched_randomized_svd(&matrix, &config(3, b1)).unwrap();
        let y = batched_randomized_svd(&matrix, &config(3, b2)).unwrap();
        for (a, b) in x.topic_vectors.iter().zip(&y.topic_vectors).chain(x.doc_vectors.iter().zip(&y.doc_vectors)) {
            prop_assert!((a - b).abs() <= 1e-8);
        }
    }

    #[test]
    fn tracked_memory_stays_in_budget(seed in 0u64..1000, slack in 0u64..20_000) {
        let (matrix, _) = sparse(25, 60, 0.2, seed);
        let c = config(4, 60);
        let minimum = required_bytes::<f64>(25, 60, &c, 1);
        let budget = minimum + slack;
        let f = batched_randomized_svd(&matrix, &SvdConfig { memory_budget: budget, ..c.clone() }).unwrap();
        prop_assert!(f.peak_bytes <= budget);
        prop_assert!(f.singular_values.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(f.singular_values.iter().all(|s| *s >= 0.0));
        let too_small = batched_randomized_svd(&matrix, &SvdConfig { memory_budget: minimum - 1, ..c });
        let is_budget_error = matches!(too_small, Err(CardError::BudgetTooSmall { .. }));
        prop_assert!(is_budget_error);
    }

    #[test]
    fn relatedness_is_symmetric_and_bilinear(
        ab in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0, -10.0f64..10.0), 1..16),
        alpha in -5.0f64..5.0,
    ) {
        let a: Vec<f64> = ab.iter().map(|t| t.0).collect();
        let b: Vec<f64> = ab.iter().map(|t| t.1).collect();
        let c: Vec<f64> = ab.iter().map(|t| t.2).collect();
        let r = |x: &[f64], y: &[f64]| relatedness(x, y).unwrap();
        let tol = 1e-9 * (1.0 + r(&a, &a).abs() + r(&b, &b).abs() + r(&c, &c).abs()) * (1.0 + alpha.abs());
        prop_assert_eq!(r(&a, &b), r(&b, &a));
        let scaled: Vec<f64> = a.iter().map(|x| alpha * x).collect();
        prop_assert!((r(&scaled, &b) - alpha * r(&a, &b)).abs() <= tol);
        let sum: Vec<f64> = a.iter().zip(&c).map(|(x, y)| x + y).collect();
        prop_assert!((r(&sum, &b) - r(&a, &b) - r(&c, &b)).abs() <= tol);
    }

    #[test]
    fn bm25_grows_with_term_frequency(tf in 1u64..50, dl in 1u64..500, df in 1u64..20, extra in 0u64..20) {
        let p = Bm25Params::default();
        let n = df + extra;
        let w1: f64 = bm25_weight(tf, dl, 100.0, df, n, &p).unwrap();
        let w2: f64 = bm25_weight(tf + 1, dl, 100.0, df, n, &p).unwrap();
        prop_assert!(w1 > 0.0 && w2 > w1);
    }

    #[test]
    fn conflation_is_a_partition(
        groups in prop::collection::vec(0usize..4, 2..14),
        noise in prop::collection::vec(-0.05f64..0.05, 14 * 4),
        freqs in prop::collection::vec(1u64..100, 14),
    ) {
        let n = groups.len();
        let keys: Vec<String> = (0..n).map(|i| format!("topic {i}")).collect();
        let data: Vec<f64> = (0..n)
            .flat_map(|i| (0..4).map(move |k| (i, k)))
            .map(|(i, k)| if groups[i] == k { 1.0 } else { 0.0 } + noise[i * 4 + k])
            .collect();
        let space = EmbeddingSpace {
            singular_values: vec![1.0; 4],
            topics: EmbeddingTable::new(keys.clone(), 4, data).unwrap(),
            docs: EmbeddingTable::empty(4),
            users: EmbeddingTable::empty(4),
        };
        // documents shared within a group, so the doc-set check can pass
        let docs: Vec<BTreeSet<String>> = (0..n).map(|i| [format!("g{}", groups[i]), format!("own{i}")].into()).collect();
        let cands: Vec<ConflationCandidate<'_>> = (0..n)
            .map(|i| ConflationCandidate { key: &keys[i], ner_frequency: freqs[i], doc_ids: &docs[i] })
            .collect();
        let c = conflate_topics(&cands, &space, &BTreeSet::new(), &ConflationConfig::default());
        let mut members: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, k) in keys.iter().enumerate() {
            let canon = c.canonical_of(k);
            prop_assert_eq!(c.canonical_of(canon), canon);
            prop_assert!(keys.iter().any(|x| x == canon));
            members.entry(canon).or_default().push(i);
        }
        let aliases = c.aliases();
        let mut seen = BTreeSet::new();
        for (canon, group) in &members {
            let j = keys.iter().position(|k| k == canon).unwrap();
            for &i in group {
                prop_assert!(seen.insert(i));
                prop_assert!(freqs[i] < freqs[j] || (freqs[i] == freqs[j] && keys[i] >= keys[j]));
                if i != j {
                    prop_assert!(aliases[*canon].contains(&keys[i]));
                }
            }
        }
        prop_assert_eq!(seen.len(), n);
    }
}
