mod common;

use std::collections::{HashMap, HashSet};

use common::{adjusted_rand_index, planted_topics};
use forumscope::etm::{
    bisect, bisecting_kmeans, build_tdm, cluster_keywords, select_k, select_terms, validate_clusters,
    ClusterOptions, CountMode, ProcessedDoc, SelectOptions, ValidationScores,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn zipf_docs(seed: u64, docs: usize, words: usize) -> Vec<ProcessedDoc> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..docs)
        .map(|d| {
            let len = rng.random_range(0..25);
            let tokens = (0..len)
                .map(|_| {
                    // inverse-rank weights via rejection
                    loop {
                        let r = rng.random_range(1..=words);
                        if rng.random_bool(1.0 / r as f64) {
                            break format!("w{r}");
                        }
                    }
                })
                .collect();
            ProcessedDoc {
                doc_id: format!("d{d}"),
                tokens,
            }
        })
        .collect()
}

#[test]
fn vocabulary_matches_independent_filter() {
    let docs = zipf_docs(3, 1000, 400);
    let vocab = select_terms(&docs, &SelectOptions::default()).unwrap();
    let mut df: HashMap<&str, usize> = HashMap::new();
    for d in &docs {
        for t in d.tokens.iter().collect::<HashSet<_>>() {
            *df.entry(t.as_str()).or_default() += 1;
        }
    }
    let expected: HashSet<&str> = df.iter().filter(|&(_, &n)| (5..=500).contains(&n)).map(|(t, _)| *t).collect();
    let got: HashSet<&str> = vocab.terms().iter().map(|t| t.term.as_str()).collect();
    assert_eq!(got, expected);
    assert!(vocab.terms().windows(2).all(|w| w[0].frequency >= w[1].frequency));
}

proptest! {
    #[test]
    fn coverage_accounting(seed in 0u64..1000) {
        let docs = zipf_docs(seed, 120, 60);
        let Ok(vocab) = select_terms(&docs, &SelectOptions { min_doc_freq: 2, high_freq_cutoff: 0.5 }) else {
            return Ok(());
        };
        let tdm = build_tdm(&docs, &vocab);
        prop_assert_eq!(tdm.row_count() + tdm.unclassified().len(), docs.len());
        prop_assert_eq!(tdm.coverage(), tdm.row_count() as f64 / docs.len() as f64);
        for i in 0..tdm.row_count() {
            prop_assert!(!tdm.row(i).is_empty());
        }
    }
}

#[test]
fn planted_topics_are_recovered() {
    let opts = ClusterOptions::default();
    for seed in 0..3 {
        let (tdm, _, truth) = planted_topics(seed, 600, 3, 40, 12);
        let c = bisecting_kmeans(&tdm, 3, seed, &opts).unwrap();
        let ari = adjusted_rand_index(&c.assignment, &truth);
        assert!(ari >= 0.9, "seed {seed}: ARI {ari}");
        for split in &c.splits {
            for trace in &split.traces {
                assert!(trace.windows(2).all(|w| w[1] >= w[0] - 1e-9));
            }
        }
    }
}

#[test]
fn split_levels_are_prefix_consistent() {
    let (tdm, _, _) = planted_topics(8, 300, 4, 30, 10);
    let b = bisect(&tdm, 5, 8, &ClusterOptions::default()).unwrap();
    for k in 2..5 {
        let (coarse, fine) = (b.assignment(k), b.assignment(k + 1));
        // each fine cluster sits inside one coarse cluster
        let mut parent = HashMap::new();
        for (c, f) in coarse.iter().zip(fine) {
            assert_eq!(*parent.entry(*f).or_insert(*c), *c);
        }
    }
}

/// CH, DB and BSS/TSS on dense vectors, straight from the definitions.
fn indices_oracle(rows: &[Vec<f64>], assignment: &[usize], k: usize) -> (f64, f64, f64) {
    let n = rows.len();
    let dim = rows[0].len();
    let mean_of = |idx: &[usize]| -> Vec<f64> {
        let mut m = vec![0.0; dim];
        for &i in idx {
            for (a, v) in m.iter_mut().zip(&rows[i]) {
                *a += v / idx.len() as f64;
            }
        }
        m
    };
    let dist2 = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
    let all: Vec<usize> = (0..n).collect();
    let grand = mean_of(&all);
    let members: Vec<Vec<usize>> = (0..k).map(|c| all.iter().copied().filter(|&i| assignment[i] == c).collect()).collect();
    let centers: Vec<Vec<f64>> = members.iter().map(|m| mean_of(m)).collect();
    let tss: f64 = rows.iter().map(|r| dist2(r, &grand)).sum();
    let wss: f64 = (0..n).map(|i| dist2(&rows[i], &centers[assignment[i]])).sum();
    let bss: f64 = (0..k).map(|c| members[c].len() as f64 * dist2(&centers[c], &grand)).sum();
    let ch = (bss / (k - 1) as f64) / (wss / (n - k) as f64);
    let spread: Vec<f64> = (0..k)
        .map(|c| members[c].iter().map(|&i| dist2(&rows[i], &centers[c]).sqrt()).sum::<f64>() / members[c].len() as f64)
        .collect();
    let db = (0..k)
        .map(|i| {
            (0..k)
                .filter(|&j| j != i)
                .map(|j| (spread[i] + spread[j]) / dist2(&centers[i], &centers[j]).sqrt())
                .fold(0.0, f64::max)
        })
        .sum::<f64>()
        / k as f64;
    (ch, db, bss / tss)
}

#[test]
fn validity_indices_match_dense_oracle() {
    let (tdm, vocab, _) = planted_topics(4, 200, 3, 20, 8);
    let (b, scores) = validate_clusters(&tdm, 2..=5, 4, &ClusterOptions::default()).unwrap();
    let dense: Vec<Vec<f64>> = b
        .unit_rows()
        .iter()
        .map(|r| {
            let mut v = vec![0.0; vocab.len()];
            for &(t, x) in r {
                v[t] = x;
            }
            v
        })
        .collect();
    for s in &scores {
        let (ch, db, rho) = indices_oracle(&dense, b.assignment(s.k), s.k);
        assert!((s.calinski_harabasz - ch).abs() < 1e-9 * ch, "CH {} vs {ch}", s.calinski_harabasz);
        assert!((s.davies_bouldin - db).abs() < 1e-9 * db.max(1.0), "DB {} vs {db}", s.davies_bouldin);
        assert!((s.rho - rho).abs() < 1e-9);
    }
}

#[test]
fn singleton_clusters_have_zero_db() {
    let docs: Vec<ProcessedDoc> = (0..4)
        .map(|i| ProcessedDoc {
            doc_id: format!("d{i}"),
            tokens: vec![format!("a{i}"), format!("b{}", i % 2), "x".into()],
        })
        .collect();
    let vocab = select_terms(&docs, &SelectOptions { min_doc_freq: 2, high_freq_cutoff: 1.0 }).unwrap();
    let tdm = build_tdm(&docs, &vocab);
    let (_, scores) = validate_clusters(&tdm, 2..=4, 1, &ClusterOptions::default()).unwrap();
    let last = scores.last().unwrap();
    assert_eq!(last.k, 4);
    assert_eq!(last.davies_bouldin, 0.0);
}

#[test]
fn two_blobs_prefer_two_clusters() {
    let (tdm, _, _) = planted_topics(6, 300, 2, 30, 10);
    let (_, scores) = validate_clusters(&tdm, 2..=3, 6, &ClusterOptions::default()).unwrap();
    assert!(scores[0].calinski_harabasz > scores[1].calinski_harabasz);
    assert_eq!(select_k(&scores).unwrap(), 2);
}

fn score(k: usize, ch: f64, db: f64) -> ValidationScores {
    ValidationScores {
        k,
        calinski_harabasz: ch,
        davies_bouldin: db,
        rho: 0.0,
    }
}

#[test]
fn select_k_rank_sum() {
    // CH prefers 3, DB prefers 4: tie goes to 3
    let s = vec![score(2, 5.0, 3.0), score(3, 9.0, 2.0), score(4, 8.0, 1.0)];
    assert_eq!(select_k(&s).unwrap(), 3);
    // monotone CH, flat DB
    let s = vec![score(2, 1.0, 2.0), score(3, 2.0, 2.0), score(4, 3.0, 2.0)];
    assert_eq!(select_k(&s).unwrap(), 4);
    let s = vec![score(2, f64::NAN, 1.0), score(3, 2.0, 1.5)];
    assert_eq!(select_k(&s).unwrap(), 2);
}

#[test]
fn exclusive_term_tops_its_cluster() {
    let (tdm, vocab, _) = planted_topics(2, 300, 3, 25, 10);
    let c = bisecting_kmeans(&tdm, 3, 2, &ClusterOptions::default()).unwrap();
    let table = cluster_keywords(&tdm, &vocab, &c, 5, CountMode::Occurrences);
    for cluster in &table.clusters {
        assert!(cluster.keywords.windows(2).all(|w| w[0].chi2 >= w[1].chi2));
        let top = &cluster.keywords[0];
        assert_eq!(top.out_count, 0.0, "planted topics are disjoint");
    }
}
