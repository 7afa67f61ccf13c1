mod common;

use std::collections::HashMap;

use common::{chi2_oracle, ols_r2, u_by_pairs};
use forumscope::stats::dist;
use forumscope::stats::{
    chi2_2x2, chi2_contingency, compare_groups, logistic_fit, mann_whitney_u, model_blocks, vif, welch_t,
    CompareOptions, MetricsTable, ModelOptions, ModelSpec,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Normal-approximation p with tie and continuity corrections, with ties
/// counted through a hash map.
fn mwu_p_oracle(a: &[f64], b: &[f64], u: f64) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let n = na + nb;
    let mut counts: HashMap<u64, f64> = HashMap::new();
    for v in a.iter().chain(b) {
        *counts.entry(v.to_bits()).or_default() += 1.0;
    }
    let ties: f64 = counts.values().map(|t| t * t * t - t).sum();
    let var = na * nb / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((u - na * nb / 2.0).abs() - 0.5).max(0.0) / var.sqrt();
    2.0 * (1.0 - 0.5 * dist::erfc(-z / std::f64::consts::SQRT_2))
}

#[test]
fn mann_whitney_matches_pair_counting() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let na = rng.random_range(1..=20);
        let nb = rng.random_range(1..=20);
        // small integer range forces ties
        let a: Vec<f64> = (0..na).map(|_| rng.random_range(0..8) as f64).collect();
        let b: Vec<f64> = (0..nb).map(|_| rng.random_range(0..8) as f64).collect();
        let r = mann_whitney_u(&a, &b).unwrap();
        let u = u_by_pairs(&a, &b);
        assert_eq!(r.statistic, u);
        let p = mwu_p_oracle(&a, &b, u);
        assert!((r.p_value - p).abs() < 1e-12, "{} vs {p}", r.p_value);
    }
}

#[test]
fn mann_whitney_extremes() {
    assert_eq!(mann_whitney_u(&[1.0, 2.0], &[3.0, 4.0]).unwrap().statistic, 0.0);
    let same = [1.0, 5.0, 5.0, 7.0];
    assert_eq!(mann_whitney_u(&same, &same).unwrap().statistic, 8.0);
    assert_eq!(mann_whitney_u(&[2.0, 2.0], &[2.0]).unwrap().p_value, 1.0);
}

#[test]
fn welch_example() {
    let r = welch_t(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap();
    assert!((r.statistic + 1.5492).abs() < 1e-3);
    assert!((r.df.unwrap() - 2.941).abs() < 1e-3);
    let same = welch_t(&[1.0, 2.0, 4.0], &[1.0, 2.0, 4.0]).unwrap();
    assert_eq!((same.statistic, same.p_value), (0.0, 1.0));
}

proptest! {
    #[test]
    fn welch_scale_invariant_and_antisymmetric(
        a in prop::collection::vec(-50.0f64..50.0, 2..15),
        b in prop::collection::vec(-50.0f64..50.0, 2..15),
        k in 0.1f64..100.0,
    ) {
        let r = welch_t(&a, &b).unwrap();
        let sa: Vec<f64> = a.iter().map(|v| v * k).collect();
        let sb: Vec<f64> = b.iter().map(|v| v * k).collect();
        let s = welch_t(&sa, &sb).unwrap();
        prop_assert!((r.statistic - s.statistic).abs() <= 1e-9 * (1.0 + r.statistic.abs()));
        prop_assert!((r.p_value - s.p_value).abs() <= 1e-9);
        let swapped = welch_t(&b, &a).unwrap();
        prop_assert!((r.statistic + swapped.statistic).abs() <= 1e-12 * (1.0 + r.statistic.abs()));
        prop_assert!((0.0..=1.0).contains(&r.p_value));
    }

    #[test]
    fn mann_whitney_complement(
        a in prop::collection::vec(0u8..10, 1..15),
        b in prop::collection::vec(0u8..10, 1..15),
    ) {
        let a: Vec<f64> = a.into_iter().map(f64::from).collect();
        let b: Vec<f64> = b.into_iter().map(f64::from).collect();
        let ab = mann_whitney_u(&a, &b).unwrap();
        let ba = mann_whitney_u(&b, &a).unwrap();
        prop_assert_eq!(ab.statistic + ba.statistic, (a.len() * b.len()) as f64);
        prop_assert!((ab.p_value - ba.p_value).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab.p_value));
    }

    #[test]
    fn chi2_matches_definition(cells in prop::collection::vec(1u32..60, 6)) {
        let table: Vec<Vec<f64>> = cells.chunks(3).map(|r| r.iter().map(|&v| f64::from(v)).collect()).collect();
        let r = chi2_contingency(&table).unwrap();
        let oracle = chi2_oracle(&table);
        prop_assert!((r.statistic - oracle).abs() <= 1e-9 * (1.0 + oracle));
        prop_assert_eq!(r.df, 2);
        prop_assert!((0.0..=1.0).contains(&r.p_value));
    }
}

#[test]
fn chi2_hand_values() {
    // 30 of 100 in-cluster messages, 10 of 900 outside
    let v = chi2_2x2(30.0, 70.0, 10.0, 890.0);
    assert!((v - 195.60).abs() < 0.01, "{v}");
    let table = vec![vec![96.0, 2.0, 2.0], vec![50.0, 27.0, 23.0]];
    let r = chi2_contingency(&table).unwrap();
    // expected counts are 73, 14.5, 12.5 in both rows
    let hand = 2.0 * (23.0f64.powi(2) / 73.0 + 12.5f64.powi(2) / 14.5 + 10.5f64.powi(2) / 12.5);
    assert!((r.statistic - hand).abs() < 1e-9, "{} vs {hand}", r.statistic);
    assert_eq!(chi2_2x2(10.0, 10.0, 20.0, 20.0), 0.0);
}

fn logit_data(seed: u64, n: usize, b0: f64, b1: f64) -> (Vec<f64>, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..120.0)).collect();
    let y = x
        .iter()
        .map(|&xi| rng.random_bool(1.0 / (1.0 + (-(b0 + b1 * xi)).exp())))
        .collect();
    (x, y)
}

#[test]
fn logit_first_order_optimality() {
    for seed in 0..10 {
        let (x, y) = logit_data(seed, 500, -3.0, 0.05);
        let m = logistic_fit(&["x".into()], &[x.clone()], &y).unwrap();
        assert!(m.convergence.converged);
        let mut g = [0.0, 0.0];
        for (xi, &yi) in x.iter().zip(&y) {
            let r = f64::from(u8::from(yi)) - m.predict(&[*xi]);
            g[0] += r;
            g[1] += r * xi;
        }
        assert!(g.iter().all(|v| v.abs() < 1e-6), "{g:?}");
    }
}

#[test]
fn logit_nested_r2_is_monotone() {
    for seed in 0..10 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let n = 400;
        let cols: Vec<Vec<f64>> = (0..3).map(|_| (0..n).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let y: Vec<bool> = (0..n)
            .map(|i| {
                let eta = 0.3 + 0.8 * cols[0][i] - 0.5 * cols[1][i];
                rng.random_bool(1.0 / (1.0 + (-eta).exp()))
            })
            .collect();
        let names: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let mut last = 0.0;
        for p in 1..=3 {
            let m = logistic_fit(&names[..p], &cols[..p], &y).unwrap();
            assert!(m.mcfadden_r2 >= last - 1e-12);
            assert!(m.log_likelihood >= m.null_log_likelihood - 1e-9);
            last = m.mcfadden_r2;
        }
    }
}

#[test]
fn vif_matches_ols_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 300;
    let x1: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
    let x2: Vec<f64> = x1.iter().map(|v| v + rng.random_range(-0.5..0.5)).collect();
    let x3: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let v = vif(&[x1.clone(), x2.clone(), x3.clone()]).unwrap();
    let oracle = [
        1.0 / (1.0 - ols_r2(&x1, &[&x2, &x3])),
        1.0 / (1.0 - ols_r2(&x2, &[&x1, &x3])),
        1.0 / (1.0 - ols_r2(&x3, &[&x1, &x2])),
    ];
    for (a, b) in v.iter().zip(oracle) {
        assert!((a - b).abs() < 1e-6 * b, "{a} vs {b}");
    }
    let doubled: Vec<f64> = x1.iter().map(|v| 2.0 * v).collect();
    assert!(vif(&[x1, doubled]).unwrap().iter().all(|v| v.is_infinite()));
}

fn planted_table(seed: u64, shift: f64) -> MetricsTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 400;
    let columns: Vec<String> = forumscope::stats::groups::metric_columns().iter().map(|s| s.to_string()).collect();
    let flags: Vec<bool> = (0..n).map(|i| i < 40).collect();
    let values = columns
        .iter()
        .map(|c| {
            (0..n)
                .map(|i| {
                    let base = rng.random_range(0.0..10.0);
                    let bump = if c == "out_degree" && flags[i] { shift } else { 0.0 };
                    Some(base + bump)
                })
                .collect()
        })
        .collect();
    MetricsTable::new((0..n).map(|i| format!("u{i}")).collect(), columns, values, flags).unwrap()
}

#[test]
fn planted_shift_is_flagged_with_its_sign() {
    let table = planted_table(9, 4.0);
    let report = compare_groups(&table, &CompareOptions::default()).unwrap();
    let row = report.rows.iter().find(|r| r.metric == "out_degree").unwrap();
    assert!(row.significant);
    assert!(row.mean_innovators > row.mean_others);
}

#[test]
fn null_rows_are_mostly_quiet() {
    let mut hits = 0;
    let mut rows = 0;
    for seed in 0..40 {
        let report = compare_groups(&planted_table(1000 + seed, 0.0), &CompareOptions::default()).unwrap();
        hits += report.rows.iter().filter(|r| r.welch.p_value < 0.05).count();
        rows += report.rows.len();
    }
    let rate = hits as f64 / rows as f64;
    // binomial sd at n = 560 is about 0.009
    assert!((rate - 0.05).abs() < 0.03, "false-positive rate {rate}");
}

#[test]
fn nested_blocks_in_model_report() {
    let table = planted_table(3, 2.0);
    let blocks = vec![
        ModelSpec::new("small", &["out_degree"]),
        ModelSpec::new("large", &["out_degree", "closeness", "wps"]),
    ];
    let report = model_blocks(&table, &blocks, &ModelOptions::default()).unwrap();
    let r2: Vec<f64> = report.models.iter().map(|m| m.model.mcfadden_r2).collect();
    assert!(r2[1] >= r2[0]);
    assert!(model_blocks(&table, &[], &ModelOptions::default()).is_err());
}
