//! Two-sample tests and chi-squared contingency tests.

use serde::Serialize;

use super::dist;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub df: Option<f64>,
    /// Two-sided.
    pub p_value: f64,
    pub mean_a: f64,
    pub mean_b: f64,
    pub n_a: usize,
    pub n_b: usize,
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn sample_variance(x: &[f64], m: f64) -> f64 {
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
}

/// Welch's unequal-variance t test.
pub fn welch_t(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "Welch t test needs at least 2 observations per group (got {} and {})",
            a.len(),
            b.len()
        )));
    }
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (sample_variance(a, ma) / a.len() as f64, sample_variance(b, mb) / b.len() as f64);
    let se2 = va + vb;
    let (statistic, df, p_value) = if se2 == 0.0 {
        if ma == mb {
            log::warn!("Welch t test: both samples constant and equal; reporting t = 0, p = 1");
            (0.0, None, 1.0)
        } else {
            let t = if ma > mb { f64::INFINITY } else { f64::NEG_INFINITY };
            (t, None, 0.0)
        }
    } else {
        let t = (ma - mb) / se2.sqrt();
        let df = se2 * se2 / (va * va / (a.len() - 1) as f64 + vb * vb / (b.len() - 1) as f64);
        (t, Some(df), dist::t_two_sided(t, df))
    };
    Ok(TestResult {
        statistic,
        df,
        p_value,
        mean_a: ma,
        mean_b: mb,
        n_a: a.len(),
        n_b: b.len(),
    })
}

/// Mann-Whitney U with midranks; `statistic` is U for sample `a`, i.e. the
/// number of pairs with a_i > b_j plus half the ties. The p-value uses the
/// normal approximation with tie and continuity corrections.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("Mann-Whitney U needs nonempty samples".into()));
    }
    let (na, nb) = (a.len(), b.len());
    let n = na + nb;
    let mut pooled: Vec<(f64, bool)> = a.iter().map(|&v| (v, true)).chain(b.iter().map(|&v| (v, false))).collect();
    pooled.sort_by(|x, y| x.0.total_cmp(&y.0));

    let mut rank_sum_a = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && pooled[j + 1].0 == pooled[i].0 {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        rank_sum_a += pooled[i..=j].iter().filter(|p| p.1).count() as f64 * midrank;
        i = j + 1;
    }
    let u = rank_sum_a - (na * (na + 1)) as f64 / 2.0;
    let mu = (na * nb) as f64 / 2.0;
    let (naf, nbf, nf) = (na as f64, nb as f64, n as f64);
    let var = naf * nbf / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));
    let p_value = if var <= 0.0 {
        log::warn!("Mann-Whitney U: all values identical; reporting p = 1");
        1.0
    } else {
        let z = ((u - mu).abs() - 0.5).max(0.0) / var.sqrt();
        dist::normal_two_sided(z)
    };
    Ok(TestResult {
        statistic: u,
        df: None,
        p_value,
        mean_a: mean(a),
        mean_b: mean(b),
        n_a: na,
        n_b: nb,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Pearson chi-squared test of independence on an r×c table, without
/// continuity correction.
pub fn chi2_contingency(table: &[Vec<f64>]) -> Result<ChiSquare> {
    let r = table.len();
    let c = table.first().map_or(0, Vec::len);
    if r < 2 || c < 2 || table.iter().any(|row| row.len() != c) {
        return Err(Error::DegenerateTable(format!("need a rectangular table of at least 2×2, got {r}×{c}")));
    }
    let row_sums: Vec<f64> = table.iter().map(|row| row.iter().sum()).collect();
    let col_sums: Vec<f64> = (0..c).map(|j| table.iter().map(|row| row[j]).sum()).collect();
    if let Some(i) = row_sums.iter().position(|&s| s <= 0.0) {
        return Err(Error::DegenerateTable(format!("row {i} is empty")));
    }
    if let Some(j) = col_sums.iter().position(|&s| s <= 0.0) {
        return Err(Error::DegenerateTable(format!("column {j} is empty")));
    }
    let n: f64 = row_sums.iter().sum();
    let mut stat = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &obs) in row.iter().enumerate() {
            let expected = row_sums[i] * col_sums[j] / n;
            stat += (obs - expected) * (obs - expected) / expected;
        }
    }
    let df = (r - 1) * (c - 1);
    Ok(ChiSquare {
        statistic: stat,
        df,
        p_value: dist::chi2_sf(stat, df as f64),
    })
}

/// 2×2 chi-squared n(ad − bc)² / ((a+b)(c+d)(a+c)(b+d)); 0 when a margin
/// is empty.
pub fn chi2_2x2(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let n = a + b + c + d;
    let denom = (a + b) * (c + d) * (a + c) * (b + d);
    if denom == 0.0 {
        return 0.0;
    }
    let diff = a * d - b * c;
    n * diff * diff / denom
}
