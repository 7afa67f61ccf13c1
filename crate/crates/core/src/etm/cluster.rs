use std::fmt::Write as _;
use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{TermDocMatrix, Weighting};
use crate::error::{Error, Result};
use crate::num;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterOptions {
    /// Seeded restarts of every 2-means split; the best objective wins.
    pub restarts: usize,
    pub max_iterations: usize,
    pub weighting: Weighting,
}

impl Default for ClusterOptions {
    fn default() -> Self {
        ClusterOptions {
            restarts: 10,
            max_iterations: 100,
            weighting: Weighting::Binary,
        }
    }
}

/// One bisection step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitRecord {
    pub parent: usize,
    pub child: usize,
    pub sizes: (usize, usize),
    /// Σ cosine to the assigned concept vector for the chosen restart.
    pub objective: f64,
    /// Objective after every iteration, one trace per restart.
    pub traces: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Clustering {
    pub k: usize,
    /// Cluster id (0-based) of each TDM row.
    pub assignment: Vec<usize>,
    pub sizes: Vec<usize>,
    /// Unit-normalized mean vector of each cluster, dense over the vocabulary.
    pub centroids: Vec<Vec<f64>>,
    /// Classified share of all documents.
    pub coverage: f64,
    pub splits: Vec<SplitRecord>,
}

/// The full split sequence up to some `k_max`; the partition at any smaller
/// `k` is a prefix of it.
#[derive(Debug, Clone)]
pub struct Bisection {
    rows: Vec<Vec<(usize, f64)>>,
    n_terms: usize,
    coverage: f64,
    levels: Vec<Vec<usize>>,
    splits: Vec<SplitRecord>,
}

fn dot(row: &[(usize, f64)], dense: &[f64]) -> f64 {
    row.iter().map(|&(t, v)| v * dense[t]).sum()
}

fn concept(rows: &[Vec<(usize, f64)>], members: impl Iterator<Item = usize>, n_terms: usize) -> Vec<f64> {
    let mut s = vec![0.0; n_terms];
    for i in members {
        for &(t, v) in &rows[i] {
            s[t] += v;
        }
    }
    let norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        s.iter_mut().for_each(|v| *v /= norm);
    }
    s
}

struct TwoMeans {
    side: Vec<bool>,
    objective: f64,
    trace: Vec<f64>,
}

fn argmin_similarity(rows: &[Vec<(usize, f64)>], points: &[usize], anchor: &[f64]) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (pos, &i) in points.iter().enumerate() {
        let s = dot(&rows[i], anchor);
        if s < best.0 {
            best = (s, pos);
        }
    }
    best.1
}

fn dense(row: &[(usize, f64)], n_terms: usize) -> Vec<f64> {
    let mut v = vec![0.0; n_terms];
    for &(t, x) in row {
        v[t] = x;
    }
    v
}

/// Spherical 2-means on `points` from a farthest-point pair. `side[p]` is
/// true when point p goes to the second cluster.
fn two_means(rows: &[Vec<(usize, f64)>], points: &[usize], n_terms: usize, start: usize, max_iter: usize) -> TwoMeans {
    let m = points.len();
    let a = argmin_similarity(rows, points, &dense(&rows[points[start]], n_terms));
    let mut b = argmin_similarity(rows, points, &dense(&rows[points[a]], n_terms));
    if b == a {
        b = usize::from(a == 0);
    }
    let mut centers = [dense(&rows[points[a]], n_terms), dense(&rows[points[b]], n_terms)];
    let mut side: Vec<bool> = vec![false; m];
    let mut trace: Vec<f64> = Vec::new();
    for iter in 0..max_iter {
        let mut sims = vec![(0.0, 0.0); m];
        let mut changed = false;
        for (p, &i) in points.iter().enumerate() {
            let s0 = dot(&rows[i], &centers[0]);
            let s1 = dot(&rows[i], &centers[1]);
            let to_second = s1 > s0;
            changed |= to_second != side[p];
            side[p] = to_second;
            sims[p] = (s0, s1);
        }
        let n1 = side.iter().filter(|&&s| s).count();
        if n1 == 0 || n1 == m {
            // an empty side takes the point least similar to its own center
            let on_second = n1 == m;
            let own = |p: usize| if on_second { sims[p].1 } else { sims[p].0 };
            let worst = (0..m).min_by(|&x, &y| own(x).total_cmp(&own(y)).then(x.cmp(&y))).expect("nonempty");
            side[worst] = !on_second;
            changed = true;
        }
        centers = [
            concept(rows, points.iter().zip(&side).filter(|p| !*p.1).map(|p| *p.0), n_terms),
            concept(rows, points.iter().zip(&side).filter(|p| *p.1).map(|p| *p.0), n_terms),
        ];
        let objective: f64 = points.iter().zip(&side).map(|(&i, &s)| dot(&rows[i], &centers[usize::from(s)])).sum();
        if let Some(&prev) = trace.last() {
            debug_assert!(objective >= prev - 1e-9 * prev.abs().max(1.0), "2-means objective decreased");
        }
        trace.push(objective);
        if !changed && iter > 0 {
            break;
        }
    }
    // the side holding the first point is always the first cluster
    if side[0] {
        side.iter_mut().for_each(|s| *s = !*s);
    }
    TwoMeans {
        side,
        objective: *trace.last().expect("at least one iteration"),
        trace,
    }
}

fn scatter(rows: &[Vec<(usize, f64)>], members: &[usize], n_terms: usize) -> f64 {
    let mut s = vec![0.0; n_terms];
    for &i in members {
        for &(t, v) in &rows[i] {
            s[t] += v;
        }
    }
    let n = members.len() as f64;
    n - s.iter().map(|v| v * v).sum::<f64>() / n
}

/// Splits until `k_max` clusters exist, always bisecting the cluster with
/// the largest Euclidean scatter of its unit rows (ties: lowest id).
pub fn bisect(tdm: &TermDocMatrix, k_max: usize, seed: u64, opts: &ClusterOptions) -> Result<Bisection> {
    let n = tdm.row_count();
    if k_max < 2 {
        return Err(Error::InvalidInput(format!("k must be at least 2, got {k_max}")));
    }
    if k_max > n {
        return Err(Error::InvalidInput(format!("k = {k_max} exceeds the {n} classifiable documents")));
    }
    if opts.restarts == 0 || opts.max_iterations == 0 {
        return Err(Error::Config("restarts and max_iterations must be positive".into()));
    }
    let rows: Vec<Vec<(usize, f64)>> = (0..n).map(|i| tdm.unit_row(i, opts.weighting)).collect();
    let n_terms = tdm.term_count();
    let mut assignment = vec![0usize; n];
    let mut levels = vec![assignment.clone()];
    let mut splits = Vec::new();
    for step in 0..k_max - 1 {
        let k = step + 1;
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (i, &c) in assignment.iter().enumerate() {
            members[c].push(i);
        }
        let parent = (0..k)
            .filter(|&c| members[c].len() >= 2)
            .map(|c| (c, scatter(&rows, &members[c], n_terms)))
            .fold(None, |best: Option<(usize, f64)>, (c, s)| match best {
                Some((_, bs)) if bs >= s => best,
                _ => Some((c, s)),
            })
            .map(|(c, _)| c)
            .ok_or_else(|| Error::InvalidInput("no cluster left with two documents to split".into()))?;
        let points = &members[parent];
        let runs: Vec<TwoMeans> = (0..opts.restarts)
            .into_par_iter()
            .map(|r| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream((step * opts.restarts + r) as u64);
                let start = rng.random_range(0..points.len());
                two_means(&rows, points, n_terms, start, opts.max_iterations)
            })
            .collect();
        let best = runs
            .iter()
            .enumerate()
            .fold(0, |b, (r, run)| if run.objective > runs[b].objective { r } else { b });
        let child = k;
        for (&i, &s) in points.iter().zip(&runs[best].side) {
            if s {
                assignment[i] = child;
            }
        }
        let second = runs[best].side.iter().filter(|&&s| s).count();
        splits.push(SplitRecord {
            parent,
            child,
            sizes: (points.len() - second, second),
            objective: runs[best].objective,
            traces: runs.into_iter().map(|r| r.trace).collect(),
        });
        levels.push(assignment.clone());
    }
    Ok(Bisection {
        rows,
        n_terms,
        coverage: tdm.coverage(),
        levels,
        splits,
    })
}

impl Bisection {
    pub fn k_max(&self) -> usize {
        self.levels.len()
    }

    pub fn unit_rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn assignment(&self, k: usize) -> &[usize] {
        &self.levels[k - 1]
    }

    pub fn clustering(&self, k: usize) -> Clustering {
        assert!((2..=self.k_max()).contains(&k), "k outside the computed range");
        let assignment = self.levels[k - 1].clone();
        let mut sizes = vec![0; k];
        for &c in &assignment {
            sizes[c] += 1;
        }
        let centroids = (0..k)
            .map(|c| {
                concept(
                    &self.rows,
                    assignment.iter().enumerate().filter(|p| *p.1 == c).map(|p| p.0),
                    self.n_terms,
                )
            })
            .collect();
        Clustering {
            k,
            assignment,
            sizes,
            centroids,
            coverage: self.coverage,
            splits: self.splits[..k - 1].to_vec(),
        }
    }

    pub fn scores(&self, k: usize) -> ValidationScores {
        validity_indices(&self.rows, self.n_terms, self.assignment(k), k)
    }
}

pub fn bisecting_kmeans(tdm: &TermDocMatrix, k: usize, seed: u64, opts: &ClusterOptions) -> Result<Clustering> {
    Ok(bisect(tdm, k, seed, opts)?.clustering(k))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidationScores {
    pub k: usize,
    pub calinski_harabasz: f64,
    pub davies_bouldin: f64,
    /// Between-cluster over total sum of squares.
    pub rho: f64,
}

/// Calinski-Harabasz, Davies-Bouldin and BSS/TSS in Euclidean geometry on
/// unit rows.
pub fn validity_indices(rows: &[Vec<(usize, f64)>], n_terms: usize, assignment: &[usize], k: usize) -> ValidationScores {
    let n = rows.len();
    let mut sums = vec![vec![0.0; n_terms]; k];
    let mut sizes = vec![0usize; k];
    let mut total = vec![0.0; n_terms];
    for (row, &c) in rows.iter().zip(assignment) {
        sizes[c] += 1;
        for &(t, v) in row {
            sums[c][t] += v;
            total[t] += v;
        }
    }
    let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    let sq_norms: f64 = rows.iter().map(|r| r.iter().map(|p| p.1 * p.1).sum::<f64>()).sum();
    let tss = sq_norms - sq(&total) / n as f64;
    let means: Vec<Vec<f64>> = sums
        .iter()
        .zip(&sizes)
        .map(|(s, &m)| s.iter().map(|v| v / m.max(1) as f64).collect())
        .collect();
    // within-cluster squared distances and mean distances
    let mut wss = 0.0;
    let mut spread = vec![0.0; k];
    let mean_sq: Vec<f64> = means.iter().map(|m| sq(m)).collect();
    for (row, &c) in rows.iter().zip(assignment) {
        let x2: f64 = row.iter().map(|p| p.1 * p.1).sum();
        let d2 = (x2 - 2.0 * dot(row, &means[c]) + mean_sq[c]).max(0.0);
        wss += d2;
        spread[c] += d2.sqrt();
    }
    for c in 0..k {
        spread[c] /= sizes[c].max(1) as f64;
    }
    let bss = (tss - wss).max(0.0);
    let calinski_harabasz = if n == k {
        f64::NAN
    } else if wss <= 0.0 {
        f64::INFINITY
    } else {
        (bss / (k - 1) as f64) / (wss / (n - k) as f64)
    };
    let mut db = 0.0;
    for i in 0..k {
        let mut worst: f64 = 0.0;
        for j in 0..k {
            if i == j {
                continue;
            }
            let sep = means[i].iter().zip(&means[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let r = spread[i] + spread[j];
            let ratio = if r == 0.0 {
                0.0
            } else if sep == 0.0 {
                f64::INFINITY
            } else {
                r / sep
            };
            worst = worst.max(ratio);
        }
        db += worst;
    }
    ValidationScores {
        k,
        calinski_harabasz,
        davies_bouldin: db / k as f64,
        rho: if tss > 0.0 { (bss / tss).clamp(0.0, 1.0) } else { 0.0 },
    }
}

/// Scores every k in `k_range` from one bisection run.
pub fn validate_clusters(
    tdm: &TermDocMatrix,
    k_range: RangeInclusive<usize>,
    seed: u64,
    opts: &ClusterOptions,
) -> Result<(Bisection, Vec<ValidationScores>)> {
    let (lo, hi) = (*k_range.start(), *k_range.end());
    if lo < 2 || hi < lo {
        return Err(Error::Config(format!("invalid k range {lo}..={hi}")));
    }
    let b = bisect(tdm, hi, seed, opts)?;
    let scores = (lo..=hi).map(|k| b.scores(k)).collect();
    Ok((b, scores))
}

/// Competition ranks (1 = best); NaN ranks last.
fn ranks(values: &[f64], higher_is_better: bool) -> Vec<usize> {
    let better = |a: f64, b: f64| match (a.is_nan(), b.is_nan()) {
        (true, _) => false,
        (false, true) => true,
        _ if higher_is_better => a > b,
        _ => a < b,
    };
    values
        .iter()
        .map(|&v| 1 + values.iter().filter(|&&w| better(w, v)).count())
        .collect()
}

/// Rank-sum of Calinski-Harabasz (descending) and Davies-Bouldin
/// (ascending); ties go to the smaller k. ρ is not ranked.
pub fn select_k(scores: &[ValidationScores]) -> Result<usize> {
    if scores.is_empty() {
        return Err(Error::InvalidInput("no candidate cluster counts".into()));
    }
    let ch = ranks(&scores.iter().map(|s| s.calinski_harabasz).collect::<Vec<_>>(), true);
    let db = ranks(&scores.iter().map(|s| s.davies_bouldin).collect::<Vec<_>>(), false);
    let best = (0..scores.len())
        .min_by(|&a, &b| (ch[a] + db[a]).cmp(&(ch[b] + db[b])).then(scores[a].k.cmp(&scores[b].k)))
        .expect("nonempty");
    Ok(scores[best].k)
}

pub fn validation_csv(scores: &[ValidationScores]) -> String {
    let mut out = String::from("k,CH,DB,rho\n");
    for s in scores {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            s.k,
            num::fmt(s.calinski_harabasz),
            num::fmt(s.davies_bouldin),
            num::fmt(s.rho)
        );
    }
    out
}
