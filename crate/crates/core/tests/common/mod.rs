//! Independent oracles shared by the integration tests. Nothing here calls
//! into the code under test except to build inputs.

#![allow(dead_code)]

use forumscope::etm::{build_tdm, select_terms, ProcessedDoc, SelectOptions, TermDocMatrix, TermVocabulary};
use forumscope::graph::ReplyGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense weight matrix of a small directed graph; `w[i][j]` is the weight of
/// arc i→j, zero when absent.
#[derive(Debug, Clone)]
pub struct SmallGraph {
    pub w: Vec<Vec<u64>>,
}

impl SmallGraph {
    pub fn n(&self) -> usize {
        self.w.len()
    }

    pub fn random(rng: &mut impl Rng, max_nodes: usize) -> Self {
        let n = rng.random_range(1..=max_nodes);
        let density: f64 = rng.random_range(0.1..0.7);
        let mut w = vec![vec![0; n]; n];
        for (i, row) in w.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                if i != j && rng.random_bool(density) {
                    *cell = rng.random_range(1..=4);
                }
            }
        }
        SmallGraph { w }
    }

    pub fn from_weights(w: Vec<Vec<u64>>) -> Self {
        SmallGraph { w }
    }

    pub fn to_reply_graph(&self) -> ReplyGraph {
        let n = self.n();
        let names = (0..n).map(|i| format!("n{i}")).collect();
        let arcs: Vec<(usize, usize, u64)> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.w[i][j] > 0)
            .map(|(i, j)| (i, j, self.w[i][j]))
            .collect();
        ReplyGraph::from_arcs(names, arcs).expect("valid small graph")
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.w[v].iter().filter(|&&x| x > 0).count()
    }

    pub fn in_degree(&self, v: usize) -> usize {
        (0..self.n()).filter(|&u| self.w[u][v] > 0).count()
    }

    pub fn w_out(&self, v: usize) -> u64 {
        self.w[v].iter().sum()
    }

    pub fn w_in(&self, v: usize) -> u64 {
        (0..self.n()).map(|u| self.w[u][v]).sum()
    }

    /// Σ over in-neighbors u of log10((N−1)/outdeg(u)), optionally times
    /// the arc weight.
    pub fn in_distinctiveness(&self, v: usize, weighted: bool) -> f64 {
        let n1 = (self.n() - 1) as f64;
        (0..self.n())
            .filter(|&u| self.w[u][v] > 0)
            .map(|u| {
                let t = (n1 / self.out_degree(u) as f64).log10();
                if weighted {
                    self.w[u][v] as f64 * t
                } else {
                    t
                }
            })
            .sum()
    }

    pub fn out_distinctiveness(&self, v: usize, weighted: bool) -> f64 {
        let n1 = (self.n() - 1) as f64;
        (0..self.n())
            .filter(|&u| self.w[v][u] > 0)
            .map(|u| {
                let t = (n1 / self.in_degree(u) as f64).log10();
                if weighted {
                    self.w[v][u] as f64 * t
                } else {
                    t
                }
            })
            .sum()
    }

    fn adjacent(&self, a: usize, b: usize, directed: bool) -> bool {
        self.w[a][b] > 0 || (!directed && self.w[b][a] > 0)
    }

    /// Every simple path from s to t, as node sequences.
    pub fn simple_paths(&self, s: usize, t: usize, directed: bool) -> Vec<Vec<usize>> {
        fn walk(g: &SmallGraph, path: &mut Vec<usize>, t: usize, directed: bool, out: &mut Vec<Vec<usize>>) {
            let v = *path.last().unwrap();
            if v == t {
                out.push(path.clone());
                return;
            }
            for u in 0..g.n() {
                if g.adjacent(v, u, directed) && !path.contains(&u) {
                    path.push(u);
                    walk(g, path, t, directed, out);
                    path.pop();
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut vec![s], t, directed, &mut out);
        out
    }

    /// All shortest s→t paths found by exhaustive enumeration.
    pub fn geodesics(&self, s: usize, t: usize, directed: bool) -> Vec<Vec<usize>> {
        let paths = self.simple_paths(s, t, directed);
        let Some(min) = paths.iter().map(Vec::len).min() else {
            return Vec::new();
        };
        paths.into_iter().filter(|p| p.len() == min).collect()
    }

    /// Unnormalized directed betweenness by counting geodesics.
    pub fn betweenness(&self) -> Vec<f64> {
        let n = self.n();
        let mut b = vec![0.0; n];
        for s in 0..n {
            for t in 0..n {
                if s == t {
                    continue;
                }
                let geo = self.geodesics(s, t, true);
                if geo.is_empty() {
                    continue;
                }
                for v in 0..n {
                    if v == s || v == t {
                        continue;
                    }
                    let through = geo.iter().filter(|p| p.contains(&v)).count();
                    b[v] += through as f64 / geo.len() as f64;
                }
            }
        }
        b
    }

    /// Harmonic closeness on the undirected projection.
    pub fn closeness(&self, v: usize) -> f64 {
        let n = self.n();
        if n < 2 {
            return 0.0;
        }
        let sum: f64 = (0..n)
            .filter(|&u| u != v)
            .filter_map(|u| self.geodesics(v, u, false).first().map(|p| 1.0 / (p.len() - 1) as f64))
            .sum();
        sum / (n - 1) as f64
    }

    /// Burt's constraint on the symmetrized weights, `None` for isolates.
    pub fn constraint(&self, i: usize) -> Option<f64> {
        let n = self.n();
        let z = |a: usize, b: usize| (self.w[a][b] + self.w[b][a]) as f64;
        let total = |a: usize| (0..n).map(|b| z(a, b)).sum::<f64>();
        let p = |a: usize, b: usize| if a == b || total(a) == 0.0 { 0.0 } else { z(a, b) / total(a) };
        if total(i) == 0.0 {
            return None;
        }
        let mut c = 0.0;
        for j in 0..n {
            if j == i || z(i, j) == 0.0 {
                continue;
            }
            let indirect: f64 = (0..n).filter(|&q| q != i && q != j).map(|q| p(i, q) * p(q, j)).sum();
            c += (p(i, j) + indirect).powi(2);
        }
        Some(c)
    }
}

/// Adjusted Rand index of two labelings.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0u64; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1;
    }
    let c2 = |k: u64| (k * k.saturating_sub(1)) as f64 / 2.0;
    let index: f64 = table.iter().flatten().map(|&v| c2(v)).sum();
    let rows: f64 = table.iter().map(|r| c2(r.iter().sum())).sum();
    let cols: f64 = (0..kb).map(|j| c2(table.iter().map(|r| r[j]).sum())).sum();
    let total = c2(a.len() as u64);
    let expected = rows * cols / total;
    let max = (rows + cols) / 2.0;
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

/// Pearson χ² of a contingency table, straight from the definition.
pub fn chi2_oracle(table: &[Vec<f64>]) -> f64 {
    let n: f64 = table.iter().flatten().sum();
    let rows: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<f64> = (0..table[0].len()).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    let mut chi2 = 0.0;
    for (i, r) in table.iter().enumerate() {
        for (j, &o) in r.iter().enumerate() {
            let e = rows[i] * cols[j] / n;
            chi2 += (o - e) * (o - e) / e;
        }
    }
    chi2
}

/// Documents drawn from `topics` disjoint vocabularies of `words` terms
/// each, `len` tokens per document. Returns the matrix, its vocabulary and
/// the planted topic of every row.
pub fn planted_topics(
    seed: u64,
    docs: usize,
    topics: usize,
    words: usize,
    len: usize,
) -> (TermDocMatrix, TermVocabulary, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut processed = Vec::with_capacity(docs);
    let mut truth = Vec::with_capacity(docs);
    for d in 0..docs {
        let t = rng.random_range(0..topics);
        let tokens = (0..len).map(|_| format!("t{t}w{}", rng.random_range(0..words))).collect();
        processed.push(ProcessedDoc {
            doc_id: format!("d{d}"),
            tokens,
        });
        truth.push(t);
    }
    let vocab = select_terms(&processed, &SelectOptions::default()).expect("planted vocabulary");
    let tdm = build_tdm(&processed, &vocab);
    assert_eq!(tdm.row_count(), docs, "every planted doc is classified");
    (tdm, vocab, truth)
}

/// Mann-Whitney U of `a` by comparing every pair.
pub fn u_by_pairs(a: &[f64], b: &[f64]) -> f64 {
    let mut u = 0.0;
    for &x in a {
        for &y in b {
            if x > y {
                u += 1.0;
            } else if x == y {
                u += 0.5;
            }
        }
    }
    u
}

/// R² of an OLS regression of `y` on `xs` (with intercept), by Gaussian
/// elimination on the normal equations.
pub fn ols_r2(y: &[f64], xs: &[&[f64]]) -> f64 {
    let n = y.len();
    let k = xs.len() + 1;
    let row = |i: usize| -> Vec<f64> {
        let mut r = vec![1.0];
        r.extend(xs.iter().map(|x| x[i]));
        r
    };
    let mut a = vec![vec![0.0; k + 1]; k];
    for i in 0..n {
        let r = row(i);
        for p in 0..k {
            for q in 0..k {
                a[p][q] += r[p] * r[q];
            }
            a[p][k] += r[p] * y[i];
        }
    }
    for c in 0..k {
        let piv = (c..k).max_by(|&x, &z| a[x][c].abs().total_cmp(&a[z][c].abs())).unwrap();
        a.swap(c, piv);
        for r in 0..k {
            if r != c {
                let f = a[r][c] / a[c][c];
                for j in c..=k {
                    a[r][j] -= f * a[c][j];
                }
            }
        }
    }
    let beta: Vec<f64> = (0..k).map(|c| a[c][k] / a[c][c]).collect();
    let mean = y.iter().sum::<f64>() / n as f64;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for i in 0..n {
        let fit: f64 = row(i).iter().zip(&beta).map(|(x, b)| x * b).sum();
        ss_res += (y[i] - fit).powi(2);
        ss_tot += (y[i] - mean).powi(2);
    }
    1.0 - ss_res / ss_tot
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}
