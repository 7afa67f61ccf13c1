//! Per-node centrality and brokerage metrics on the reply network: degree
//! and weighted degree, in/out distinctiveness, harmonic closeness, Brandes
//! betweenness and Burt's constraint.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::ReplyGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    In,
    Out,
}

/// Which distinctiveness formula to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistinctivenessVariant {
    /// Σ over distinct neighbors u of log10((N-1) / deg(u)).
    #[default]
    Unweighted,
    /// As `Unweighted`, each term multiplied by the arc weight.
    Weighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosenessVariant {
    /// Mean inverse distance on the undirected projection; unreachable pairs
    /// contribute zero.
    #[default]
    Harmonic,
    /// (n_c - 1) / Σ distances inside the largest connected component of the
    /// undirected projection; zero outside it.
    FreemanLargestComponent,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NetworkOptions {
    pub distinctiveness: DistinctivenessVariant,
    pub closeness: ClosenessVariant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DegreeSuite {
    pub in_degree: usize,
    pub out_degree: usize,
    pub w_in_degree: u64,
    pub w_out_degree: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeCentralities {
    pub in_degree: usize,
    pub out_degree: usize,
    pub w_in_degree: u64,
    pub w_out_degree: u64,
    pub in_distinctiveness: f64,
    pub out_distinctiveness: f64,
    pub closeness: f64,
    pub betweenness: f64,
    /// Missing for isolates.
    pub constraint: Option<f64>,
}

fn resolve(graph: &ReplyGraph, node: &str) -> Result<usize> {
    graph.node_index(node).ok_or_else(|| Error::UnknownNode(node.to_string()))
}

fn degrees_at(graph: &ReplyGraph, v: usize) -> DegreeSuite {
    DegreeSuite {
        in_degree: graph.in_neighbors(v).len(),
        out_degree: graph.out_neighbors(v).len(),
        w_in_degree: graph.in_neighbors(v).iter().map(|&(_, w)| w).sum(),
        w_out_degree: graph.out_neighbors(v).iter().map(|&(_, w)| w).sum(),
    }
}

pub fn degree_suite(graph: &ReplyGraph, node: &str) -> Result<DegreeSuite> {
    Ok(degrees_at(graph, resolve(graph, node)?))
}

fn distinctiveness_at(graph: &ReplyGraph, v: usize, dir: Direction, variant: DistinctivenessVariant) -> f64 {
    let n1 = (graph.node_count() - 1) as f64;
    let (neighbors, degree_of): (&[(usize, u64)], fn(&ReplyGraph, usize) -> usize) = match dir {
        // in-neighbors are rewarded for sending few arcs
        Direction::In => (graph.in_neighbors(v), |g, u| g.out_neighbors(u).len()),
        Direction::Out => (graph.out_neighbors(v), |g, u| g.in_neighbors(u).len()),
    };
    neighbors
        .iter()
        .map(|&(u, w)| {
            let term = (n1 / degree_of(graph, u) as f64).log10();
            match variant {
                DistinctivenessVariant::Unweighted => term,
                DistinctivenessVariant::Weighted => w as f64 * term,
            }
        })
        .sum()
}

pub fn distinctiveness(graph: &ReplyGraph, node: &str, dir: Direction) -> Result<f64> {
    distinctiveness_with(graph, node, dir, DistinctivenessVariant::default())
}

pub fn distinctiveness_with(
    graph: &ReplyGraph,
    node: &str,
    dir: Direction,
    variant: DistinctivenessVariant,
) -> Result<f64> {
    let v = resolve(graph, node)?;
    if graph.node_count() < 2 {
        return Err(Error::DegenerateGraph("distinctiveness needs at least 2 nodes".into()));
    }
    Ok(distinctiveness_at(graph, v, dir, variant))
}

/// Simple undirected projection: sorted, deduplicated neighbor lists.
fn undirected(graph: &ReplyGraph) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); graph.node_count()];
    for a in graph.arcs() {
        adj[a.source].push(a.target);
        adj[a.target].push(a.source);
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    adj
}

fn bfs_distances(adj: &[Vec<usize>], source: usize, dist: &mut [usize], queue: &mut VecDeque<usize>) {
    dist.fill(usize::MAX);
    dist[source] = 0;
    queue.clear();
    queue.push_back(source);
    while let Some(v) = queue.pop_front() {
        for &u in &adj[v] {
            if dist[u] == usize::MAX {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
        }
    }
}

fn harmonic_all(adj: &[Vec<usize>]) -> Vec<f64> {
    let n = adj.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .into_par_iter()
        .map_init(
            || (vec![0usize; n], VecDeque::new()),
            |(dist, queue), v| {
                if adj[v].is_empty() {
                    return 0.0;
                }
                bfs_distances(adj, v, dist, queue);
                let sum: f64 = dist
                    .iter()
                    .enumerate()
                    .filter(|&(u, &d)| u != v && d != usize::MAX)
                    .map(|(_, &d)| 1.0 / d as f64)
                    .sum();
                sum / (n - 1) as f64
            },
        )
        .collect()
}

fn components(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut comp = vec![usize::MAX; n];
    let mut next = 0;
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        let mut stack = vec![s];
        comp[s] = next;
        while let Some(v) = stack.pop() {
            for &u in &adj[v] {
                if comp[u] == usize::MAX {
                    comp[u] = next;
                    stack.push(u);
                }
            }
        }
        next += 1;
    }
    comp
}

fn freeman_largest_component(adj: &[Vec<usize>]) -> Vec<f64> {
    let n = adj.len();
    let comp = components(adj);
    let mut sizes = vec![0usize; n];
    for &c in &comp {
        sizes[c] += 1;
    }
    // ties between equally large components go to the lowest component id
    let Some((largest, &size)) = sizes.iter().enumerate().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0))) else {
        return Vec::new();
    };
    if size < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .into_par_iter()
        .map_init(
            || (vec![0usize; n], VecDeque::new()),
            |(dist, queue), v| {
                if comp[v] != largest {
                    return 0.0;
                }
                bfs_distances(adj, v, dist, queue);
                let total: usize = dist.iter().filter(|&&d| d != usize::MAX).sum();
                (size - 1) as f64 / total as f64
            },
        )
        .collect()
}

pub fn closeness_all(graph: &ReplyGraph, variant: ClosenessVariant) -> Vec<f64> {
    let adj = undirected(graph);
    match variant {
        ClosenessVariant::Harmonic => harmonic_all(&adj),
        ClosenessVariant::FreemanLargestComponent => freeman_largest_component(&adj),
    }
}

/// Harmonic closeness of one node on the undirected projection, in [0, 1].
pub fn closeness(graph: &ReplyGraph, node: &str) -> Result<f64> {
    let v = resolve(graph, node)?;
    let n = graph.node_count();
    if n < 2 {
        return Ok(0.0);
    }
    let adj = undirected(graph);
    let mut dist = vec![0; n];
    bfs_distances(&adj, v, &mut dist, &mut VecDeque::new());
    let sum: f64 = dist
        .iter()
        .enumerate()
        .filter(|&(u, &d)| u != v && d != usize::MAX)
        .map(|(_, &d)| 1.0 / d as f64)
        .sum();
    Ok(sum / (n - 1) as f64)
}

struct BrandesScratch {
    sigma: Vec<f64>,
    dist: Vec<i64>,
    delta: Vec<f64>,
    preds: Vec<Vec<usize>>,
    order: Vec<usize>,
    queue: VecDeque<usize>,
}

impl BrandesScratch {
    fn new(n: usize) -> Self {
        BrandesScratch {
            sigma: vec![0.0; n],
            dist: vec![-1; n],
            delta: vec![0.0; n],
            preds: vec![Vec::new(); n],
            order: Vec::with_capacity(n),
            queue: VecDeque::new(),
        }
    }

    /// Single-source shortest paths from `s`, then dependency accumulation
    /// into `acc`.
    fn accumulate(&mut self, graph: &ReplyGraph, s: usize, acc: &mut [f64]) {
        for &v in &self.order {
            self.sigma[v] = 0.0;
            self.dist[v] = -1;
            self.delta[v] = 0.0;
            self.preds[v].clear();
        }
        self.order.clear();
        self.sigma[s] = 1.0;
        self.dist[s] = 0;
        self.queue.push_back(s);
        while let Some(v) = self.queue.pop_front() {
            self.order.push(v);
            for &(w, _) in graph.out_neighbors(v) {
                if self.dist[w] < 0 {
                    self.dist[w] = self.dist[v] + 1;
                    self.queue.push_back(w);
                }
                if self.dist[w] == self.dist[v] + 1 {
                    self.sigma[w] += self.sigma[v];
                    self.preds[w].push(v);
                }
            }
        }
        for &w in self.order.iter().rev() {
            for &v in &self.preds[w] {
                self.delta[v] += self.sigma[v] / self.sigma[w] * (1.0 + self.delta[w]);
            }
            if w != s {
                acc[w] += self.delta[w];
            }
        }
    }
}

const BRANDES_CHUNK: usize = 64;

/// Unnormalized directed betweenness (Brandes), unit arc lengths.
///
/// Sources are processed in fixed-size chunks whose partial sums are added in
/// chunk order, so the result is bit-identical for any thread count.
pub fn betweenness(graph: &ReplyGraph) -> Vec<f64> {
    let n = graph.node_count();
    let sources: Vec<usize> = (0..n).filter(|&v| !graph.out_neighbors(v).is_empty()).collect();
    let partials: Vec<Vec<f64>> = sources
        .par_chunks(BRANDES_CHUNK)
        .map(|chunk| {
            let mut scratch = BrandesScratch::new(n);
            let mut acc = vec![0.0; n];
            for &s in chunk {
                scratch.accumulate(graph, s, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; n];
    for part in partials {
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    total
}

/// Symmetrized tie strengths z_ij + z_ji, sorted by neighbor index.
fn symmetric_weights(graph: &ReplyGraph) -> Vec<Vec<(usize, f64)>> {
    let mut sym: Vec<Vec<(usize, f64)>> = vec![Vec::new(); graph.node_count()];
    for a in graph.arcs() {
        sym[a.source].push((a.target, a.weight as f64));
        sym[a.target].push((a.source, a.weight as f64));
    }
    for list in &mut sym {
        list.sort_by_key(|&(u, _)| u);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(list.len());
        for &(u, w) in list.iter() {
            match merged.last_mut() {
                Some((last, acc)) if *last == u => *acc += w,
                _ => merged.push((u, w)),
            }
        }
        *list = merged;
    }
    sym
}

fn proportional_strength(sym: &[Vec<(usize, f64)>], totals: &[f64], i: usize, j: usize) -> f64 {
    match sym[i].binary_search_by_key(&j, |&(u, _)| u) {
        Ok(k) => sym[i][k].1 / totals[i],
        Err(_) => 0.0,
    }
}

fn constraint_at(sym: &[Vec<(usize, f64)>], totals: &[f64], i: usize) -> Option<f64> {
    if sym[i].is_empty() {
        return None;
    }
    let mut c = 0.0;
    for &(j, w_ij) in &sym[i] {
        let direct = w_ij / totals[i];
        let indirect: f64 = sym[i]
            .iter()
            .filter(|&&(q, _)| q != j)
            .map(|&(q, w_iq)| w_iq / totals[i] * proportional_strength(sym, totals, q, j))
            .sum();
        c += (direct + indirect).powi(2);
    }
    Some(c)
}

/// Burt's constraint for every node on the symmetrized weighted graph.
pub fn constraint_all(graph: &ReplyGraph) -> Vec<Option<f64>> {
    let sym = symmetric_weights(graph);
    let totals: Vec<f64> = sym.iter().map(|l| l.iter().map(|&(_, w)| w).sum()).collect();
    (0..graph.node_count())
        .into_par_iter()
        .map(|i| constraint_at(&sym, &totals, i))
        .collect()
}

/// Burt's constraint of one node; `None` for isolates.
pub fn constraint(graph: &ReplyGraph, node: &str) -> Result<Option<f64>> {
    let i = resolve(graph, node)?;
    let sym = symmetric_weights(graph);
    let totals: Vec<f64> = sym.iter().map(|l| l.iter().map(|&(_, w)| w).sum()).collect();
    Ok(constraint_at(&sym, &totals, i))
}

/// Every metric for every node, aligned with `graph.nodes()`.
pub fn all_centralities(graph: &ReplyGraph, opts: &NetworkOptions) -> Vec<NodeCentralities> {
    let n = graph.node_count();
    let closeness = closeness_all(graph, opts.closeness);
    let betweenness = betweenness(graph);
    let constraint = constraint_all(graph);
    (0..n)
        .map(|v| {
            let d = degrees_at(graph, v);
            let (din, dout) = if n < 2 {
                (0.0, 0.0)
            } else {
                (
                    distinctiveness_at(graph, v, Direction::In, opts.distinctiveness),
                    distinctiveness_at(graph, v, Direction::Out, opts.distinctiveness),
                )
            };
            NodeCentralities {
                in_degree: d.in_degree,
                out_degree: d.out_degree,
                w_in_degree: d.w_in_degree,
                w_out_degree: d.w_out_degree,
                in_distinctiveness: din,
                out_distinctiveness: dout,
                closeness: closeness[v],
                betweenness: betweenness[v],
                constraint: constraint[v],
            }
        })
        .collect()
}

pub const NETWORK_COLUMNS: [&str; 10] = [
    "author_id",
    "in_degree",
    "out_degree",
    "w_in_degree",
    "w_out_degree",
    "in_distinctiveness",
    "out_distinctiveness",
    "closeness",
    "betweenness",
    "constraint",
];

#[cfg(test)]
mod tests {
    use super::*;

    fn g(n: usize, arcs: &[(usize, usize, u64)]) -> ReplyGraph {
        let nodes = (0..n).map(|i| format!("n{i}")).collect();
        ReplyGraph::from_arcs(nodes, arcs.iter().copied()).unwrap()
    }

    #[test]
    fn degree_examples() {
        let graph = g(3, &[(1, 0, 2), (2, 0, 3)]);
        let d = degree_suite(&graph, "n0").unwrap();
        assert_eq!((d.in_degree, d.out_degree, d.w_in_degree, d.w_out_degree), (2, 0, 5, 0));

        let graph = g(3, &[(0, 1, 4)]);
        let a = degree_suite(&graph, "n0").unwrap();
        let b = degree_suite(&graph, "n1").unwrap();
        let iso = degree_suite(&graph, "n2").unwrap();
        assert_eq!((a.in_degree, a.out_degree, a.w_in_degree, a.w_out_degree), (0, 1, 0, 4));
        assert_eq!((b.in_degree, b.out_degree, b.w_in_degree, b.w_out_degree), (1, 0, 4, 0));
        assert_eq!((iso.in_degree, iso.out_degree, iso.w_in_degree, iso.w_out_degree), (0, 0, 0, 0));
        assert!(matches!(degree_suite(&graph, "zz"), Err(Error::UnknownNode(_))));
    }

    #[test]
    fn distinctiveness_examples() {
        // N = 11, v = n0 with one in-neighbor of out-degree 1
        let graph = g(11, &[(1, 0, 1)]);
        assert!((distinctiveness(&graph, "n0", Direction::In).unwrap() - 1.0).abs() < 1e-12);

        // sole in-neighbor answers everyone
        let arcs: Vec<_> = (1..11).map(|t| (0, t, 1)).collect();
        let graph = g(11, &arcs);
        assert_eq!(distinctiveness(&graph, "n5", Direction::In).unwrap(), 0.0);

        // in-neighbors with out-degree 2 and 5
        let graph = g(11, &[(1, 0, 1), (1, 2, 1), (3, 0, 1), (3, 4, 1), (3, 5, 1), (3, 6, 1), (3, 7, 1)]);
        let d = distinctiveness(&graph, "n0", Direction::In).unwrap();
        assert!((d - 1.0).abs() < 1e-12, "{d}");

        assert!(matches!(
            distinctiveness(&g(1, &[]), "n0", Direction::Out),
            Err(Error::DegenerateGraph(_))
        ));
    }

    #[test]
    fn weighted_distinctiveness_scales_by_weight() {
        let graph = g(11, &[(1, 0, 3)]);
        let d = distinctiveness_with(&graph, "n0", Direction::In, DistinctivenessVariant::Weighted).unwrap();
        assert!((d - 3.0).abs() < 1e-12);
    }

    #[test]
    fn closeness_examples() {
        let star = g(4, &[(0, 1, 1), (2, 0, 1), (0, 3, 1)]);
        assert_eq!(closeness(&star, "n0").unwrap(), 1.0);
        assert!((closeness(&star, "n1").unwrap() - 2.0 / 3.0).abs() < 1e-12);
        let with_isolate = g(3, &[(0, 1, 1)]);
        assert_eq!(closeness(&with_isolate, "n2").unwrap(), 0.0);
        assert_eq!(closeness_all(&star, ClosenessVariant::Harmonic)[1], closeness(&star, "n1").unwrap());
    }

    #[test]
    fn freeman_closeness_on_largest_component() {
        // path 0-1-2 plus a separate pair 3-4
        let graph = g(5, &[(0, 1, 1), (1, 2, 1), (3, 4, 1)]);
        let c = closeness_all(&graph, ClosenessVariant::FreemanLargestComponent);
        assert_eq!(c, vec![2.0 / 3.0, 1.0, 2.0 / 3.0, 0.0, 0.0]);
    }

    #[test]
    fn betweenness_examples() {
        assert_eq!(betweenness(&g(3, &[(0, 1, 1), (1, 2, 1)])), vec![0.0, 1.0, 0.0]);
        assert_eq!(betweenness(&g(3, &[(0, 1, 1), (1, 2, 1), (2, 0, 1)])), vec![1.0, 1.0, 1.0]);
        // two geodesics 0->3 share credit
        let diamond = g(4, &[(0, 1, 1), (0, 2, 1), (1, 3, 1), (2, 3, 1)]);
        assert_eq!(betweenness(&diamond), vec![0.0, 0.5, 0.5, 0.0]);
    }

    #[test]
    fn constraint_examples() {
        let open = g(3, &[(0, 1, 1), (2, 0, 1)]);
        assert!((constraint(&open, "n0").unwrap().unwrap() - 0.5).abs() < 1e-12);
        let tri = g(3, &[(0, 1, 1), (1, 2, 1), (2, 0, 1)]);
        assert!((constraint(&tri, "n0").unwrap().unwrap() - 1.125).abs() < 1e-12);
        let pair = g(3, &[(0, 1, 5)]);
        assert_eq!(constraint(&pair, "n0").unwrap(), Some(1.0));
        assert_eq!(constraint(&pair, "n2").unwrap(), None);
    }

    #[test]
    fn two_node_records() {
        let graph = g(2, &[(0, 1, 1)]);
        let all = all_centralities(&graph, &NetworkOptions::default());
        assert_eq!(
            all[0],
            NodeCentralities {
                in_degree: 0,
                out_degree: 1,
                w_in_degree: 0,
                w_out_degree: 1,
                in_distinctiveness: 0.0,
                out_distinctiveness: 0.0,
                closeness: 1.0,
                betweenness: 0.0,
                constraint: Some(1.0),
            }
        );
        assert_eq!(all[1].in_degree, 1);
        assert!(all_centralities(&g(0, &[]), &NetworkOptions::default()).is_empty());
    }
}
