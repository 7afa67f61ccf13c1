//! Directed, weighted author-to-author reply network.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::corpus::Corpus;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Arc {
    pub source: usize,
    pub target: usize,
    pub weight: u64,
}

/// Arc `a -> b` means author `a` answered at least one post of `b`; the
/// weight counts answers. No self-loops, at most one arc per ordered pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplyGraph {
    nodes: Vec<String>,
    arcs: Vec<Arc>,
    out_adj: Vec<Vec<(usize, u64)>>,
    in_adj: Vec<Vec<(usize, u64)>>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GraphOptions {
    /// Also link a parentless post to the author of its thread's first post.
    pub thread_opener_edges: bool,
}

impl ReplyGraph {
    /// Builds a graph from explicit arcs. Arcs on the same ordered pair are
    /// merged by summing weights.
    pub fn from_arcs(nodes: Vec<String>, arcs: impl IntoIterator<Item = (usize, usize, u64)>) -> Result<Self> {
        let n = nodes.len();
        let mut merged: BTreeMap<(usize, usize), u64> = BTreeMap::new();
        for (s, t, w) in arcs {
            if s >= n || t >= n {
                return Err(Error::InvalidInput(format!("arc {s}->{t} out of range for {n} nodes")));
            }
            if s == t {
                return Err(Error::InvalidInput(format!("self-loop on node {s}")));
            }
            if w == 0 {
                return Err(Error::InvalidInput(format!("arc {s}->{t} has zero weight")));
            }
            *merged.entry((s, t)).or_default() += w;
        }
        let arcs: Vec<Arc> = merged
            .into_iter()
            .map(|((source, target), weight)| Arc { source, target, weight })
            .collect();
        let mut out_adj = vec![Vec::new(); n];
        let mut in_adj = vec![Vec::new(); n];
        for a in &arcs {
            out_adj[a.source].push((a.target, a.weight));
            in_adj[a.target].push((a.source, a.weight));
        }
        for list in &mut in_adj {
            list.sort_unstable();
        }
        Ok(ReplyGraph {
            nodes,
            arcs,
            out_adj,
            in_adj,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.binary_search_by(|n| n.as_str().cmp(id)).ok().or_else(|| self.nodes.iter().position(|n| n == id))
    }

    /// Out-neighbors of `v` with arc weights, ascending by neighbor index.
    pub fn out_neighbors(&self, v: usize) -> &[(usize, u64)] {
        &self.out_adj[v]
    }

    /// In-neighbors of `v` with arc weights, ascending by neighbor index.
    pub fn in_neighbors(&self, v: usize) -> &[(usize, u64)] {
        &self.in_adj[v]
    }

    pub fn weight(&self, source: usize, target: usize) -> u64 {
        self.out_adj[source]
            .binary_search_by_key(&target, |&(t, _)| t)
            .map(|i| self.out_adj[source][i].1)
            .unwrap_or(0)
    }

    pub fn is_isolate(&self, v: usize) -> bool {
        self.out_adj[v].is_empty() && self.in_adj[v].is_empty()
    }

    pub fn edges_csv(&self) -> String {
        let mut out = String::from("source,target,weight\n");
        for a in &self.arcs {
            out.push_str(&format!("{},{},{}\n", self.nodes[a.source], self.nodes[a.target], a.weight));
        }
        out
    }

    pub fn nodes_csv(&self) -> String {
        let mut out = String::from("author_id,index\n");
        for (i, n) in self.nodes.iter().enumerate() {
            out.push_str(&format!("{n},{i}\n"));
        }
        out
    }
}

/// One node per posting author (in `corpus.authors()` order); an arc for every
/// answered author other than oneself.
pub fn build_graph(corpus: &Corpus, opts: GraphOptions) -> ReplyGraph {
    let mut arcs: Vec<(usize, usize, u64)> = Vec::new();
    for post in corpus.posts() {
        let source = corpus.author_index(&post.author_id).expect("author indexed");
        let target = match corpus.parent_author(post) {
            Some(t) => Some(t),
            None if opts.thread_opener_edges && post.parent_post_id.is_none() => corpus
                .thread(&post.thread_id)
                .and_then(|posts| posts.first())
                .map(|&i| &corpus.posts()[i])
                .filter(|opener| opener.post_id != post.post_id)
                .and_then(|opener| corpus.author_index(&opener.author_id)),
            None => None,
        };
        if let Some(t) = target {
            if t != source {
                arcs.push((source, t, 1));
            }
        }
    }
    ReplyGraph::from_arcs(corpus.authors().to_vec(), arcs).expect("arcs valid by construction")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GraphSummary {
    pub nodes: usize,
    pub arcs: usize,
    pub total_weight: u64,
    pub isolates: usize,
}

pub fn graph_summary(graph: &ReplyGraph) -> GraphSummary {
    GraphSummary {
        nodes: graph.node_count(),
        arcs: graph.arc_count(),
        total_weight: graph.arcs.iter().map(|a| a.weight).sum(),
        isolates: (0..graph.node_count()).filter(|&v| graph.is_isolate(v)).count(),
    }
}
