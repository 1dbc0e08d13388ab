use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeType, HeteroGraph, NodeType};

/// Undirected, deduplicated adjacency used for walking.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkGraph {
    ids: Vec<String>,
    neighbors: Vec<Vec<usize>>,
}

impl WalkGraph {
    pub fn from_edges(ids: Vec<String>, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut sets: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); ids.len()];
        for (a, b) in edges {
            sets[a].insert(b);
            sets[b].insert(a);
        }
        Self {
            ids,
            neighbors: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
        }
    }

    /// Nodes of `node_types` plus every node touched by an edge of
    /// `edge_types`, in graph order, with edge direction dropped.
    pub fn from_hetero(graph: &HeteroGraph, edge_types: &[EdgeType], node_types: &[NodeType]) -> Self {
        let mut keep = vec![false; graph.node_count()];
        for (i, n) in graph.nodes().iter().enumerate() {
            keep[i] = node_types.contains(&n.kind);
        }
        for e in graph.edges().iter().filter(|e| edge_types.contains(&e.kind)) {
            keep[e.source] = true;
            keep[e.target] = true;
        }
        let mut local = vec![usize::MAX; graph.node_count()];
        let mut ids = Vec::new();
        for (i, k) in keep.iter().enumerate() {
            if *k {
                local[i] = ids.len();
                ids.push(graph.node(i).id.clone());
            }
        }
        let edges: Vec<(usize, usize)> = graph
            .edges()
            .iter()
            .filter(|e| edge_types.contains(&e.kind))
            .map(|e| (local[e.source], local[e.target]))
            .collect();
        Self::from_edges(ids, edges)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.neighbors[a].binary_search(&b).is_ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkConfig {
    /// Nodes per walk, including the start node.
    pub walk_length: usize,
    pub walks_per_node: usize,
    /// Return bias. `p = q = 1` is a uniform first-order walk.
    pub p: f64,
    /// In-out bias.
    pub q: f64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self {
            walk_length: 20,
            walks_per_node: 10,
            p: 1.0,
            q: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkCorpus {
    pub walks: Vec<Vec<usize>>,
    pub walk_length: usize,
    pub walks_per_node: usize,
    pub seed: u64,
}

impl WalkCorpus {
    pub fn token_count(&self) -> usize {
        self.walks.iter().map(Vec::len).sum()
    }
}

/// Generates `walks_per_node` walks from every node. Each start node draws
/// from its own generator stream, so the corpus does not depend on how the
/// work is scheduled across threads. Walks are grouped by start node.
pub fn generate_walks(graph: &WalkGraph, cfg: &WalkConfig, seed: u64) -> Result<WalkCorpus> {
    if graph.is_empty() {
        return Err(Error::Input("cannot walk an empty graph".into()));
    }
    if cfg.walk_length == 0 {
        return Err(Error::Config("walk_length must be >= 1".into()));
    }
    if cfg.p <= 0.0 || cfg.q <= 0.0 {
        return Err(Error::Config("walk biases p and q must be positive".into()));
    }
    let uniform = cfg.p == 1.0 && cfg.q == 1.0;
    let walks: Vec<Vec<usize>> = (0..graph.len())
        .into_par_iter()
        .flat_map_iter(|start| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(start as u64);
            (0..cfg.walks_per_node)
                .map(|_| walk_from(graph, start, cfg, uniform, &mut rng))
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(WalkCorpus {
        walks,
        walk_length: cfg.walk_length,
        walks_per_node: cfg.walks_per_node,
        seed,
    })
}

fn walk_from(graph: &WalkGraph, start: usize, cfg: &WalkConfig, uniform: bool, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut walk = Vec::with_capacity(cfg.walk_length);
    walk.push(start);
    while walk.len() < cfg.walk_length {
        let cur = *walk.last().unwrap();
        let nbrs = graph.neighbors(cur);
        if nbrs.is_empty() {
            break;
        }
        let next = if uniform || walk.len() == 1 {
            nbrs[rng.gen_range(0..nbrs.len())]
        } else {
            let prev = walk[walk.len() - 2];
            let weight = |x: usize| {
                if x == prev {
                    1.0 / cfg.p
                } else if graph.has_edge(prev, x) {
                    1.0
                } else {
                    1.0 / cfg.q
                }
            };
            let total: f64 = nbrs.iter().map(|&x| weight(x)).sum();
            let mut r = rng.gen::<f64>() * total;
            let mut pick = *nbrs.last().unwrap();
            for &x in nbrs {
                r -= weight(x);
                if r < 0.0 {
                    pick = x;
                    break;
                }
            }
            pick
        };
        walk.push(next);
    }
    walk
}
