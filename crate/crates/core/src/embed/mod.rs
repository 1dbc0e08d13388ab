//! Positional node features: random walks over the undirected view of a
//! graph, then skip-gram with negative sampling over the walk corpus.

mod skipgram;
mod walk;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::VectorTable;

pub use skipgram::{train_skipgram, SkipGramConfig, SkipGramRun};
pub use walk::{generate_walks, WalkConfig, WalkCorpus, WalkGraph};

/// One vector per node id, all of the same dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    ids: Vec<String>,
    vectors: Vec<Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize, ids: Vec<String>, vectors: Vec<Vec<f64>>) -> Result<Self> {
        if ids.len() != vectors.len() {
            return Err(Error::shape("embedding rows", ids.len(), vectors.len()));
        }
        for (id, v) in ids.iter().zip(&vectors) {
            if v.len() != dim {
                return Err(Error::shape(format!("embedding of {id}"), dim, v.len()));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Data(format!("non-finite embedding for {id}")));
            }
        }
        Ok(Self { dim, ids, vectors })
    }

    pub fn dim(&self) -> usize {
        self.dim
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

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i]
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.ids.iter().position(|x| x == id).map(|i| self.vectors[i].as_slice())
    }

    pub fn to_vector_table(&self) -> VectorTable {
        let mut t = VectorTable::new(self.dim);
        for (id, v) in self.ids.iter().zip(&self.vectors) {
            t.insert(id.clone(), v.clone()).expect("dimensions checked at construction");
        }
        t
    }
}

/// Walk and skip-gram settings together.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Node2VecConfig {
    #[serde(default)]
    pub walk: WalkConfig,
    #[serde(default)]
    pub skipgram: SkipGramConfig,
}

/// Walks then skip-gram, with the walk and training seeds drawn from `seed`.
pub fn node2vec(graph: &WalkGraph, cfg: &Node2VecConfig, seed: u64) -> Result<EmbeddingTable> {
    let corpus = generate_walks(graph, &cfg.walk, crate::seed::derive(seed, "walks"))?;
    let run = train_skipgram(&corpus, graph.ids(), &cfg.skipgram, crate::seed::derive(seed, "skipgram"))?;
    Ok(run.table)
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}
