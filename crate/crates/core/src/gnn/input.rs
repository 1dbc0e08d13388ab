use std::collections::BTreeMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::layer::NeighborIndex;
use crate::error::{Error, Result};
use crate::graph::{EdgeType, HeteroGraph, Label, NodeType, Split};
use crate::ingest::VectorTable;

/// Which stored edge types also get a reversed copy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReverseEdges {
    None,
    /// φ2–φ4, so that domains hear from users and dredge words.
    #[default]
    NonDomain,
    All,
}

impl ReverseEdges {
    pub fn applies(self, kind: EdgeType) -> bool {
        match self {
            ReverseEdges::None => false,
            ReverseEdges::NonDomain => kind != EdgeType::DomainDomain,
            ReverseEdges::All => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeInput {
    pub name: String,
    pub ids: Vec<String>,
    pub features: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelationInput {
    pub name: String,
    pub src: usize,
    pub dst: usize,
    pub index: NeighborIndex,
}

/// Shape-only description of a model input; parameters are created against it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputSchema {
    pub types: Vec<(String, usize)>,
    pub relations: Vec<(String, String, String)>,
    pub target: String,
}

impl InputSchema {
    pub fn type_dim(&self, name: &str) -> Option<usize> {
        self.types.iter().find(|t| t.0 == name).map(|t| t.1)
    }
}

/// Dense features and neighbor indices for one forward pass. Rows of the
/// target type are the ones classified.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelInput {
    pub types: Vec<TypeInput>,
    pub relations: Vec<RelationInput>,
    pub target: usize,
    /// Target-type rows that are domain nodes (all rows unless the input
    /// was flattened from a mixed graph).
    pub domain_rows: Vec<usize>,
}

impl ModelInput {
    pub fn new(types: Vec<TypeInput>, relations: Vec<RelationInput>, target: usize) -> Result<Self> {
        if target >= types.len() {
            return Err(Error::ModelSchema(format!("target type {target} out of range")));
        }
        for t in &types {
            if t.ids.len() != t.features.nrows() {
                return Err(Error::shape(format!("feature rows of `{}`", t.name), t.ids.len(), t.features.nrows()));
            }
        }
        for r in &relations {
            if r.src >= types.len() || r.dst >= types.len() {
                return Err(Error::ModelSchema(format!("relation `{}` references a missing type", r.name)));
            }
            if r.index.n_src() != types[r.src].ids.len() || r.index.n_dst() != types[r.dst].ids.len() {
                return Err(Error::ModelSchema(format!("relation `{}` index does not match type sizes", r.name)));
            }
        }
        let domain_rows = (0..types[target].ids.len()).collect();
        Ok(Self {
            types,
            relations,
            target,
            domain_rows,
        })
    }

    pub fn schema(&self) -> InputSchema {
        InputSchema {
            types: self.types.iter().map(|t| (t.name.clone(), t.features.ncols())).collect(),
            relations: self
                .relations
                .iter()
                .map(|r| (r.name.clone(), self.types[r.src].name.clone(), self.types[r.dst].name.clone()))
                .collect(),
            target: self.types[self.target].name.clone(),
        }
    }

    pub fn target_ids(&self) -> &[String] {
        &self.types[self.target].ids
    }

    pub fn type_index(&self, name: &str) -> Option<usize> {
        self.types.iter().position(|t| t.name == name)
    }

    /// One node type, one relation. Reverse copies of the edge types selected
    /// by `reverse` are folded into the same relation.
    pub fn homogeneous(
        graph: &HeteroGraph,
        features: &BTreeMap<NodeType, VectorTable>,
        reverse: ReverseEdges,
        weighted: bool,
    ) -> Result<Self> {
        let dim = features
            .values()
            .next()
            .map(VectorTable::dim)
            .ok_or_else(|| Error::Config("no feature tables supplied".into()))?;
        let mut ids = Vec::with_capacity(graph.node_count());
        let mut x = Array2::zeros((graph.node_count(), dim));
        let mut domain_rows = Vec::new();
        for (i, node) in graph.nodes().iter().enumerate() {
            let table = features
                .get(&node.kind)
                .ok_or_else(|| Error::Data(format!("no feature source for {} nodes", node.kind.as_str())))?;
            if table.dim() != dim {
                return Err(Error::shape(format!("{} feature dim", node.kind.as_str()), dim, table.dim()));
            }
            let v = table
                .get(&node.id)
                .ok_or_else(|| Error::Data(format!("missing features for node `{}`", node.id)))?;
            x.row_mut(i).assign(&ndarray::ArrayView1::from(v));
            ids.push(node.id.clone());
            if node.kind == NodeType::Domain {
                domain_rows.push(i);
            }
        }
        let mut triples = Vec::with_capacity(graph.edge_count());
        for e in graph.edges() {
            let w = e.weight.unwrap_or(1) as f64;
            triples.push((e.source, e.target, w));
            if reverse.applies(e.kind) {
                triples.push((e.target, e.source, w));
            }
        }
        let n = ids.len();
        let index = NeighborIndex::new(n, n, &triples, weighted)?;
        let mut input = Self::new(
            vec![TypeInput {
                name: "node".into(),
                ids,
                features: x,
            }],
            vec![RelationInput {
                name: "edge".into(),
                src: 0,
                dst: 0,
                index,
            }],
            0,
        )?;
        input.domain_rows = domain_rows;
        Ok(input)
    }

    /// One input type per node type present, one relation per stored edge
    /// type (named by its tag) plus `rev_<tag>` for reversed copies.
    pub fn heterogeneous(
        graph: &HeteroGraph,
        features: &BTreeMap<NodeType, VectorTable>,
        reverse: ReverseEdges,
        weighted: bool,
    ) -> Result<Self> {
        let kinds: Vec<NodeType> = graph.node_types().into_iter().collect();
        if !kinds.contains(&NodeType::Domain) {
            return Err(Error::ModelSchema("graph has no domain nodes".into()));
        }
        let mut local = vec![usize::MAX; graph.node_count()];
        let mut types = Vec::new();
        for &kind in &kinds {
            let table = features
                .get(&kind)
                .ok_or_else(|| Error::Data(format!("no feature source for {} nodes", kind.as_str())))?;
            let members: Vec<(usize, &str)> = graph.nodes_of(kind).map(|(i, n)| (i, n.id.as_str())).collect();
            let mut x = Array2::zeros((members.len(), table.dim()));
            let mut ids = Vec::with_capacity(members.len());
            for (row, &(gi, id)) in members.iter().enumerate() {
                let v = table
                    .get(id)
                    .ok_or_else(|| Error::Data(format!("missing features for node `{id}`")))?;
                x.row_mut(row).assign(&ndarray::ArrayView1::from(v));
                local[gi] = row;
                ids.push(id.to_string());
            }
            types.push(TypeInput {
                name: kind.as_str().to_string(),
                ids,
                features: x,
            });
        }
        let pos = |k: NodeType| kinds.iter().position(|&x| x == k).expect("type present");
        let mut relations = Vec::new();
        for kind in graph.edge_types() {
            let (s, d) = kind.signature();
            let (si, di) = (pos(s), pos(d));
            let triples: Vec<(usize, usize, f64)> = graph
                .edges_of(kind)
                .map(|e| (local[e.source], local[e.target], e.weight.unwrap_or(1) as f64))
                .collect();
            let (ns, nd) = (types[si].ids.len(), types[di].ids.len());
            relations.push(RelationInput {
                name: kind.tag().to_string(),
                src: si,
                dst: di,
                index: NeighborIndex::new(ns, nd, &triples, weighted)?,
            });
            if reverse.applies(kind) {
                let rev: Vec<_> = triples.iter().map(|&(a, b, w)| (b, a, w)).collect();
                relations.push(RelationInput {
                    name: format!("rev_{}", kind.tag()),
                    src: di,
                    dst: si,
                    index: NeighborIndex::new(nd, ns, &rev, weighted)?,
                });
            }
        }
        if relations.is_empty() {
            // keep a (neighborless) self path so isolated domains are still classifiable
            let n = types[pos(NodeType::Domain)].ids.len();
            relations.push(RelationInput {
                name: EdgeType::DomainDomain.tag().to_string(),
                src: pos(NodeType::Domain),
                dst: pos(NodeType::Domain),
                index: NeighborIndex::new(n, n, &[], weighted)?,
            });
        }
        Self::new(types, relations, pos(NodeType::Domain))
    }
}

/// Labels and split tags for every target row.
#[derive(Debug, Clone, PartialEq)]
pub struct Supervision {
    pub labels: Vec<Option<usize>>,
    pub splits: Vec<Split>,
}

impl Supervision {
    pub fn from_graph(graph: &HeteroGraph, input: &ModelInput) -> Self {
        let ids = input.target_ids();
        let mut labels = Vec::with_capacity(ids.len());
        let mut splits = Vec::with_capacity(ids.len());
        for id in ids {
            match graph.domain(id) {
                Some(rec) => {
                    labels.push(rec.label().map(Label::index));
                    splits.push(match (rec.label(), rec.split) {
                        (Some(_), Some(split)) => split,
                        _ => Split::Unlabeled,
                    });
                }
                None => {
                    labels.push(None);
                    splits.push(Split::Unlabeled);
                }
            }
        }
        Self { labels, splits }
    }

    pub fn mask(&self, split: Split) -> Vec<bool> {
        self.splits
            .iter()
            .zip(&self.labels)
            .map(|(s, l)| *s == split && l.is_some())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}
