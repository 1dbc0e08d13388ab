//! Typed node/edge store for domains, social-media users and dredge words.
//!
//! A [`HeteroGraph`] is assembled once through [`GraphBuilder`] and is
//! read-only afterwards, so it can be shared freely between workers.

mod assortativity;
mod label;
pub mod snapshot;
mod split;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use assortativity::{label_assortativity, nominal_assortativity, AssortativityMode};
pub use label::{binarize_label, Binarizer, Boundary, DEFAULT_THRESHOLD};
pub use split::{stratified_split, SplitAssignment, SplitRatios, MIN_PER_CLASS};

/// Number of log-normalized SEO attributes carried by every domain.
pub const ATTRIBUTE_DIM: usize = 23;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeType {
    Domain,
    User,
    Dredge,
}

impl NodeType {
    pub const ALL: [NodeType; 3] = [NodeType::Domain, NodeType::User, NodeType::Dredge];

    pub fn as_str(self) -> &'static str {
        match self {
            NodeType::Domain => "domain",
            NodeType::User => "user",
            NodeType::Dredge => "dredge",
        }
    }
}

impl fmt::Display for NodeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Relation kinds. Each has a fixed (source type, target type) signature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EdgeType {
    /// Backlink from one domain to another.
    #[serde(rename = "phi1")]
    DomainDomain,
    /// A user posted a link to a domain.
    #[serde(rename = "phi2")]
    UserDomain,
    /// A user mentioned a dredge word.
    #[serde(rename = "phi3")]
    UserDredge,
    /// A dredge word's search results surface a domain.
    #[serde(rename = "phi4")]
    DredgeDomain,
}

impl EdgeType {
    pub const ALL: [EdgeType; 4] = [
        EdgeType::DomainDomain,
        EdgeType::UserDomain,
        EdgeType::UserDredge,
        EdgeType::DredgeDomain,
    ];

    pub fn signature(self) -> (NodeType, NodeType) {
        match self {
            EdgeType::DomainDomain => (NodeType::Domain, NodeType::Domain),
            EdgeType::UserDomain => (NodeType::User, NodeType::Domain),
            EdgeType::UserDredge => (NodeType::User, NodeType::Dredge),
            EdgeType::DredgeDomain => (NodeType::Dredge, NodeType::Domain),
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            EdgeType::DomainDomain => "phi1",
            EdgeType::UserDomain => "phi2",
            EdgeType::UserDredge => "phi3",
            EdgeType::DredgeDomain => "phi4",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        EdgeType::ALL.into_iter().find(|e| e.tag() == tag)
    }

    fn slot(self) -> usize {
        self as usize
    }
}

impl fmt::Display for EdgeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Reliable,
    Unreliable,
}

impl Label {
    /// Class index used by the classifier: 0 = reliable, 1 = unreliable.
    pub fn index(self) -> usize {
        match self {
            Label::Reliable => 0,
            Label::Unreliable => 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            Label::Reliable
        } else {
            Label::Unreliable
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Label::Reliable => Label::Unreliable,
            Label::Unreliable => Label::Reliable,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Reliable => "reliable",
            Label::Unreliable => "unreliable",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "reliable" => Some(Label::Reliable),
            "unreliable" => Some(Label::Unreliable),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
    Unlabeled,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
            Split::Unlabeled => "unlabeled",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "train" => Some(Split::Train),
            "val" => Some(Split::Val),
            "test" => Some(Split::Test),
            "unlabeled" => Some(Split::Unlabeled),
            _ => None,
        }
    }
}

/// Canonical form of a domain id: lowercased, scheme, `www.`, port and path
/// removed.
pub fn normalize_domain(raw: &str) -> String {
    let mut s = raw.trim().to_ascii_lowercase();
    if let Some(pos) = s.find("://") {
        s = s[pos + 3..].to_string();
    }
    if let Some(pos) = s.find(['/', '?', '#']) {
        s.truncate(pos);
    }
    if let Some(pos) = s.rfind(':') {
        if s[pos + 1..].chars().all(|c| c.is_ascii_digit()) {
            s.truncate(pos);
        }
    }
    let s = s.trim_end_matches('.');
    s.strip_prefix("www.").unwrap_or(s).to_string()
}

/// A website with its SEO attributes and optional reliability rating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainRecord {
    pub id: String,
    attributes: Vec<f64>,
    reliability_score: Option<f64>,
    label: Option<Label>,
    pub split: Option<Split>,
}

impl DomainRecord {
    pub fn unlabeled(id: impl Into<String>, attributes: Vec<f64>) -> Result<Self> {
        Self::new(id, attributes, None)
    }

    /// `rating` is the continuous score together with the label derived from it.
    pub fn new(
        id: impl Into<String>,
        attributes: Vec<f64>,
        rating: Option<(f64, Label)>,
    ) -> Result<Self> {
        let id = id.into();
        if attributes.len() != ATTRIBUTE_DIM {
            return Err(Error::shape(
                format!("attributes of domain {id}"),
                ATTRIBUTE_DIM,
                attributes.len(),
            ));
        }
        if let Some(bad) = attributes.iter().find(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite attribute {bad} for {id}")));
        }
        let (reliability_score, label) = match rating {
            Some((score, label)) => {
                if !(0.0..=1.0).contains(&score) {
                    return Err(Error::Input(format!("reliability score {score} for {id}")));
                }
                (Some(score), Some(label))
            }
            None => (None, None),
        };
        Ok(Self {
            id,
            attributes,
            reliability_score,
            label,
            split: None,
        })
    }

    pub fn attributes(&self) -> &[f64] {
        &self.attributes
    }

    pub fn reliability_score(&self) -> Option<f64> {
        self.reliability_score
    }

    pub fn label(&self) -> Option<Label> {
        self.label
    }

    pub fn with_split(mut self, split: Split) -> Self {
        self.split = Some(split);
        self
    }
}

/// A user node's feature vector (positional or text embedding).
#[derive(Debug, Clone, PartialEq)]
pub struct UserRecord {
    pub id: String,
    pub features: Vec<f64>,
}

/// Checks that all user feature vectors share one dimension.
pub fn check_user_dims(users: &[UserRecord]) -> Result<Option<usize>> {
    let Some(first) = users.first() else {
        return Ok(None);
    };
    let dim = first.features.len();
    for u in users {
        if u.features.len() != dim {
            return Err(Error::shape(format!("features of user {}", u.id), dim, u.features.len()));
        }
    }
    Ok(Some(dim))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DredgeWordRecord {
    phrase: String,
    embedding: Vec<f64>,
    targets: BTreeSet<String>,
}

impl DredgeWordRecord {
    pub fn new(
        phrase: impl Into<String>,
        embedding: Vec<f64>,
        targets: BTreeSet<String>,
    ) -> Result<Self> {
        let phrase = phrase.into();
        if phrase.trim().is_empty() {
            return Err(Error::Data("empty dredge phrase".into()));
        }
        if targets.is_empty() {
            return Err(Error::Data(format!("dredge word `{phrase}` has no target domain")));
        }
        Ok(Self {
            phrase,
            embedding,
            targets,
        })
    }

    pub fn phrase(&self) -> &str {
        &self.phrase
    }

    pub fn embedding(&self) -> &[f64] {
        &self.embedding
    }

    pub fn targets(&self) -> &BTreeSet<String> {
        &self.targets
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub kind: NodeType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub kind: EdgeType,
    pub weight: Option<u64>,
}

/// How weights of duplicate edges combine when graphs are merged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMerge {
    #[default]
    Sum,
    Max,
}

impl WeightMerge {
    fn combine(self, a: Option<u64>, b: Option<u64>) -> Option<u64> {
        match (a, b) {
            (None, None) => None,
            (Some(w), None) | (None, Some(w)) => Some(w),
            (Some(x), Some(y)) => Some(match self {
                WeightMerge::Sum => x.saturating_add(y),
                WeightMerge::Max => x.max(y),
            }),
        }
    }
}

/// Per-node lists of edge indices, one list per node.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Adjacency {
    out: Vec<Vec<usize>>,
    inc: Vec<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct HeteroGraph {
    nodes: Vec<Node>,
    index: HashMap<String, usize>,
    edges: Vec<Edge>,
    adjacency: [Adjacency; 4],
    domains: BTreeMap<String, DomainRecord>,
}

impl HeteroGraph {
    pub fn builder() -> GraphBuilder {
        GraphBuilder::default()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, idx: usize) -> &Node {
        &self.nodes[idx]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn nodes_of(&self, kind: NodeType) -> impl Iterator<Item = (usize, &Node)> + '_ {
        self.nodes.iter().enumerate().filter(move |(_, n)| n.kind == kind)
    }

    pub fn count_of(&self, kind: NodeType) -> usize {
        self.nodes.iter().filter(|n| n.kind == kind).count()
    }

    pub fn edges_of(&self, kind: EdgeType) -> impl Iterator<Item = &Edge> + '_ {
        self.edges.iter().filter(move |e| e.kind == kind)
    }

    pub fn edge_count_of(&self, kind: EdgeType) -> usize {
        self.edges_of(kind).count()
    }

    pub fn edge_types(&self) -> BTreeSet<EdgeType> {
        self.edges.iter().map(|e| e.kind).collect()
    }

    pub fn node_types(&self) -> BTreeSet<NodeType> {
        self.nodes.iter().map(|n| n.kind).collect()
    }

    /// Edge indices leaving `node` with type `kind`.
    pub fn out_edges(&self, node: usize, kind: EdgeType) -> &[usize] {
        &self.adjacency[kind.slot()].out[node]
    }

    /// Edge indices entering `node` with type `kind`.
    pub fn in_edges(&self, node: usize, kind: EdgeType) -> &[usize] {
        &self.adjacency[kind.slot()].inc[node]
    }

    /// Rebuilds the edge list of one type from the reverse index alone.
    pub fn edges_from_reverse(&self, kind: EdgeType) -> Vec<Edge> {
        let mut idx: Vec<usize> = self.adjacency[kind.slot()].inc.iter().flatten().copied().collect();
        idx.sort_unstable();
        idx.into_iter().map(|i| self.edges[i]).collect()
    }

    pub fn self_loop_count(&self) -> usize {
        self.edges.iter().filter(|e| e.source == e.target).count()
    }

    pub fn domain(&self, id: &str) -> Option<&DomainRecord> {
        self.domains.get(id)
    }

    pub fn domain_records(&self) -> impl Iterator<Item = &DomainRecord> + '_ {
        self.domains.values()
    }

    /// Binary labels of all labeled domain nodes.
    pub fn labels(&self) -> BTreeMap<String, Label> {
        self.domains
            .values()
            .filter_map(|d| d.label().map(|l| (d.id.clone(), l)))
            .collect()
    }

    pub fn split_of(&self, id: &str) -> Option<Split> {
        self.domains.get(id).and_then(|d| d.split)
    }

    /// Returns the subgraph holding only the given edge types and the nodes
    /// they touch (plus, when `keep_nodes` is given, all nodes of those types).
    pub fn restrict(&self, edge_types: &[EdgeType], keep_nodes: &[NodeType]) -> Result<HeteroGraph> {
        let mut b = GraphBuilder::default();
        for n in &self.nodes {
            if keep_nodes.contains(&n.kind) {
                b.add_node(&n.id, n.kind)?;
            }
        }
        for e in &self.edges {
            if edge_types.contains(&e.kind) {
                let s = &self.nodes[e.source];
                let t = &self.nodes[e.target];
                b.add_node(&s.id, s.kind)?;
                b.add_node(&t.id, t.kind)?;
                b.add_edge(&s.id, &t.id, e.kind, e.weight)?;
            }
        }
        for n in &b.nodes {
            if let Some(rec) = self.domains.get(&n.id) {
                b.domains.insert(n.id.clone(), rec.clone());
            }
        }
        b.build()
    }

    /// Node set and edge set union; duplicate edges collapse with their
    /// weights combined by `merge`.
    pub fn union(&self, other: &HeteroGraph, merge: WeightMerge) -> Result<HeteroGraph> {
        let mut b = GraphBuilder {
            merge,
            ..GraphBuilder::default()
        };
        for g in [self, other] {
            for n in &g.nodes {
                b.add_node(&n.id, n.kind)?;
            }
            for e in &g.edges {
                b.add_edge(&g.nodes[e.source].id, &g.nodes[e.target].id, e.kind, e.weight)?;
            }
            for rec in g.domains.values() {
                match b.domains.get(&rec.id) {
                    Some(existing) if existing != rec => {
                        return Err(Error::Schema(format!(
                            "conflicting domain records for {} in union",
                            rec.id
                        )))
                    }
                    _ => {
                        b.domains.insert(rec.id.clone(), rec.clone());
                    }
                }
            }
        }
        b.build()
    }

    /// Sorted (source id, target id, type, weight) tuples; convenient for
    /// comparing graphs independent of internal node numbering.
    pub fn edge_tuples(&self) -> Vec<(String, String, EdgeType, Option<u64>)> {
        let mut v: Vec<_> = self
            .edges
            .iter()
            .map(|e| {
                (
                    self.nodes[e.source].id.clone(),
                    self.nodes[e.target].id.clone(),
                    e.kind,
                    e.weight,
                )
            })
            .collect();
        v.sort();
        v
    }

    pub fn node_set(&self) -> BTreeSet<(String, NodeType)> {
        self.nodes.iter().map(|n| (n.id.clone(), n.kind)).collect()
    }
}

/// Set-union of two graphs with summed duplicate-edge weights.
pub fn graph_union(g1: &HeteroGraph, g2: &HeteroGraph) -> Result<HeteroGraph> {
    g1.union(g2, WeightMerge::Sum)
}

#[derive(Debug, Default)]
pub struct GraphBuilder {
    nodes: Vec<Node>,
    index: HashMap<String, usize>,
    edges: BTreeMap<(EdgeType, usize, usize), Option<u64>>,
    domains: BTreeMap<String, DomainRecord>,
    merge: WeightMerge,
}

impl GraphBuilder {
    pub fn with_merge(mut self, merge: WeightMerge) -> Self {
        self.merge = merge;
        self
    }

    /// Adds a node, or checks that an existing node has the same type.
    pub fn add_node(&mut self, id: &str, kind: NodeType) -> Result<usize> {
        if id.is_empty() {
            return Err(Error::Schema("empty node id".into()));
        }
        if let Some(&i) = self.index.get(id) {
            let existing = self.nodes[i].kind;
            if existing != kind {
                return Err(Error::Schema(format!(
                    "node `{id}` tagged both {existing} and {kind}"
                )));
            }
            return Ok(i);
        }
        let i = self.nodes.len();
        self.nodes.push(Node {
            id: id.to_string(),
            kind,
        });
        self.index.insert(id.to_string(), i);
        Ok(i)
    }

    pub fn add_domain(&mut self, record: DomainRecord) -> Result<usize> {
        let i = self.add_node(&record.id, NodeType::Domain)?;
        self.domains.insert(record.id.clone(), record);
        Ok(i)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn node_kind(&self, id: &str) -> Option<NodeType> {
        self.index.get(id).map(|&i| self.nodes[i].kind)
    }

    /// Adds an edge between two existing nodes. Endpoint types must match the
    /// edge-type signature; repeated edges accumulate weight.
    pub fn add_edge(
        &mut self,
        source: &str,
        target: &str,
        kind: EdgeType,
        weight: Option<u64>,
    ) -> Result<()> {
        if weight == Some(0) {
            return Err(Error::Data(format!("zero weight on {kind} edge {source}->{target}")));
        }
        let (st, tt) = kind.signature();
        let s = self.endpoint(source, st, kind)?;
        let t = self.endpoint(target, tt, kind)?;
        let merge = self.merge;
        self.edges
            .entry((kind, s, t))
            .and_modify(|w| *w = merge.combine(*w, weight))
            .or_insert(weight);
        Ok(())
    }

    fn endpoint(&self, id: &str, expected: NodeType, kind: EdgeType) -> Result<usize> {
        let &i = self
            .index
            .get(id)
            .ok_or_else(|| Error::Schema(format!("{kind} edge references unknown node `{id}`")))?;
        let actual = self.nodes[i].kind;
        if actual != expected {
            return Err(Error::Schema(format!(
                "{kind} edge endpoint `{id}` is {actual}, expected {expected}"
            )));
        }
        Ok(i)
    }

    pub fn build(self) -> Result<HeteroGraph> {
        let n = self.nodes.len();
        for id in self.domains.keys() {
            match self.index.get(id) {
                Some(&i) if self.nodes[i].kind == NodeType::Domain => {}
                _ => return Err(Error::Schema(format!("domain record `{id}` has no domain node"))),
            }
        }
        let edges: Vec<Edge> = self
            .edges
            .into_iter()
            .map(|((kind, source, target), weight)| Edge {
                source,
                target,
                kind,
                weight,
            })
            .collect();
        let mut adjacency: [Adjacency; 4] = Default::default();
        for adj in adjacency.iter_mut() {
            adj.out = vec![Vec::new(); n];
            adj.inc = vec![Vec::new(); n];
        }
        for (i, e) in edges.iter().enumerate() {
            let adj = &mut adjacency[e.kind.slot()];
            adj.out[e.source].push(i);
            adj.inc[e.target].push(i);
        }
        Ok(HeteroGraph {
            nodes: self.nodes,
            index: self.index,
            edges,
            adjacency,
            domains: self.domains,
        })
    }
}
