//! On-disk graph snapshot: one delimited table per node type and per edge
//! type, plus `manifest.json`.
//!
//! | file                | columns                                                   |
//! |---------------------|-----------------------------------------------------------|
//! | `nodes_domain.csv`  | `index,id,reliability_score,label,split,attr_01..attr_23` |
//! | `nodes_user.csv`    | `index,id`                                                |
//! | `nodes_dredge.csv`  | `index,id`                                                |
//! | `edges_phi{1..4}.csv` | `source,target,weight` (empty weight = unweighted)      |
//!
//! `index` is the node's position in the graph so a reload reproduces the
//! original node order exactly.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Binarizer, DomainRecord, EdgeType, GraphBuilder, HeteroGraph, Label, NodeType, Split, ATTRIBUTE_DIM};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotManifest {
    pub format_version: u32,
    pub node_counts: BTreeMap<String, usize>,
    pub edge_counts: BTreeMap<String, usize>,
    pub labeled_domains: usize,
    pub binarizer: Binarizer,
    pub split_seed: Option<u64>,
    /// Number of edges whose source equals their target. They are kept.
    pub self_loops: usize,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl SnapshotManifest {
    pub fn describe(graph: &HeteroGraph, binarizer: Binarizer, split_seed: Option<u64>) -> Self {
        let node_counts = NodeType::ALL
            .iter()
            .map(|t| (t.as_str().to_string(), graph.count_of(*t)))
            .collect();
        let edge_counts = EdgeType::ALL
            .iter()
            .map(|t| (t.tag().to_string(), graph.edge_count_of(*t)))
            .collect();
        Self {
            format_version: FORMAT_VERSION,
            node_counts,
            edge_counts,
            labeled_domains: graph.labels().len(),
            binarizer,
            split_seed,
            self_loops: graph.self_loop_count(),
            notes: Vec::new(),
        }
    }
}

fn node_file(kind: NodeType) -> String {
    format!("nodes_{}.csv", kind.as_str())
}

fn edge_file(kind: EdgeType) -> String {
    format!("edges_{}.csv", kind.tag())
}

pub fn write_snapshot(graph: &HeteroGraph, manifest: &SnapshotManifest, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    for kind in NodeType::ALL {
        let path = dir.join(node_file(kind));
        let mut w = csv::Writer::from_path(&path).map_err(|e| Error::csv(&path, e))?;
        let mut header = vec!["index".to_string(), "id".to_string()];
        if kind == NodeType::Domain {
            header.extend(["reliability_score", "label", "split"].map(String::from));
            header.extend((1..=ATTRIBUTE_DIM).map(|i| format!("attr_{i:02}")));
        }
        w.write_record(&header).map_err(|e| Error::csv(&path, e))?;
        for (idx, node) in graph.nodes_of(kind) {
            let mut row = vec![idx.to_string(), node.id.clone()];
            if kind == NodeType::Domain {
                match graph.domain(&node.id) {
                    Some(rec) => {
                        row.push(rec.reliability_score().map(|s| s.to_string()).unwrap_or_default());
                        row.push(rec.label().map(|l| l.as_str().to_string()).unwrap_or_default());
                        row.push(rec.split.map(|s| s.as_str().to_string()).unwrap_or_default());
                        row.extend(rec.attributes().iter().map(|v| v.to_string()));
                    }
                    None => row.extend(std::iter::repeat_n(String::new(), 3 + ATTRIBUTE_DIM)),
                }
            }
            w.write_record(&row).map_err(|e| Error::csv(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
    }

    for kind in EdgeType::ALL {
        let path = dir.join(edge_file(kind));
        let mut w = csv::Writer::from_path(&path).map_err(|e| Error::csv(&path, e))?;
        w.write_record(["source", "target", "weight"]).map_err(|e| Error::csv(&path, e))?;
        for e in graph.edges_of(kind) {
            w.write_record([
                graph.node(e.source).id.as_str(),
                graph.node(e.target).id.as_str(),
                &e.weight.map(|x| x.to_string()).unwrap_or_default(),
            ])
            .map_err(|err| Error::csv(&path, err))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
    }

    let path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(manifest).map_err(|e| Error::Serialization(e.to_string()))?;
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))
}

pub fn read_snapshot(dir: &Path) -> Result<(HeteroGraph, SnapshotManifest)> {
    let mpath = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&mpath).map_err(|e| Error::io(&mpath, e))?;
    let manifest: SnapshotManifest =
        serde_json::from_str(&text).map_err(|e| Error::Serialization(format!("{}: {e}", mpath.display())))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::Schema(format!(
            "snapshot format {} unsupported (expected {FORMAT_VERSION})",
            manifest.format_version
        )));
    }

    // (index, id, kind, record)
    let mut rows: Vec<(usize, String, NodeType, Option<DomainRecord>)> = Vec::new();
    for kind in NodeType::ALL {
        let path = dir.join(node_file(kind));
        let mut r = csv::Reader::from_path(&path).map_err(|e| Error::csv(&path, e))?;
        for rec in r.records() {
            let rec = rec.map_err(|e| Error::csv(&path, e))?;
            let index: usize = parse(&rec, 0, &path)?;
            let id = rec.get(1).unwrap_or_default().to_string();
            let domain = if kind == NodeType::Domain && rec.len() == 5 + ATTRIBUTE_DIM && !rec[5].is_empty() {
                let attrs = (0..ATTRIBUTE_DIM)
                    .map(|i| parse::<f64>(&rec, 5 + i, &path))
                    .collect::<Result<Vec<_>>>()?;
                let rating = if rec[2].is_empty() {
                    None
                } else {
                    let score: f64 = parse(&rec, 2, &path)?;
                    let label = Label::parse(&rec[3])
                        .ok_or_else(|| Error::Data(format!("{}: bad label `{}`", path.display(), &rec[3])))?;
                    Some((score, label))
                };
                let mut d = DomainRecord::new(id.clone(), attrs, rating)?;
                if !rec[4].is_empty() {
                    d.split = Some(
                        Split::parse(&rec[4])
                            .ok_or_else(|| Error::Data(format!("{}: bad split `{}`", path.display(), &rec[4])))?,
                    );
                }
                Some(d)
            } else {
                None
            };
            rows.push((index, id, kind, domain));
        }
    }
    rows.sort_by_key(|r| r.0);
    if rows.iter().enumerate().any(|(i, r)| r.0 != i) {
        return Err(Error::Schema("node indices in snapshot are not contiguous".into()));
    }
    let mut b = GraphBuilder::default();
    for (_, id, kind, domain) in rows {
        match domain {
            Some(d) => b.add_domain(d)?,
            None => b.add_node(&id, kind)?,
        };
    }
    for kind in EdgeType::ALL {
        let path = dir.join(edge_file(kind));
        let mut r = csv::Reader::from_path(&path).map_err(|e| Error::csv(&path, e))?;
        for rec in r.records() {
            let rec = rec.map_err(|e| Error::csv(&path, e))?;
            let weight = if rec.get(2).unwrap_or_default().is_empty() {
                None
            } else {
                Some(parse::<u64>(&rec, 2, &path)?)
            };
            b.add_edge(&rec[0], &rec[1], kind, weight)?;
        }
    }
    Ok((b.build()?, manifest))
}

fn parse<T: std::str::FromStr>(rec: &csv::StringRecord, col: usize, path: &Path) -> Result<T> {
    let raw = rec
        .get(col)
        .ok_or_else(|| Error::Schema(format!("{}: missing column {col}", path.display())))?;
    raw.trim()
        .parse()
        .map_err(|_| Error::Data(format!("{}: cannot parse `{raw}` in column {col}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_round_trip() {
        let mut b = HeteroGraph::builder();
        let mut attrs = vec![0.0; ATTRIBUTE_DIM];
        attrs[3] = 1.25;
        b.add_domain(DomainRecord::new("a.com", attrs.clone(), Some((0.9, Label::Reliable))).unwrap().with_split(Split::Train))
            .unwrap();
        b.add_node("u1", NodeType::User).unwrap();
        b.add_domain(DomainRecord::unlabeled("b.com", attrs).unwrap()).unwrap();
        b.add_node("c.com", NodeType::Domain).unwrap();
        b.add_node("flu shot injury", NodeType::Dredge).unwrap();
        b.add_edge("b.com", "a.com", EdgeType::DomainDomain, Some(40)).unwrap();
        b.add_edge("a.com", "a.com", EdgeType::DomainDomain, Some(1)).unwrap();
        b.add_edge("u1", "a.com", EdgeType::UserDomain, Some(3)).unwrap();
        b.add_edge("u1", "flu shot injury", EdgeType::UserDredge, None).unwrap();
        b.add_edge("flu shot injury", "c.com", EdgeType::DredgeDomain, Some(1)).unwrap();
        let g = b.build().unwrap();
        let manifest = SnapshotManifest::describe(&g, Binarizer::default(), Some(5));
        assert_eq!(manifest.self_loops, 1);

        let dir = tempfile::tempdir().unwrap();
        write_snapshot(&g, &manifest, dir.path()).unwrap();
        let (g2, m2) = read_snapshot(dir.path()).unwrap();
        assert_eq!(m2, manifest);
        assert_eq!(g2.nodes(), g.nodes());
        assert_eq!(g2.edges(), g.edges());
        assert_eq!(g2.domain("a.com"), g.domain("a.com"));
        assert!(g2.domain("c.com").is_none());
    }
}
