use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{EdgeType, HeteroGraph, Label};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AssortativityMode {
    /// Every edge counts; unlabeled endpoints form their own category.
    Full,
    /// Only edges whose endpoints are both labeled.
    LabeledInduced,
}

/// Newman's nominal assortativity of an undirected edge list over
/// categories `0..n_categories`. Each edge contributes to both `e[a][b]` and `e[b][a]`.
pub fn nominal_assortativity(
    pairs: impl IntoIterator<Item = (usize, usize)>,
    n_categories: usize,
) -> Result<f64> {
    let mut mixing = vec![vec![0.0f64; n_categories]; n_categories];
    let mut total = 0.0;
    for (a, b) in pairs {
        mixing[a][b] += 1.0;
        mixing[b][a] += 1.0;
        total += 2.0;
    }
    if total == 0.0 {
        return Err(Error::UndefinedStatistic("no qualifying edges".into()));
    }
    let trace: f64 = (0..n_categories).map(|i| mixing[i][i] / total).sum();
    let marginal_sq: f64 = (0..n_categories)
        .map(|i| {
            let a: f64 = mixing[i].iter().sum::<f64>() / total;
            a * a
        })
        .sum();
    let denom = 1.0 - marginal_sq;
    if denom.abs() < 1e-15 {
        return Err(Error::UndefinedStatistic(
            "all edge endpoints share one category".into(),
        ));
    }
    Ok((trace - marginal_sq) / denom)
}

/// Label assortativity over the edges of one type.
pub fn label_assortativity(
    graph: &HeteroGraph,
    edge_type: EdgeType,
    labels: &BTreeMap<String, Label>,
    mode: AssortativityMode,
) -> Result<f64> {
    const UNLABELED: usize = 2;
    let category = |idx: usize| -> usize {
        labels
            .get(&graph.node(idx).id)
            .map(|l| l.index())
            .unwrap_or(UNLABELED)
    };
    let pairs = graph
        .edges_of(edge_type)
        .map(|e| (category(e.source), category(e.target)))
        .filter(|&(a, b)| mode == AssortativityMode::Full || (a != UNLABELED && b != UNLABELED));
    nominal_assortativity(pairs, 3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NodeType;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn build(n: usize, edges: &[(usize, usize)]) -> HeteroGraph {
        let mut b = HeteroGraph::builder();
        for i in 0..n {
            b.add_node(&format!("d{i}"), NodeType::Domain).unwrap();
        }
        for &(s, t) in edges {
            b.add_edge(&format!("d{s}"), &format!("d{t}"), EdgeType::DomainDomain, None).unwrap();
        }
        b.build().unwrap()
    }

    fn labels_from(f: impl Fn(usize) -> Option<Label>, n: usize) -> BTreeMap<String, Label> {
        (0..n).filter_map(|i| f(i).map(|l| (format!("d{i}"), l))).collect()
    }

    /// Pearson correlation of the binary label across edge ends, with each
    /// edge entered in both orientations. Equals Newman's r for two classes.
    fn pearson_oracle(ends: &[(f64, f64)]) -> f64 {
        let sym: Vec<(f64, f64)> = ends.iter().flat_map(|&(a, b)| [(a, b), (b, a)]).collect();
        let n = sym.len() as f64;
        let mx = sym.iter().map(|p| p.0).sum::<f64>() / n;
        let my = sym.iter().map(|p| p.1).sum::<f64>() / n;
        let cov = sym.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>();
        let vx = sym.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        let vy = sym.iter().map(|p| (p.1 - my).powi(2)).sum::<f64>();
        cov / (vx * vy).sqrt()
    }

    /// Explicit mixing-matrix count over k categories.
    fn matrix_oracle(ends: &[(usize, usize)], k: usize) -> f64 {
        let mut e = vec![vec![0.0; k]; k];
        for &(a, b) in ends {
            e[a][b] += 0.5;
            e[b][a] += 0.5;
        }
        let m = ends.len() as f64;
        let mut tr = 0.0;
        let mut ab = 0.0;
        for i in 0..k {
            tr += e[i][i] / m;
            let ai: f64 = (0..k).map(|j| e[i][j]).sum::<f64>() / m;
            let bi: f64 = (0..k).map(|j| e[j][i]).sum::<f64>() / m;
            ab += ai * bi;
        }
        (tr - ab) / (1.0 - ab)
    }

    #[test]
    fn separate_cliques_are_perfectly_assortative() {
        let mut edges = vec![];
        for a in 0..4 {
            for b in 0..4 {
                if a != b {
                    edges.push((a, b));
                    edges.push((a + 4, b + 4));
                }
            }
        }
        let g = build(8, &edges);
        let labels = labels_from(|i| Some(if i < 4 { Label::Reliable } else { Label::Unreliable }), 8);
        let r = label_assortativity(&g, EdgeType::DomainDomain, &labels, AssortativityMode::LabeledInduced).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn complete_bipartite_is_perfectly_disassortative() {
        let mut edges = vec![];
        for a in 0..3 {
            for b in 3..7 {
                edges.push((a, b));
            }
        }
        let g = build(7, &edges);
        let labels = labels_from(|i| Some(if i < 3 { Label::Reliable } else { Label::Unreliable }), 7);
        let r = label_assortativity(&g, EdgeType::DomainDomain, &labels, AssortativityMode::Full).unwrap();
        assert!((r + 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_graph_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let n = 12;
            let edges: Vec<(usize, usize)> = (0..25).map(|_| (rng.gen_range(0..n), rng.gen_range(0..n))).collect();
            let g = build(n, &edges);
            let lab: Vec<Option<Label>> = (0..n)
                .map(|_| match rng.gen_range(0..3) {
                    0 => Some(Label::Reliable),
                    1 => Some(Label::Unreliable),
                    _ => None,
                })
                .collect();
            let labels = labels_from(|i| lab[i], n);
            // dedupe the same way the graph does
            let ends: Vec<(usize, usize)> = g
                .edge_tuples()
                .into_iter()
                .map(|(s, t, _, _)| {
                    let si: usize = s[1..].parse().unwrap();
                    let ti: usize = t[1..].parse().unwrap();
                    (si, ti)
                })
                .collect();

            let labeled: Vec<(f64, f64)> = ends
                .iter()
                .filter_map(|&(s, t)| match (lab[s], lab[t]) {
                    (Some(a), Some(b)) => Some((a.index() as f64, b.index() as f64)),
                    _ => None,
                })
                .collect();
            if let Ok(r) = label_assortativity(&g, EdgeType::DomainDomain, &labels, AssortativityMode::LabeledInduced) {
                assert!((r - pearson_oracle(&labeled)).abs() < 1e-9);
            }

            let cat: Vec<(usize, usize)> = ends
                .iter()
                .map(|&(s, t)| (lab[s].map_or(2, |l| l.index()), lab[t].map_or(2, |l| l.index())))
                .collect();
            let full = label_assortativity(&g, EdgeType::DomainDomain, &labels, AssortativityMode::Full).unwrap();
            assert!((full - matrix_oracle(&cat, 3)).abs() < 1e-9);
        }
    }

    #[test]
    fn no_qualifying_edges() {
        let g = build(3, &[(0, 1)]);
        let labels = labels_from(|i| (i == 0).then_some(Label::Reliable), 3);
        assert!(matches!(
            label_assortativity(&g, EdgeType::DomainDomain, &labels, AssortativityMode::LabeledInduced),
            Err(Error::UndefinedStatistic(_))
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn invariant_under_label_flip(
                edges in proptest::collection::vec((0usize..10, 0usize..10), 1..30),
                lab in proptest::collection::vec(0u8..3, 10),
            ) {
                let g = build(10, &edges);
                let to = |x: u8| match x { 0 => Some(Label::Reliable), 1 => Some(Label::Unreliable), _ => None };
                let labels = labels_from(|i| to(lab[i]), 10);
                let flipped: BTreeMap<String, Label> = labels.iter().map(|(k, v)| (k.clone(), v.flipped())).collect();
                for mode in [AssortativityMode::Full, AssortativityMode::LabeledInduced] {
                    let a = label_assortativity(&g, EdgeType::DomainDomain, &labels, mode);
                    let b = label_assortativity(&g, EdgeType::DomainDomain, &flipped, mode);
                    match (a, b) {
                        (Ok(x), Ok(y)) => prop_assert!((x - y).abs() < 1e-12),
                        (Err(_), Err(_)) => {}
                        _ => prop_assert!(false, "definedness changed under flip"),
                    }
                }
            }
        }
    }
}
