use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{DiscoveryRanking, Provenance};
use crate::error::{Error, Result};
use crate::graph::Label;
use crate::ingest::{build_serp_candidates, SerpCandidate, SerpResult, VectorTable};

/// Confidence that a domain is unreliable, or `None` if it cannot be scored.
pub trait DomainScorer {
    fn score(&self, domain: &str) -> Option<f64>;
}

impl<F: Fn(&str) -> Option<f64>> DomainScorer for F {
    fn score(&self, domain: &str) -> Option<f64> {
        self(domain)
    }
}

/// Precomputed confidences, e.g. model predictions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TableScorer(pub BTreeMap<String, f64>);

impl DomainScorer for TableScorer {
    fn score(&self, domain: &str) -> Option<f64> {
        self.0.get(domain).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticConfig {
    pub epochs: usize,
    pub lr: f64,
    pub l2: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            epochs: 500,
            lr: 0.5,
            l2: 1e-3,
        }
    }
}

/// Attribute-only logistic regression on standardized features.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticScorer {
    table: VectorTable,
    mean: Vec<f64>,
    scale: Vec<f64>,
    weights: Vec<f64>,
    bias: f64,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl LogisticScorer {
    /// Fits on the labeled ids present in `table`; the table is kept for scoring.
    pub fn fit(table: VectorTable, labels: &BTreeMap<String, Label>, cfg: LogisticConfig) -> Result<Self> {
        let rows: Vec<(&[f64], f64)> = labels
            .iter()
            .filter_map(|(id, l)| table.get(id).map(|v| (v, if *l == Label::Unreliable { 1.0 } else { 0.0 })))
            .collect();
        if rows.is_empty() {
            return Err(Error::Data("no labeled domain has attributes".into()));
        }
        let d = table.dim();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for (v, _) in &rows {
            for k in 0..d {
                mean[k] += v[k] / n;
            }
        }
        let mut scale = vec![0.0; d];
        for (v, _) in &rows {
            for k in 0..d {
                scale[k] += (v[k] - mean[k]).powi(2) / n;
            }
        }
        for s in scale.iter_mut() {
            *s = if *s > 0.0 { s.sqrt() } else { 1.0 };
        }
        let z: Vec<Vec<f64>> = rows
            .iter()
            .map(|(v, _)| (0..d).map(|k| (v[k] - mean[k]) / scale[k]).collect())
            .collect();
        let mut w = vec![0.0; d];
        let mut b = 0.0;
        for _ in 0..cfg.epochs {
            let mut gw = vec![0.0; d];
            let mut gb = 0.0;
            for (x, (_, y)) in z.iter().zip(&rows) {
                let p = sigmoid(b + x.iter().zip(&w).map(|(a, c)| a * c).sum::<f64>());
                let e = (p - y) / n;
                gb += e;
                for k in 0..d {
                    gw[k] += e * x[k];
                }
            }
            for k in 0..d {
                w[k] -= cfg.lr * (gw[k] + cfg.l2 * w[k]);
            }
            b -= cfg.lr * gb;
        }
        Ok(Self {
            table,
            mean,
            scale,
            weights: w,
            bias: b,
        })
    }
}

impl DomainScorer for LogisticScorer {
    fn score(&self, domain: &str) -> Option<f64> {
        let v = self.table.get(domain)?;
        let z: f64 = (0..v.len()).map(|k| (v[k] - self.mean[k]) / self.scale[k] * self.weights[k]).sum();
        Some(sigmoid(self.bias + z))
    }
}

/// Which harvested dredge words feed discovery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DredgeVariant {
    /// Only phrases observed in the social stream.
    Lower,
    /// Every harvested phrase.
    Upper,
}

/// SERP candidates for one variant; `observed` holds lowercased phrases.
pub fn dredge_candidates(
    rows: &[&SerpResult],
    observed: &BTreeSet<String>,
    variant: DredgeVariant,
    labeled: &BTreeSet<String>,
    min_occurrences: usize,
) -> Vec<SerpCandidate> {
    let kept = rows
        .iter()
        .copied()
        .filter(|r| variant == DredgeVariant::Upper || observed.contains(&r.query));
    build_serp_candidates(kept, labeled, min_occurrences)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscoveryOutcome {
    pub ranking: DiscoveryRanking,
    /// Candidates the scorer could not score.
    pub dropped: Vec<String>,
}

/// Scores candidates, keeps those at or above `threshold`, ranks them.
pub fn dredge_discovery(
    candidates: &[SerpCandidate],
    scorer: &dyn DomainScorer,
    threshold: f64,
    labeled: &BTreeSet<String>,
) -> Result<DiscoveryOutcome> {
    let mut scored = Vec::new();
    let mut dropped = Vec::new();
    for c in candidates {
        match scorer.score(&c.domain) {
            Some(s) if s >= threshold => scored.push((c.domain.clone(), s)),
            Some(_) => {}
            None => {
                log::warn!("no score for dredge candidate `{}`; dropped", c.domain);
                dropped.push(c.domain.clone());
            }
        }
    }
    Ok(DiscoveryOutcome {
        ranking: DiscoveryRanking::new(scored, labeled, Provenance::DredgeSerp)?,
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cands(ids: &[&str]) -> Vec<SerpCandidate> {
        ids.iter()
            .map(|d| SerpCandidate {
                domain: d.to_string(),
                occurrences: 1,
                queries: BTreeSet::new(),
            })
            .collect()
    }

    #[test]
    fn empty_and_constant() {
        let none = BTreeSet::new();
        let out = dredge_discovery(&[], &|_: &str| Some(1.0), 0.0, &none).unwrap();
        assert!(out.ranking.is_empty());
        let out = dredge_discovery(&cands(&["c.com", "a.com", "b.com"]), &|_: &str| Some(1.0), 0.5, &none).unwrap();
        let ids: Vec<&str> = out.ranking.entries().iter().map(|e| e.domain.as_str()).collect();
        assert_eq!(ids, vec!["a.com", "b.com", "c.com"]);
    }

    #[test]
    fn fifteen_candidates_match_sort_oracle() {
        let ids: Vec<String> = (0..15).map(|i| format!("c{:02}.net", (i * 7) % 15)).collect();
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let score = |d: &str| {
            let n: usize = d[1..3].parse().unwrap();
            if n == 4 {
                None
            } else {
                Some(((n * 37) % 10) as f64 / 10.0)
            }
        };
        let out = dredge_discovery(&cands(&refs), &score, 0.3, &BTreeSet::new()).unwrap();
        assert_eq!(out.dropped, vec!["c04.net".to_string()]);
        let mut oracle: Vec<(String, f64)> = ids
            .iter()
            .filter_map(|d| score(d).map(|s| (d.clone(), s)))
            .filter(|p| p.1 >= 0.3)
            .collect();
        oracle.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        let got: Vec<(String, f64)> = out.ranking.entries().iter().map(|e| (e.domain.clone(), e.confidence)).collect();
        assert_eq!(got, oracle);
    }

    #[test]
    fn lower_variant_restricts_phrases() {
        let rows = vec![
            SerpResult::new("alpha", "t.com", 1, "x.com").unwrap(),
            SerpResult::new("beta", "t.com", 2, "y.com").unwrap(),
            SerpResult::new("beta", "t.com", 3, "x.com").unwrap(),
        ];
        let refs: Vec<&SerpResult> = rows.iter().collect();
        let observed: BTreeSet<String> = ["alpha".to_string()].into();
        let low = dredge_candidates(&refs, &observed, DredgeVariant::Lower, &BTreeSet::new(), 1);
        let up = dredge_candidates(&refs, &observed, DredgeVariant::Upper, &BTreeSet::new(), 1);
        assert_eq!(low.iter().map(|c| c.domain.as_str()).collect::<Vec<_>>(), vec!["x.com"]);
        assert_eq!(up.len(), 2);
    }

    #[test]
    fn logistic_scorer_separates() {
        let mut t = VectorTable::new(2);
        let mut labels = BTreeMap::new();
        for i in 0..40 {
            let bad = i % 2 == 1;
            let x = i as f64 / 40.0;
            t.insert(format!("d{i}"), vec![if bad { 1.0 + x } else { -1.0 - x }, x]).unwrap();
            labels.insert(format!("d{i}"), if bad { Label::Unreliable } else { Label::Reliable });
        }
        t.insert("new", vec![2.0, 0.0]).unwrap();
        let s = LogisticScorer::fit(t, &labels, LogisticConfig::default()).unwrap();
        assert!(s.score("new").unwrap() > 0.9);
        assert!(s.score("d0").unwrap() < 0.1);
        assert_eq!(s.score("missing"), None);
    }
}
