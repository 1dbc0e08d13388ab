//! Classification metrics, ranked discovery metrics and the confidence sweep.

mod discovery;
mod partial;
mod report;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Label;

pub use discovery::{
    dredge_candidates, dredge_discovery, DiscoveryOutcome, DomainScorer, DredgeVariant, LogisticConfig, LogisticScorer,
    TableScorer,
};
pub use partial::{partial_metrics, pf1, threshold_sweep, write_sweep_csv, PartialMetrics, SweepPoint, DEFAULT_GRID, HIGHLIGHT_THRESHOLD};
pub use report::{load_judgments, Judgment, JudgmentSet, MetricRecord, MetricReport, Verdict};

/// Binary accuracy and F1 with unreliable as the positive class.
pub fn accuracy_f1(predicted: &[Label], truth: &[Label]) -> Result<(f64, f64)> {
    if predicted.is_empty() {
        return Err(Error::Metric("no predictions to score".into()));
    }
    if predicted.len() != truth.len() {
        return Err(Error::Metric(format!(
            "{} predictions for {} labels",
            predicted.len(),
            truth.len()
        )));
    }
    let (mut tp, mut fp, mut fn_, mut correct) = (0usize, 0usize, 0usize, 0usize);
    for (&p, &t) in predicted.iter().zip(truth) {
        correct += usize::from(p == t);
        match (p, t) {
            (Label::Unreliable, Label::Unreliable) => tp += 1,
            (Label::Unreliable, Label::Reliable) => fp += 1,
            (Label::Reliable, Label::Unreliable) => fn_ += 1,
            _ => {}
        }
    }
    let acc = correct as f64 / predicted.len() as f64;
    let denom = 2 * tp + fp + fn_;
    let f1 = if denom == 0 { 0.0 } else { 2.0 * tp as f64 / denom as f64 };
    Ok((acc, f1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Gnn,
    DredgeSerp,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Gnn => "gnn",
            Provenance::DredgeSerp => "dredge-serp",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedDomain {
    pub domain: String,
    pub confidence: f64,
}

/// Unlabeled domains by confidence descending, ties by domain ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryRanking {
    pub provenance: Provenance,
    entries: Vec<RankedDomain>,
}

impl DiscoveryRanking {
    /// Labeled ids are removed; duplicates and out-of-range confidences are errors.
    pub fn new(
        entries: impl IntoIterator<Item = (String, f64)>,
        labeled: &BTreeSet<String>,
        provenance: Provenance,
    ) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for (domain, confidence) in entries {
            if !(0.0..=1.0).contains(&confidence) {
                return Err(Error::Input(format!("confidence {confidence} for `{domain}` outside [0, 1]")));
            }
            if !seen.insert(domain.clone()) {
                return Err(Error::Data(format!("`{domain}` ranked twice")));
            }
            if !labeled.contains(&domain) {
                out.push(RankedDomain { domain, confidence });
            }
        }
        out.sort_by(|a, b| b.confidence.total_cmp(&a.confidence).then_with(|| a.domain.cmp(&b.domain)));
        Ok(Self {
            provenance,
            entries: out,
        })
    }

    pub fn entries(&self) -> &[RankedDomain] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn top(&self, k: usize) -> &[RankedDomain] {
        &self.entries[..k.min(self.entries.len())]
    }

    /// Domains with confidence at or above `threshold`.
    pub fn at_least(&self, threshold: f64) -> BTreeSet<String> {
        self.entries
            .iter()
            .take_while(|e| e.confidence >= threshold)
            .map(|e| e.domain.clone())
            .collect()
    }
}

/// Fraction of the top `k` judged unreliable. Every one of the top `k`
/// must carry a judgment.
pub fn precision_at_k(ranking: &DiscoveryRanking, judgments: &BTreeMap<String, Verdict>, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Input("k must be positive".into()));
    }
    let covered = ranking
        .entries()
        .iter()
        .take(k)
        .take_while(|e| judgments.contains_key(&e.domain))
        .count();
    if covered < k {
        return Err(Error::Coverage { k, covered });
    }
    let hits = ranking.top(k).iter().filter(|e| judgments[&e.domain] == Verdict::Unreliable).count();
    Ok(hits as f64 / k as f64)
}
