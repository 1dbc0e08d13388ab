use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HIGHLIGHT_THRESHOLD: f64 = 0.7;
pub const DEFAULT_GRID: [f64; 11] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

/// `2pr / (p + r)`, zero when both are zero.
pub fn pf1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Precision is `None` for an empty discovered set, recall `None` for an
/// empty evaluation list. `pf1_limit` marks the zero-by-convention case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialMetrics {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub pf1: f64,
    pub pf1_limit: bool,
    pub discovered: usize,
    pub hits: usize,
}

pub fn partial_metrics(
    discovered: &BTreeSet<String>,
    seeds: &BTreeSet<String>,
    eval: &BTreeSet<String>,
) -> Result<PartialMetrics> {
    if let Some(s) = discovered.intersection(seeds).next() {
        return Err(Error::Input(format!("discovered set contains seed domain `{s}`")));
    }
    let hits = discovered.intersection(eval).count();
    let precision = (!discovered.is_empty()).then(|| hits as f64 / discovered.len() as f64);
    let recall = (!eval.is_empty()).then(|| hits as f64 / eval.len() as f64);
    let (value, limit) = match (precision, recall) {
        (Some(p), Some(r)) => (pf1(p, r), p + r == 0.0),
        _ => (0.0, true),
    };
    Ok(PartialMetrics {
        precision,
        recall,
        pf1: value,
        pf1_limit: limit,
        discovered: discovered.len(),
        hits,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub threshold: f64,
    #[serde(flatten)]
    pub metrics: PartialMetrics,
}

/// Partial metrics of `{confidence >= t} \ seeds` for every `t` in `grid`.
pub fn threshold_sweep(
    predictions: &[(String, f64)],
    seeds: &BTreeSet<String>,
    eval: &BTreeSet<String>,
    grid: &[f64],
) -> Result<Vec<SweepPoint>> {
    if grid.iter().any(|t| !(0.0..=1.0).contains(t)) || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Input("threshold grid must be strictly ascending within [0, 1]".into()));
    }
    grid.iter()
        .map(|&t| {
            let found: BTreeSet<String> = predictions
                .iter()
                .filter(|(d, c)| *c >= t && !seeds.contains(d))
                .map(|(d, _)| d.clone())
                .collect();
            Ok(SweepPoint {
                threshold: t,
                metrics: partial_metrics(&found, seeds, eval)?,
            })
        })
        .collect()
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "null".into())
}

/// Plot table: `threshold,discovered,hits,precision,recall,pf1`.
pub fn write_sweep_csv(path: &Path, curve: &[SweepPoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(["threshold", "discovered", "hits", "precision", "recall", "pf1"])
        .map_err(|e| Error::csv(path, e))?;
    for p in curve {
        let m = &p.metrics;
        w.write_record([
            p.threshold.to_string(),
            m.discovered.to_string(),
            m.hits.to_string(),
            cell(m.precision),
            cell(m.recall),
            m.pf1.to_string(),
        ])
        .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
