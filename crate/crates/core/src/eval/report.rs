use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::normalize_domain;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Unreliable,
    Reliable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Judgment {
    pub domain: String,
    pub verdict: Verdict,
    pub annotator: String,
    pub note: String,
}

/// Reads `domain,verdict,annotator_id,note`.
pub fn load_judgments(path: &Path) -> Result<Vec<Judgment>> {
    let mut r = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let header = r.headers().map_err(|e| Error::csv(path, e))?.clone();
    let want = ["domain", "verdict", "annotator_id", "note"];
    if header.len() < 3 || header.iter().zip(want).any(|(h, w)| h != w) {
        return Err(Error::Schema(format!("{}: expected header {}", path.display(), want.join(","))));
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let line = i + 2;
        let verdict = match rec.get(1).map(|v| v.trim().to_ascii_lowercase()).as_deref() {
            Some("unreliable") => Verdict::Unreliable,
            Some("reliable") => Verdict::Reliable,
            other => {
                return Err(Error::Data(format!(
                    "{}:{line}: verdict {:?} is neither reliable nor unreliable",
                    path.display(),
                    other.unwrap_or("")
                )))
            }
        };
        out.push(Judgment {
            domain: normalize_domain(rec.get(0).unwrap_or("")),
            verdict,
            annotator: rec.get(2).unwrap_or("").to_string(),
            note: rec.get(3).unwrap_or("").to_string(),
        });
    }
    Ok(out)
}

/// One verdict per domain. Annotators may repeat a domain only with the
/// same verdict.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct JudgmentSet(pub BTreeMap<String, Verdict>);

impl JudgmentSet {
    pub fn from_judgments(judgments: &[Judgment]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for j in judgments {
            if let Some(prev) = map.insert(j.domain.clone(), j.verdict) {
                if prev != j.verdict {
                    return Err(Error::Data(format!("conflicting verdicts for `{}`", j.domain)));
                }
            }
        }
        Ok(Self(map))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub name: String,
    /// `None` is written as null: the metric is absent or undefined.
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub inputs: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl MetricRecord {
    pub fn new(name: impl Into<String>, value: Option<f64>) -> Self {
        Self {
            name: name.into(),
            value,
            std: None,
            inputs: BTreeMap::new(),
            note: None,
        }
    }

    pub fn with_input(mut self, name: &str, digest: &str) -> Self {
        self.inputs.insert(name.to_string(), digest.to_string());
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub records: Vec<MetricRecord>,
}

impl MetricReport {
    pub fn push(&mut self, r: MetricRecord) {
        self.records.push(r);
    }

    pub fn get(&self, name: &str) -> Option<&MetricRecord> {
        self.records.iter().find(|r| r.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))
    }
}
