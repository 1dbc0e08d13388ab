use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{validate_config, RunConfig};
use super::stages::{file_digest, read_log, run_stage, ser_err, write_text, Stage, StageLog, METRICS_FILE};
use crate::error::{Error, Result};
use crate::eval::{MetricRecord, MetricReport};

pub const REPORT_FILE: &str = "run_report.json";
pub const BATCH_REPORT_FILE: &str = "batch_report.json";
pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Environment {
    pub package: String,
    pub version: String,
    pub os: String,
    pub arch: String,
    pub threads: usize,
    pub debug_build: bool,
}

impl Environment {
    pub fn current() -> Self {
        Self {
            package: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            threads: rayon::current_num_threads(),
            debug_build: cfg!(debug_assertions),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub format_version: u32,
    pub variant: String,
    pub seed: u64,
    /// Set when the evaluation set differs from the other variants'.
    pub non_comparable: bool,
    pub config: RunConfig,
    pub stages: Vec<StageLog>,
    /// Relative path to SHA-256 of every file in the run directory.
    pub artifacts: BTreeMap<String, String>,
    pub metrics_digest: Option<String>,
    pub metrics: Option<MetricReport>,
    pub environment: Environment,
}

fn collect_files(root: &Path, dir: &Path, out: &mut BTreeMap<String, String>) -> Result<()> {
    let mut entries: Vec<_> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .collect();
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect_files(root, &p, out)?;
        } else {
            let rel = super::stages::relative(root, &p);
            let key = rel
                .components()
                .map(|c| c.as_os_str().to_string_lossy().into_owned())
                .collect::<Vec<_>>()
                .join("/");
            if key != REPORT_FILE {
                out.insert(key, file_digest(&p)?);
            }
        }
    }
    Ok(())
}

/// Digests of every file under `dir` except the report itself.
pub fn artifact_manifest(dir: &Path) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    collect_files(dir, dir, &mut out)?;
    Ok(out)
}

/// Assembles the run report from whatever stages have run and writes it.
pub fn write_report(cfg: &RunConfig) -> Result<RunReport> {
    let dir = &cfg.output_dir;
    let mut stages = Vec::new();
    for st in Stage::ALL {
        if let Some(log) = read_log(dir, st)? {
            stages.push(log);
        }
    }
    let metrics_path = dir.join(METRICS_FILE);
    let (metrics_digest, metrics) = if metrics_path.exists() {
        let text = fs::read_to_string(&metrics_path).map_err(|e| Error::io(&metrics_path, e))?;
        let m: MetricReport = serde_json::from_str(&text).map_err(ser_err)?;
        (Some(file_digest(&metrics_path)?), Some(m))
    } else {
        (None, None)
    };
    let report = RunReport {
        format_version: REPORT_VERSION,
        variant: cfg.variant.as_str().into(),
        seed: cfg.seed,
        non_comparable: cfg.variant.non_comparable(),
        config: cfg.clone(),
        stages,
        artifacts: artifact_manifest(dir)?,
        metrics_digest,
        metrics,
        environment: Environment::current(),
    };
    let text = serde_json::to_string_pretty(&report).map_err(ser_err)?;
    write_text(&dir.join(REPORT_FILE), &(text + "\n"))?;
    Ok(report)
}

/// Validates, runs every stage in order for `cfg.seed`, and writes the report.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunReport> {
    validate_config(cfg).map_err(|errs| Error::Config(errs.join("; ")))?;
    for st in Stage::ALL {
        run_stage(cfg, st)?;
    }
    write_report(cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRun {
    pub seed: u64,
    pub dir: String,
    pub metrics_digest: Option<String>,
    pub report_digest: String,
}

/// Per-metric mean with population standard deviation over the seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub format_version: u32,
    pub variant: String,
    pub non_comparable: bool,
    pub seeds: Vec<u64>,
    pub runs: Vec<BatchRun>,
    pub metrics: MetricReport,
    pub environment: Environment,
}

pub fn seed_dir_name(seed: u64) -> String {
    format!("seed-{seed}")
}

/// Mean and population standard deviation per metric name. Metrics that are
/// null in some runs aggregate over the defined runs and say so.
pub fn aggregate(reports: &[MetricReport]) -> MetricReport {
    let mut order: Vec<String> = Vec::new();
    let mut values: BTreeMap<String, Vec<Option<f64>>> = BTreeMap::new();
    for r in reports {
        for rec in &r.records {
            if !values.contains_key(&rec.name) {
                order.push(rec.name.clone());
            }
            values.entry(rec.name.clone()).or_default().push(rec.value);
        }
    }
    let mut out = MetricReport::default();
    for name in order {
        let all = &values[&name];
        let defined: Vec<f64> = all.iter().flatten().copied().collect();
        let mut rec = if defined.is_empty() {
            MetricRecord::new(name, None)
        } else {
            let n = defined.len() as f64;
            let mean = defined.iter().sum::<f64>() / n;
            let var = defined.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            MetricRecord {
                std: Some(var.sqrt()),
                ..MetricRecord::new(name, Some(mean))
            }
        };
        rec = rec.with_note(format!("{} of {} runs defined", defined.len(), reports.len()));
        out.push(rec);
    }
    out
}

/// One independent full run per seed in `seed-<n>/`, then the aggregate.
pub fn run_batch(cfg: &RunConfig) -> Result<BatchReport> {
    validate_config(cfg).map_err(|errs| Error::Config(errs.join("; ")))?;
    let seeds = cfg.run_seeds();
    let mut runs = Vec::new();
    let mut metrics = Vec::new();
    for &seed in &seeds {
        let name = seed_dir_name(seed);
        let sub = cfg.for_seed(seed, cfg.output_dir.join(&name));
        let report = run_pipeline(&sub)?;
        runs.push(BatchRun {
            seed,
            dir: name,
            metrics_digest: report.metrics_digest.clone(),
            report_digest: file_digest(&sub.output_dir.join(REPORT_FILE))?,
        });
        metrics.push(report.metrics.unwrap_or_default());
    }
    let report = BatchReport {
        format_version: REPORT_VERSION,
        variant: cfg.variant.as_str().into(),
        non_comparable: cfg.variant.non_comparable(),
        seeds,
        runs,
        metrics: aggregate(&metrics),
        environment: Environment::current(),
    };
    let text = serde_json::to_string_pretty(&report).map_err(ser_err)?;
    write_text(&cfg.output_dir.join(BATCH_REPORT_FILE), &(text + "\n"))?;
    Ok(report)
}
