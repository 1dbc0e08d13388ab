//! End-to-end runs driven by one declarative config.
//!
//! A run directory holds:
//!
//! | path                          | written by    |
//! |-------------------------------|---------------|
//! | `config.toml`                 | every stage   |
//! | `graph/`                      | `build-graph` |
//! | `embeddings/positional.csv`   | `embed`       |
//! | `model/checkpoint.json`       | `train`       |
//! | `predictions.csv`             | `predict`     |
//! | `discovery/*_ranking.csv`     | `discover`    |
//! | `evaluation/metrics.json`     | `evaluate`    |
//! | `evaluation/sweep.csv`        | `evaluate`    |
//! | `logs/<stage>.json`           | every stage   |
//! | `run_report.json`             | `report`, `run` |
//!
//! Each stage reads only its predecessors' artifacts, so stages can be rerun
//! one at a time.

mod build;
mod config;
mod report;
mod stages;

pub use build::{build_variant_graph, observed_dredge_words, BuildSummary};
pub use config::{
    apply_override, validate_config, DiscoveryConfig, FeatureConfig, FeatureSource, GraphConfig, Inputs, RunConfig,
    ScorerKind, TrainSection, Variant, OUTPUT_ROOT_ENV,
};
pub use report::{
    aggregate, artifact_manifest, run_batch, run_pipeline, seed_dir_name, write_report, BatchReport, BatchRun,
    Environment, RunReport, BATCH_REPORT_FILE, REPORT_FILE,
};
pub use stages::{
    file_digest, model_input, prepare_run_dir, read_log, read_predictions, read_ranking, run_stage, Stage, StageLog,
    CHECKPOINT_FILE, CONFIG_FILE, DREDGE_RANKING_FILE, EMBEDDINGS_FILE, GNN_RANKING_FILE, GRAPH_DIR, LOG_DIR,
    METRICS_FILE, PREDICTIONS_FILE, SWEEP_FILE,
};
