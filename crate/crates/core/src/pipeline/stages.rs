use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::build::{build_variant_graph, observed_dredge_words, optional_ids, rated_ids, retained_serp};
use super::config::{FeatureSource, RunConfig, ScorerKind};
use crate::curriculum::{babysteps_train, build_quintile_batches, train_scores};
use crate::embed::{node2vec, WalkGraph};
use crate::error::{Error, Result};
use crate::eval::{
    accuracy_f1, dredge_candidates, dredge_discovery, load_judgments, partial_metrics, precision_at_k,
    threshold_sweep, write_sweep_csv, DiscoveryRanking, DomainScorer, JudgmentSet, LogisticScorer, MetricRecord,
    MetricReport, PartialMetrics, Provenance, TableScorer,
};
use crate::gnn::{
    load_checkpoint, predict, save_checkpoint, train, Architecture, ModelInput, Prediction, SageModel, Supervision,
    NUM_CLASSES,
};
use crate::graph::snapshot::{read_snapshot, write_snapshot, SnapshotManifest, MANIFEST_FILE};
use crate::graph::{Binarizer, EdgeType, HeteroGraph, Label, NodeType, Split, ATTRIBUTE_DIM};
use crate::ingest::{load_vectors, write_vectors, VectorTable};
use crate::seed::{derive, digest};

pub const CONFIG_FILE: &str = "config.toml";
pub const GRAPH_DIR: &str = "graph";
pub const EMBEDDINGS_FILE: &str = "embeddings/positional.csv";
pub const CHECKPOINT_FILE: &str = "model/checkpoint.json";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const GNN_RANKING_FILE: &str = "discovery/gnn_ranking.csv";
pub const DREDGE_RANKING_FILE: &str = "discovery/dredge_ranking.csv";
pub const METRICS_FILE: &str = "evaluation/metrics.json";
pub const SWEEP_FILE: &str = "evaluation/sweep.csv";
pub const LOG_DIR: &str = "logs";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    BuildGraph,
    Embed,
    Train,
    Predict,
    Discover,
    Evaluate,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::BuildGraph,
        Stage::Embed,
        Stage::Train,
        Stage::Predict,
        Stage::Discover,
        Stage::Evaluate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::BuildGraph => "build-graph",
            Stage::Embed => "embed",
            Stage::Train => "train",
            Stage::Predict => "predict",
            Stage::Discover => "discover",
            Stage::Evaluate => "evaluate",
        }
    }

    pub fn log_file(self) -> String {
        format!("{LOG_DIR}/{}.json", self.as_str())
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage `{s}`")))
    }
}

/// What one stage wrote and a few counts describing its work.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageLog {
    pub stage: Stage,
    pub artifacts: Vec<String>,
    pub summary: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl StageLog {
    fn new(stage: Stage) -> Self {
        Self {
            stage,
            artifacts: Vec::new(),
            summary: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    fn set(&mut self, key: &str, v: impl Serialize) {
        self.summary
            .insert(key.to_string(), serde_json::to_value(v).unwrap_or(Value::Null));
    }
}

pub(crate) fn ser_err(e: impl fmt::Display) -> Error {
    Error::Serialization(e.to_string())
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(p) = path.parent() {
        fs::create_dir_all(p).map_err(|e| Error::io(p, e))?;
    }
    Ok(())
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    ensure_parent(path)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn file_digest(path: &Path) -> Result<String> {
    Ok(digest(&fs::read(path).map_err(|e| Error::io(path, e))?))
}

fn missing_artifact(path: &Path, stage: Stage) -> Error {
    Error::Config(format!("{} is missing; run the `{stage}` stage first", path.display()))
}

fn require_artifact(path: &Path, stage: Stage) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(missing_artifact(path, stage))
    }
}

/// Creates the run directory and writes the resolved config echo.
pub fn prepare_run_dir(cfg: &RunConfig) -> Result<()> {
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_text(&dir.join(CONFIG_FILE), &cfg.to_toml()?)
}

fn binarizer(cfg: &RunConfig) -> Binarizer {
    Binarizer {
        threshold: cfg.graph.threshold,
        boundary: cfg.graph.boundary,
    }
}

fn load_graph(dir: &Path) -> Result<HeteroGraph> {
    let g = dir.join(GRAPH_DIR);
    require_artifact(&g.join(MANIFEST_FILE), Stage::BuildGraph)?;
    Ok(read_snapshot(&g)?.0)
}

fn build_graph_stage(cfg: &RunConfig) -> Result<StageLog> {
    let mut log = StageLog::new(Stage::BuildGraph);
    let (graph, summary) = build_variant_graph(cfg)?;
    let mut manifest = SnapshotManifest::describe(&graph, binarizer(cfg), Some(derive(cfg.seed, "split")));
    manifest.notes.push(format!("variant {}", cfg.variant));
    if cfg.variant.non_comparable() {
        manifest
            .notes
            .push("labeled domains restricted to those mentioned in the cleaned social stream".into());
    }
    let dir = cfg.output_dir.join(GRAPH_DIR);
    write_snapshot(&graph, &manifest, &dir)?;
    let mut files: Vec<String> = fs::read_dir(&dir)
        .map_err(|e| Error::io(&dir, e))?
        .filter_map(|e| e.ok())
        .map(|e| format!("{GRAPH_DIR}/{}", e.file_name().to_string_lossy()))
        .collect();
    files.sort();
    log.artifacts = files;
    log.set("nodes", &manifest.node_counts);
    log.set("edges", &manifest.edge_counts);
    log.set("labeled_domains", manifest.labeled_domains);
    log.set("self_loops", manifest.self_loops);
    log.set("rated_without_attributes", summary.labels_without_attributes);
    log.set("backlinks_kept", summary.backlinks_kept);
    log.set("backlinks_dropped", summary.backlinks_dropped);
    if cfg.variant.uses_social() {
        log.set("social_rows_kept", summary.social_rows_kept);
    }
    if cfg.variant.uses_dredge() {
        log.set("dredge_words", summary.dredge_words);
    }
    Ok(log)
}

fn needs_positional(cfg: &RunConfig, graph: &HeteroGraph) -> bool {
    graph
        .node_types()
        .into_iter()
        .any(|k| cfg.feature_source(k) == FeatureSource::Positional)
}

fn embed_stage(cfg: &RunConfig) -> Result<StageLog> {
    let mut log = StageLog::new(Stage::Embed);
    let graph = load_graph(&cfg.output_dir)?;
    let path = cfg.output_dir.join(EMBEDDINGS_FILE);
    if !needs_positional(cfg, &graph) {
        if path.exists() {
            fs::remove_file(&path).map_err(|e| Error::io(&path, e))?;
        }
        log.notes.push("no node type uses positional features; nothing to embed".into());
        return Ok(log);
    }
    let walk_graph = WalkGraph::from_hetero(&graph, &EdgeType::ALL, &NodeType::ALL);
    let table = node2vec(&walk_graph, &cfg.embed, cfg.seed)?;
    ensure_parent(&path)?;
    write_vectors(&table.to_vector_table(), &path)?;
    log.artifacts.push(EMBEDDINGS_FILE.into());
    log.set("nodes", table.len());
    log.set("dim", table.dim());
    log.set("walks", walk_graph.len() * cfg.embed.walk.walks_per_node);
    Ok(log)
}

fn attribute_table(graph: &HeteroGraph) -> Result<VectorTable> {
    let mut t = VectorTable::new(ATTRIBUTE_DIM);
    for r in graph.domain_records() {
        t.insert(r.id.clone(), r.attributes().to_vec())?;
    }
    Ok(t)
}

fn feature_tables(cfg: &RunConfig, graph: &HeteroGraph) -> Result<BTreeMap<NodeType, VectorTable>> {
    let mut positional: Option<VectorTable> = None;
    let mut out = BTreeMap::new();
    for kind in graph.node_types() {
        let table = match cfg.feature_source(kind) {
            FeatureSource::Attributes => attribute_table(graph)?,
            FeatureSource::Positional => {
                if positional.is_none() {
                    let p = cfg.output_dir.join(EMBEDDINGS_FILE);
                    require_artifact(&p, Stage::Embed)?;
                    positional = Some(load_vectors(&p)?);
                }
                positional.clone().expect("loaded above")
            }
            FeatureSource::Text => {
                let p = match kind {
                    NodeType::User => cfg.inputs.user_vectors.as_deref(),
                    NodeType::Dredge => cfg.inputs.dredge_vectors.as_deref(),
                    NodeType::Domain => None,
                }
                .ok_or_else(|| Error::Config(format!("no text vectors configured for {} nodes", kind.as_str())))?;
                load_vectors(p)?
            }
        };
        out.insert(kind, table);
    }
    Ok(out)
}

/// The model input for the configured variant, rebuilt from run artifacts.
pub fn model_input(cfg: &RunConfig, graph: &HeteroGraph) -> Result<ModelInput> {
    let tables = feature_tables(cfg, graph)?;
    if cfg.variant.is_homogeneous() {
        ModelInput::homogeneous(graph, &tables, cfg.graph.reverse_edges, cfg.graph.weighted_mean)
    } else {
        ModelInput::heterogeneous(graph, &tables, cfg.graph.reverse_edges, cfg.graph.weighted_mean)
    }
}

fn architecture(cfg: &RunConfig, graph: &HeteroGraph) -> Architecture {
    let mut projections = BTreeMap::new();
    if !cfg.variant.is_homogeneous() {
        for kind in graph.node_types() {
            if cfg.feature_source(kind) == FeatureSource::Text {
                projections.insert(kind.as_str().to_string(), cfg.train.projection_dim);
            }
        }
    }
    Architecture {
        hidden: cfg.train.hidden,
        classes: NUM_CLASSES,
        projections,
    }
}

fn train_stage(cfg: &RunConfig) -> Result<StageLog> {
    let mut log = StageLog::new(Stage::Train);
    let graph = load_graph(&cfg.output_dir)?;
    let input = model_input(cfg, &graph)?;
    let supervision = Supervision::from_graph(&graph, &input);
    let model = SageModel::init(input.schema(), architecture(cfg, &graph), cfg.seed)?;
    let tc = cfg.train.train_config(cfg.seed);
    log.set("parameters", model.parameter_count());
    let state = if cfg.curriculum {
        let scores: BTreeMap<String, f64> = graph
            .domain_records()
            .filter_map(|r| r.reliability_score().map(|s| (r.id.clone(), s)))
            .collect();
        let mut schedule = build_quintile_batches(&train_scores(&input, &supervision, &scores)?)?;
        schedule.stage_patience = cfg.schedule.stage_patience;
        babysteps_train(model, &schedule, &input, &supervision, &tc, &cfg.schedule)?
    } else {
        train(model, &input, &supervision, &tc)?
    };
    let path = cfg.output_dir.join(CHECKPOINT_FILE);
    ensure_parent(&path)?;
    save_checkpoint(&path, &state)?;
    log.artifacts.push(CHECKPOINT_FILE.into());
    log.set("epochs", state.history.len());
    log.set("best_epoch", state.best_epoch);
    log.set("best_val_loss", state.best_val_loss);
    log.set("curriculum", cfg.curriculum);
    if !state.stages.is_empty() {
        log.set("stages", &state.stages);
    }
    for t in &input.types {
        log.set(&format!("rows.{}", t.name), t.ids.len());
    }
    Ok(log)
}

fn write_predictions(path: &Path, preds: &[Prediction]) -> Result<()> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(["domain", "p_reliable", "p_unreliable"])
        .map_err(|e| Error::csv(path, e))?;
    for p in preds {
        w.write_record([p.domain.clone(), p.p_reliable.to_string(), p.p_unreliable.to_string()])
            .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_predictions(path: &Path) -> Result<Vec<Prediction>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut out = Vec::new();
    for rec in r.deserialize() {
        out.push(rec.map_err(|e| Error::csv(path, e))?);
    }
    Ok(out)
}

fn predict_stage(cfg: &RunConfig) -> Result<StageLog> {
    let mut log = StageLog::new(Stage::Predict);
    let graph = load_graph(&cfg.output_dir)?;
    let ckpt = cfg.output_dir.join(CHECKPOINT_FILE);
    require_artifact(&ckpt, Stage::Train)?;
    let state = load_checkpoint(&ckpt)?;
    let input = model_input(cfg, &graph)?;
    if state.model.schema != input.schema() {
        return Err(Error::ModelSchema("checkpoint was trained on a different input schema".into()));
    }
    let preds = predict(&state.model, &input)?;
    write_predictions(&cfg.output_dir.join(PREDICTIONS_FILE), &preds)?;
    log.artifacts.push(PREDICTIONS_FILE.into());
    log.set("domains", preds.len());
    log.set("predicted_unreliable", preds.iter().filter(|p| p.p_unreliable > p.p_reliable).count());
    Ok(log)
}

fn write_ranking(path: &Path, ranking: &DiscoveryRanking) -> Result<()> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(["rank", "domain", "confidence"])
        .map_err(|e| Error::csv(path, e))?;
    for (i, e) in ranking.entries().iter().enumerate() {
        w.write_record([(i + 1).to_string(), e.domain.clone(), e.confidence.to_string()])
            .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_ranking(path: &Path, provenance: Provenance) -> Result<DiscoveryRanking> {
    #[derive(Deserialize)]
    struct Row {
        domain: String,
        confidence: f64,
    }
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        let row: Row = rec.map_err(|e| Error::csv(path, e))?;
        rows.push((row.domain, row.confidence));
    }
    DiscoveryRanking::new(rows, &BTreeSet::new(), provenance)
}

fn labeled_ids(cfg: &RunConfig, graph: &HeteroGraph) -> Result<BTreeSet<String>> {
    let mut ids = rated_ids(cfg)?;
    ids.extend(graph.labels().into_keys());
    Ok(ids)
}

fn train_labels(graph: &HeteroGraph) -> BTreeMap<String, Label> {
    graph
        .domain_records()
        .filter(|r| r.split == Some(Split::Train))
        .filter_map(|r| r.label().map(|l| (r.id.clone(), l)))
        .collect()
}

fn discover_stage(cfg: &RunConfig) -> Result<StageLog> {
    let mut log = StageLog::new(Stage::Discover);
    let dir = &cfg.output_dir;
    let graph = load_graph(dir)?;
    let pred_path = dir.join(PREDICTIONS_FILE);
    require_artifact(&pred_path, Stage::Predict)?;
    let preds = read_predictions(&pred_path)?;
    let labeled = labeled_ids(cfg, &graph)?;
    let ranking = DiscoveryRanking::new(
        preds.iter().map(|p| (p.domain.clone(), p.confidence())),
        &labeled,
        Provenance::Gnn,
    )?;
    write_ranking(&dir.join(GNN_RANKING_FILE), &ranking)?;
    log.artifacts.push(GNN_RANKING_FILE.into());
    log.set("gnn.ranked", ranking.len());
    log.set("gnn.at_threshold", ranking.at_least(cfg.discovery.threshold).len());

    let dredge_path = dir.join(DREDGE_RANKING_FILE);
    let Some(variant) = cfg.discovery.dredge else {
        if dredge_path.exists() {
            fs::remove_file(&dredge_path).map_err(|e| Error::io(&dredge_path, e))?;
        }
        return Ok(log);
    };
    let (rows, _) = retained_serp(cfg)?;
    let observed = observed_dredge_words(cfg)?;
    let refs: Vec<_> = rows.iter().collect();
    let candidates = dredge_candidates(&refs, &observed, variant, &labeled, cfg.discovery.min_occurrences);
    let scorer: Box<dyn DomainScorer> = match cfg.discovery.scorer {
        ScorerKind::Attributes => {
            let attrs = crate::ingest::load_attributes(
                cfg.inputs
                    .attributes
                    .as_deref()
                    .ok_or_else(|| Error::Config("inputs.attributes is required".into()))?,
            )?;
            let mut table = VectorTable::new(ATTRIBUTE_DIM);
            for d in attrs.domains() {
                table.insert(d, attrs.get(d).expect("listed").to_vec())?;
            }
            Box::new(LogisticScorer::fit(table, &train_labels(&graph), cfg.discovery.logistic)?)
        }
        ScorerKind::Gnn => Box::new(TableScorer(
            preds.iter().map(|p| (p.domain.clone(), p.confidence())).collect(),
        )),
    };
    let outcome = dredge_discovery(&candidates, scorer.as_ref(), cfg.discovery.threshold, &labeled)?;
    write_ranking(&dredge_path, &outcome.ranking)?;
    log.artifacts.push(DREDGE_RANKING_FILE.into());
    log.set("dredge.variant", variant);
    log.set("dredge.observed_words", observed.len());
    log.set("dredge.candidates", candidates.len());
    log.set("dredge.ranked", outcome.ranking.len());
    log.set("dredge.dropped", &outcome.dropped);
    Ok(log)
}

fn split_scores(graph: &HeteroGraph, preds: &BTreeMap<&str, &Prediction>, split: Split) -> Result<Option<(f64, f64, usize)>> {
    let mut predicted = Vec::new();
    let mut truth = Vec::new();
    for r in graph.domain_records() {
        if r.split != Some(split) {
            continue;
        }
        let (Some(label), Some(p)) = (r.label(), preds.get(r.id.as_str())) else {
            continue;
        };
        predicted.push(if p.p_unreliable > p.p_reliable { Label::Unreliable } else { Label::Reliable });
        truth.push(label);
    }
    if predicted.is_empty() {
        return Ok(None);
    }
    let (acc, f1) = accuracy_f1(&predicted, &truth)?;
    Ok(Some((acc, f1, predicted.len())))
}

fn at_k_records(
    report: &mut MetricReport,
    prefix: &str,
    ranking: &DiscoveryRanking,
    judgments: Option<&(JudgmentSet, String)>,
    ks: &[usize],
    ranking_digest: &str,
) -> Result<()> {
    for &k in ks {
        let name = format!("{prefix}.precision_at_{k}");
        let rec = match judgments {
            None => MetricRecord::new(name, None).with_note("no judgment file"),
            Some((set, jd)) => {
                let base = MetricRecord::new(name.clone(), None)
                    .with_input("ranking", ranking_digest)
                    .with_input("judgments", jd);
                match precision_at_k(ranking, &set.0, k) {
                    Ok(v) => MetricRecord { value: Some(v), ..base },
                    Err(e @ Error::Coverage { .. }) => base.with_note(e.to_string()),
                    Err(e) => return Err(e),
                }
            }
        };
        report.push(rec);
    }
    Ok(())
}

fn partial_records(report: &mut MetricReport, prefix: &str, m: &PartialMetrics, inputs: &[(&str, &str)], note: &str) {
    let mk = |name: &str, v: Option<f64>| {
        let mut r = MetricRecord::new(format!("{prefix}.{name}"), v).with_note(note);
        for (k, d) in inputs {
            r = r.with_input(k, d);
        }
        r
    };
    report.push(mk("partial_precision", m.precision));
    report.push(mk("partial_recall", m.recall));
    let mut f = mk("partial_f1", Some(m.pf1));
    if m.pf1_limit {
        f = f.with_note(format!("{note}; zero by convention (p + r = 0 or undefined)"));
    }
    report.push(f);
    report.push(mk("discovered", Some(m.discovered as f64)));
}

fn evaluate_stage(cfg: &RunConfig) -> Result<StageLog> {
    let mut log = StageLog::new(Stage::Evaluate);
    let dir = &cfg.output_dir;
    let graph = load_graph(dir)?;
    let pred_path = dir.join(PREDICTIONS_FILE);
    require_artifact(&pred_path, Stage::Predict)?;
    let preds = read_predictions(&pred_path)?;
    let by_id: BTreeMap<&str, &Prediction> = preds.iter().map(|p| (p.domain.as_str(), p)).collect();
    let pred_digest = file_digest(&pred_path)?;
    let graph_digest = file_digest(&dir.join(GRAPH_DIR).join(MANIFEST_FILE))?;
    let mut report = MetricReport::default();
    let comparability = cfg.variant.non_comparable().then_some(
        "non-comparable: evaluated only on labeled domains mentioned in the cleaned social stream",
    );

    for split in [Split::Test, Split::Val] {
        let name = split.as_str();
        let scored = split_scores(&graph, &by_id, split)?;
        let mk = |metric: &str, v: Option<f64>| {
            let mut r = MetricRecord::new(format!("{name}.{metric}"), v)
                .with_input("predictions", &pred_digest)
                .with_input("graph", &graph_digest);
            if let Some(n) = comparability {
                r = r.with_note(n);
            }
            r
        };
        match scored {
            Some((acc, f1, n)) => {
                report.push(mk("accuracy", Some(acc)));
                report.push(mk("f1", Some(f1)));
                report.push(mk("size", Some(n as f64)));
            }
            None => {
                report.push(mk("accuracy", None).with_note(format!("no labeled {name} domains")));
                report.push(mk("f1", None).with_note(format!("no labeled {name} domains")));
                report.push(mk("size", Some(0.0)));
            }
        }
    }

    let judgments = match cfg.inputs.judgments.as_deref() {
        Some(p) => Some((JudgmentSet::from_judgments(&load_judgments(p)?)?, file_digest(p)?)),
        None => None,
    };
    let seeds = optional_ids(cfg.inputs.seed_list.as_deref())?;
    let eval = optional_ids(cfg.inputs.eval_list.as_deref())?;
    let lists_digest = match (cfg.inputs.seed_list.as_deref(), cfg.inputs.eval_list.as_deref()) {
        (Some(s), Some(e)) => Some((file_digest(s)?, file_digest(e)?)),
        _ => None,
    };
    let threshold = cfg.discovery.threshold;
    let note = format!("confidence >= {threshold}, seed domains excluded");

    let gnn_path = dir.join(GNN_RANKING_FILE);
    require_artifact(&gnn_path, Stage::Discover)?;
    let gnn = read_ranking(&gnn_path, Provenance::Gnn)?;
    let gnn_digest = file_digest(&gnn_path)?;
    at_k_records(&mut report, "gnn", &gnn, judgments.as_ref(), &cfg.discovery.top_k, &gnn_digest)?;
    let sweep_path = dir.join(SWEEP_FILE);
    if let (Some(seeds), Some(eval), Some((sd, ed))) = (&seeds, &eval, &lists_digest) {
        let found: BTreeSet<String> = gnn.at_least(threshold).difference(seeds).cloned().collect();
        let m = partial_metrics(&found, seeds, eval)?;
        let inputs = [("ranking", gnn_digest.as_str()), ("seed_list", sd.as_str()), ("eval_list", ed.as_str())];
        partial_records(&mut report, "gnn", &m, &inputs, &note);
        let entries: Vec<(String, f64)> = gnn.entries().iter().map(|e| (e.domain.clone(), e.confidence)).collect();
        let curve = threshold_sweep(&entries, seeds, eval, &cfg.discovery.grid)?;
        ensure_parent(&sweep_path)?;
        write_sweep_csv(&sweep_path, &curve)?;
        log.artifacts.push(SWEEP_FILE.into());
        log.set("sweep_points", curve.len());
    } else {
        if sweep_path.exists() {
            fs::remove_file(&sweep_path).map_err(|e| Error::io(&sweep_path, e))?;
        }
        report.push(MetricRecord::new("gnn.partial_f1", None).with_note("no seed and evaluation lists"));
    }

    let dredge_path = dir.join(DREDGE_RANKING_FILE);
    if cfg.discovery.dredge.is_some() {
        require_artifact(&dredge_path, Stage::Discover)?;
        let ranking = read_ranking(&dredge_path, Provenance::DredgeSerp)?;
        let d = file_digest(&dredge_path)?;
        at_k_records(&mut report, "dredge", &ranking, judgments.as_ref(), &cfg.discovery.top_k, &d)?;
        if let (Some(seeds), Some(eval), Some((sd, ed))) = (&seeds, &eval, &lists_digest) {
            let found: BTreeSet<String> = ranking
                .entries()
                .iter()
                .map(|e| e.domain.clone())
                .filter(|id| !seeds.contains(id))
                .collect();
            let m = partial_metrics(&found, seeds, eval)?;
            let inputs = [("ranking", d.as_str()), ("seed_list", sd.as_str()), ("eval_list", ed.as_str())];
            partial_records(&mut report, "dredge", &m, &inputs, &note);
        }
    }

    let path = dir.join(METRICS_FILE);
    write_text(&path, &(report.to_json()? + "\n"))?;
    log.artifacts.push(METRICS_FILE.into());
    log.set("records", report.records.len());
    if let Some(n) = comparability {
        log.notes.push(n.into());
    }
    Ok(log)
}

fn write_log(dir: &Path, log: &StageLog) -> Result<()> {
    let text = serde_json::to_string_pretty(log).map_err(ser_err)?;
    write_text(&dir.join(log.stage.log_file()), &(text + "\n"))
}

pub fn read_log(dir: &Path, stage: Stage) -> Result<Option<StageLog>> {
    let p = dir.join(stage.log_file());
    if !p.exists() {
        return Ok(None);
    }
    serde_json::from_str(&read_text(&p)?).map(Some).map_err(ser_err)
}

/// Runs one stage against the run directory; its predecessors' artifacts
/// must already be there.
pub fn run_stage(cfg: &RunConfig, stage: Stage) -> Result<StageLog> {
    let inner = || -> Result<StageLog> {
        prepare_run_dir(cfg)?;
        let log = match stage {
            Stage::BuildGraph => build_graph_stage(cfg)?,
            Stage::Embed => embed_stage(cfg)?,
            Stage::Train => train_stage(cfg)?,
            Stage::Predict => predict_stage(cfg)?,
            Stage::Discover => discover_stage(cfg)?,
            Stage::Evaluate => evaluate_stage(cfg)?,
        };
        write_log(&cfg.output_dir, &log)?;
        Ok(log)
    };
    log::info!("stage {stage} starting in {}", cfg.output_dir.display());
    inner().map_err(|e| e.in_stage(stage.as_str()))
}

pub(crate) fn relative(root: &Path, p: &Path) -> PathBuf {
    p.strip_prefix(root).map(Path::to_path_buf).unwrap_or_else(|_| p.to_path_buf())
}
