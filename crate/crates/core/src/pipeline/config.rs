use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::curriculum::CurriculumConfig;
use crate::embed::Node2VecConfig;
use crate::error::{Error, Result};
use crate::eval::{DredgeVariant, LogisticConfig, DEFAULT_GRID, HIGHLIGHT_THRESHOLD};
use crate::gnn::{AdamConfig, ReverseEdges, TrainConfig, HIDDEN_DIM};
use crate::graph::{Boundary, NodeType, SplitRatios, DEFAULT_THRESHOLD};
use crate::ingest::SocialFilterRules;

/// Relative output directories resolve under this root when it is set.
pub const OUTPUT_ROOT_ENV: &str = "DREDGE_OUTPUT_ROOT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "H_domains")]
    HDomains,
    #[serde(rename = "H_users")]
    HUsers,
    #[serde(rename = "H_domains+users")]
    HDomainsUsers,
    #[serde(rename = "E_domains+users")]
    EDomainsUsers,
    #[serde(rename = "E_domains+users+dredge")]
    EDomainsUsersDredge,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::HDomains,
        Variant::HUsers,
        Variant::HDomainsUsers,
        Variant::EDomainsUsers,
        Variant::EDomainsUsersDredge,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::HDomains => "H_domains",
            Variant::HUsers => "H_users",
            Variant::HDomainsUsers => "H_domains+users",
            Variant::EDomainsUsers => "E_domains+users",
            Variant::EDomainsUsersDredge => "E_domains+users+dredge",
        }
    }

    pub fn is_homogeneous(self) -> bool {
        matches!(self, Variant::HDomains | Variant::HUsers | Variant::HDomainsUsers)
    }

    pub fn uses_social(self) -> bool {
        self != Variant::HDomains
    }

    pub fn uses_webgraph(self) -> bool {
        self != Variant::HUsers
    }

    pub fn uses_dredge(self) -> bool {
        self == Variant::EDomainsUsersDredge
    }

    /// Node types the variant's graph can contain.
    pub fn node_types(self) -> Vec<NodeType> {
        match self {
            Variant::HDomains => vec![NodeType::Domain],
            Variant::EDomainsUsersDredge => NodeType::ALL.to_vec(),
            _ => vec![NodeType::Domain, NodeType::User],
        }
    }

    /// Evaluated on a different labeled subset than the other variants.
    pub fn non_comparable(self) -> bool {
        self == Variant::HUsers
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Variant::ALL.iter().map(|v| v.as_str()).collect();
                Error::Config(format!("unknown variant `{s}`, expected one of {}", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSource {
    /// Log-normalized SEO attributes (domains only).
    Attributes,
    /// Node2Vec embeddings computed on the variant's graph.
    Positional,
    /// Precomputed vectors from a sidecar file.
    Text,
}

impl FeatureSource {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSource::Attributes => "attributes",
            FeatureSource::Positional => "positional",
            FeatureSource::Text => "text",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Inputs {
    pub backlinks: Option<PathBuf>,
    pub attributes: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub mentions: Option<PathBuf>,
    pub serp: Option<PathBuf>,
    pub posts: Option<PathBuf>,
    pub user_vectors: Option<PathBuf>,
    pub dredge_vectors: Option<PathBuf>,
    pub seed_list: Option<PathBuf>,
    pub eval_list: Option<PathBuf>,
    pub judgments: Option<PathBuf>,
}

impl Inputs {
    fn fields_mut(&mut self) -> [&mut Option<PathBuf>; 11] {
        [
            &mut self.backlinks,
            &mut self.attributes,
            &mut self.labels,
            &mut self.mentions,
            &mut self.serp,
            &mut self.posts,
            &mut self.user_vectors,
            &mut self.dredge_vectors,
            &mut self.seed_list,
            &mut self.eval_list,
            &mut self.judgments,
        ]
    }

    pub fn named(&self) -> [(&'static str, Option<&Path>); 11] {
        [
            ("backlinks", self.backlinks.as_deref()),
            ("attributes", self.attributes.as_deref()),
            ("labels", self.labels.as_deref()),
            ("mentions", self.mentions.as_deref()),
            ("serp", self.serp.as_deref()),
            ("posts", self.posts.as_deref()),
            ("user_vectors", self.user_vectors.as_deref()),
            ("dredge_vectors", self.dredge_vectors.as_deref()),
            ("seed_list", self.seed_list.as_deref()),
            ("eval_list", self.eval_list.as_deref()),
            ("judgments", self.judgments.as_deref()),
        ]
    }
}

/// Per-node-type feature sources. Unset entries take the variant default:
/// positional everywhere for homogeneous graphs; attributes for domains,
/// positional for users and text for dredge words otherwise.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub domain: Option<FeatureSource>,
    pub user: Option<FeatureSource>,
    pub dredge: Option<FeatureSource>,
}

impl FeatureConfig {
    pub fn source(&self, kind: NodeType, variant: Variant) -> FeatureSource {
        let set = match kind {
            NodeType::Domain => self.domain,
            NodeType::User => self.user,
            NodeType::Dredge => self.dredge,
        };
        set.unwrap_or(match (variant.is_homogeneous(), kind) {
            (true, _) => FeatureSource::Positional,
            (false, NodeType::Domain) => FeatureSource::Attributes,
            (false, NodeType::User) => FeatureSource::Positional,
            (false, NodeType::Dredge) => FeatureSource::Text,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphConfig {
    pub threshold: f64,
    pub boundary: Boundary,
    /// Keep only the strongest backlinking sources per labeled target.
    pub backlinks_per_target: Option<usize>,
    pub reverse_edges: ReverseEdges,
    /// Weight neighbor means by edge weight instead of a plain mean.
    pub weighted_mean: bool,
    pub split: SplitRatios,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            boundary: Boundary::StrictLess,
            backlinks_per_target: None,
            reverse_edges: ReverseEdges::default(),
            weighted_mean: false,
            split: SplitRatios::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub max_epochs: usize,
    pub patience: usize,
    pub base_lr: f64,
    pub dropout: f64,
    pub hidden: usize,
    /// Width that text features are projected to before the first layer.
    pub projection_dim: usize,
    pub adam: AdamConfig,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            max_epochs: t.max_epochs,
            patience: t.patience,
            base_lr: t.base_lr,
            dropout: t.dropout,
            hidden: HIDDEN_DIM,
            projection_dim: crate::graph::ATTRIBUTE_DIM,
            adam: t.adam,
        }
    }
}

impl TrainSection {
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            max_epochs: self.max_epochs,
            patience: self.patience,
            base_lr: self.base_lr,
            dropout: self.dropout,
            seed,
            adam: self.adam,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScorerKind {
    /// Attribute-only logistic regression fitted on the training split.
    #[default]
    Attributes,
    /// The trained network's predictions; candidates outside the graph are dropped.
    Gnn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscoveryConfig {
    pub threshold: f64,
    /// Run search-result discovery with this variant.
    pub dredge: Option<DredgeVariant>,
    pub scorer: ScorerKind,
    pub min_occurrences: usize,
    pub grid: Vec<f64>,
    pub top_k: Vec<usize>,
    pub logistic: LogisticConfig,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        Self {
            threshold: HIGHLIGHT_THRESHOLD,
            dredge: None,
            scorer: ScorerKind::default(),
            min_occurrences: 1,
            grid: DEFAULT_GRID.to_vec(),
            top_k: vec![5, 10, 20],
            logistic: LogisticConfig::default(),
        }
    }
}

/// One declarative run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub variant: Variant,
    #[serde(default)]
    pub seed: u64,
    /// Batch mode: one full run per seed. Overrides `seed`.
    #[serde(default)]
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub curriculum: bool,
    #[serde(default)]
    pub inputs: Inputs,
    #[serde(default)]
    pub features: FeatureConfig,
    #[serde(default)]
    pub graph: GraphConfig,
    #[serde(default)]
    pub social: SocialFilterRules,
    #[serde(default)]
    pub embed: Node2VecConfig,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub schedule: CurriculumConfig,
    #[serde(default)]
    pub discovery: DiscoveryConfig,
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

/// Sets `a.b.c = value` in a TOML table. The value is parsed as a TOML
/// literal and falls back to a plain string.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override key `{key}`")));
    }
    let mut cur = table;
    for part in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override `{key}`: `{part}` is not a section")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

impl RunConfig {
    /// Parses a config. Relative input paths resolve against `base_dir`;
    /// a relative output directory resolves under `$DREDGE_OUTPUT_ROOT`
    /// when set, else against `base_dir`.
    pub fn from_toml(text: &str, base_dir: &Path, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let mut cfg: RunConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(format!("config: {e}")))?;
        for p in cfg.inputs.fields_mut().into_iter().flatten() {
            resolve(base_dir, p);
        }
        if cfg.output_dir.is_relative() {
            match std::env::var_os(OUTPUT_ROOT_ENV) {
                Some(root) if !root.is_empty() => cfg.output_dir = PathBuf::from(root).join(&cfg.output_dir),
                _ => resolve(base_dir, &mut cfg.output_dir),
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base, overrides)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn feature_source(&self, kind: NodeType) -> FeatureSource {
        self.features.source(kind, self.variant)
    }

    /// Seeds to run: the batch list, or the single master seed.
    pub fn run_seeds(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            vec![self.seed]
        } else {
            self.seeds.clone()
        }
    }

    /// The same config pinned to one seed, writing into `dir`.
    pub fn for_seed(&self, seed: u64, dir: PathBuf) -> Self {
        Self {
            seed,
            seeds: Vec::new(),
            output_dir: dir,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_config(self).map_err(|errs| Error::Config(errs.join("; ")))
    }
}

fn require(errs: &mut Vec<String>, name: &str, path: Option<&Path>, why: &str) {
    match path {
        None => errs.push(format!("inputs.{name} is required {why}")),
        Some(p) if !p.is_file() => errs.push(format!("inputs.{name}: file {} does not exist", p.display())),
        Some(_) => {}
    }
}

fn labels_have_scores(path: &Path) -> std::result::Result<bool, String> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| format!("inputs.labels: cannot read {}: {e}", path.display()))?;
    let h = r
        .headers()
        .map_err(|e| format!("inputs.labels: cannot read header of {}: {e}", path.display()))?;
    Ok(h.get(1) == Some("pc_score"))
}

/// Schema, path and combination checks. Every problem found is reported.
pub fn validate_config(cfg: &RunConfig) -> std::result::Result<(), Vec<String>> {
    let mut errs = Vec::new();
    let v = cfg.variant;
    let inputs = &cfg.inputs;

    require(&mut errs, "attributes", inputs.attributes.as_deref(), "(domain features and the domain universe)");
    require(&mut errs, "labels", inputs.labels.as_deref(), "(training labels)");
    require(&mut errs, "backlinks", inputs.backlinks.as_deref(), "(webgraph edges define the labeled targets)");
    if v.uses_social() {
        require(&mut errs, "mentions", inputs.mentions.as_deref(), &format!("by variant {v}"));
    }
    if v.uses_dredge() || cfg.discovery.dredge.is_some() {
        let why = if v.uses_dredge() { format!("by variant {v}") } else { "by discovery.dredge".into() };
        require(&mut errs, "serp", inputs.serp.as_deref(), &why);
        require(&mut errs, "posts", inputs.posts.as_deref(), &why);
    }
    if cfg.discovery.dredge.is_some() && !v.uses_social() {
        require(&mut errs, "mentions", inputs.mentions.as_deref(), "by discovery.dredge (observed dredge words)");
    }
    for kind in v.node_types() {
        let src = cfg.feature_source(kind);
        match (kind, src) {
            (_, FeatureSource::Text) if v.is_homogeneous() => errs.push(format!(
                "features.{}: text features need a heterogeneous variant, {v} has one feature space",
                kind.as_str()
            )),
            (NodeType::Domain, FeatureSource::Text) => {
                errs.push("features.domain: text features are not supported for domains".into())
            }
            (NodeType::User, FeatureSource::Text) => {
                require(&mut errs, "user_vectors", inputs.user_vectors.as_deref(), "by features.user = \"text\"")
            }
            (NodeType::Dredge, FeatureSource::Text) => {
                require(&mut errs, "dredge_vectors", inputs.dredge_vectors.as_deref(), "by features.dredge = \"text\"")
            }
            (NodeType::User | NodeType::Dredge, FeatureSource::Attributes) => {
                errs.push(format!("features.{}: attributes exist only for domains", kind.as_str()))
            }
            _ => {}
        }
    }
    if v.is_homogeneous() && cfg.feature_source(NodeType::Domain) == FeatureSource::Attributes {
        let dim = cfg.embed.skipgram.dim;
        if v.uses_social() && dim != crate::graph::ATTRIBUTE_DIM {
            errs.push(format!(
                "features.domain = \"attributes\" in {v} needs embed.skipgram.dim = {} to share one feature space",
                crate::graph::ATTRIBUTE_DIM
            ));
        }
    }
    if cfg.curriculum {
        if let Some(p) = inputs.labels.as_deref().filter(|p| p.is_file()) {
            match labels_have_scores(p) {
                Ok(true) => {}
                Ok(false) => errs.push(format!(
                    "curriculum = true needs continuous reliability scores: {} has no `pc_score` column",
                    p.display()
                )),
                Err(e) => errs.push(e),
            }
        }
        if cfg.schedule.stage_patience == 0 {
            errs.push("schedule.stage_patience must be positive".into());
        }
    }
    for (name, path) in [
        ("seed_list", inputs.seed_list.as_deref()),
        ("eval_list", inputs.eval_list.as_deref()),
        ("judgments", inputs.judgments.as_deref()),
        ("posts", inputs.posts.as_deref()),
        ("user_vectors", inputs.user_vectors.as_deref()),
        ("dredge_vectors", inputs.dredge_vectors.as_deref()),
        ("mentions", inputs.mentions.as_deref()),
        ("serp", inputs.serp.as_deref()),
    ] {
        if let Some(p) = path {
            if !p.is_file() && !errs.iter().any(|e| e.starts_with(&format!("inputs.{name}:"))) {
                errs.push(format!("inputs.{name}: file {} does not exist", p.display()));
            }
        }
    }
    if inputs.seed_list.is_some() != inputs.eval_list.is_some() {
        errs.push("inputs.seed_list and inputs.eval_list must be given together".into());
    }
    if !(0.0..=1.0).contains(&cfg.graph.threshold) {
        errs.push(format!("graph.threshold {} outside [0, 1]", cfg.graph.threshold));
    }
    if let Err(e) = cfg.graph.split.validate() {
        errs.push(format!("graph.split: {e}"));
    }
    if cfg.graph.backlinks_per_target == Some(0) {
        errs.push("graph.backlinks_per_target must be positive when set".into());
    }
    if let Err(e) = cfg.train.train_config(cfg.seed).validate() {
        errs.push(format!("train: {e}"));
    }
    if cfg.train.hidden == 0 || cfg.train.projection_dim == 0 {
        errs.push("train.hidden and train.projection_dim must be positive".into());
    }
    if cfg.embed.skipgram.dim == 0 {
        errs.push("embed.skipgram.dim must be positive".into());
    }
    if cfg.embed.walk.walk_length == 0 || cfg.embed.walk.walks_per_node == 0 {
        errs.push("embed.walk.walk_length and embed.walk.walks_per_node must be positive".into());
    }
    let d = &cfg.discovery;
    if !(0.0..=1.0).contains(&d.threshold) {
        errs.push(format!("discovery.threshold {} outside [0, 1]", d.threshold));
    }
    if d.grid.is_empty()
        || d.grid.iter().any(|t| !(0.0..=1.0).contains(t))
        || d.grid.windows(2).any(|w| w[0] >= w[1])
    {
        errs.push("discovery.grid must be non-empty, strictly ascending and within [0, 1]".into());
    }
    if d.top_k.contains(&0) {
        errs.push("discovery.top_k entries must be positive".into());
    }
    let unique: BTreeSet<u64> = cfg.seeds.iter().copied().collect();
    if unique.len() != cfg.seeds.len() {
        errs.push("seeds contains duplicates".into());
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(errs)
    }
}
