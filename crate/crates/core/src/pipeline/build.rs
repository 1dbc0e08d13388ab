use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::config::{RunConfig, Variant};
use crate::error::{Error, Result};
use crate::graph::{
    graph_union, stratified_split, Binarizer, DomainRecord, EdgeType, GraphBuilder, HeteroGraph, NodeType,
};
use crate::ingest::{
    filter_dredge_mentions, filter_social_stream, load_attributes, load_backlinks, load_id_list, load_labels,
    load_mentions, load_posts, load_serp, retain_ranking_queries, retained_rows, user_domain_weights, AttributeTable,
    Backlink, SerpResult, SocialMention,
};

/// Counts worth keeping in the stage log.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BuildSummary {
    pub labeled: usize,
    pub labels_without_attributes: usize,
    pub backlinks_kept: usize,
    pub backlinks_dropped: usize,
    pub social_rows_kept: usize,
    pub dredge_words: usize,
}

fn required<'a>(p: &'a Option<std::path::PathBuf>, name: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| Error::Config(format!("inputs.{name} is required")))
}

/// Keeps the `cap` heaviest backlinks of every target, ties by source id.
fn cap_backlinks(links: Vec<Backlink>, cap: Option<usize>) -> Vec<Backlink> {
    let Some(cap) = cap else { return links };
    let mut by_target: BTreeMap<String, Vec<Backlink>> = BTreeMap::new();
    for l in links {
        by_target.entry(l.target.clone()).or_default().push(l);
    }
    let mut out = Vec::new();
    for (_, mut v) in by_target {
        v.sort_by(|a, b| b.link_count.cmp(&a.link_count).then_with(|| a.source.cmp(&b.source)));
        v.truncate(cap);
        out.extend(v);
    }
    out
}

struct Sources {
    attributes: AttributeTable,
    records: BTreeMap<String, DomainRecord>,
    labeled: BTreeSet<String>,
}

impl Sources {
    fn record(&self, id: &str) -> Result<DomainRecord> {
        if let Some(r) = self.records.get(id) {
            return Ok(r.clone());
        }
        let attrs = self
            .attributes
            .get(id)
            .ok_or_else(|| Error::Data(format!("domain `{id}` has no attribute row")))?;
        DomainRecord::unlabeled(id, attrs.to_vec())
    }
}

fn load_sources(cfg: &RunConfig, summary: &mut BuildSummary) -> Result<Sources> {
    let attributes = load_attributes(required(&cfg.inputs.attributes, "attributes")?)?;
    let scores = load_labels(required(&cfg.inputs.labels, "labels")?)?;
    let binarizer = Binarizer {
        threshold: cfg.graph.threshold,
        boundary: cfg.graph.boundary,
    };
    let mut rated = BTreeMap::new();
    for (id, score) in scores {
        if rated.insert(id.clone(), score).is_some() {
            return Err(Error::Data(format!("domain `{id}` rated twice")));
        }
    }
    let mut labeled_pairs = Vec::new();
    let mut missing = 0;
    for (id, &score) in &rated {
        if attributes.contains(id) {
            labeled_pairs.push((id.clone(), binarizer.apply(score)?));
        } else {
            missing += 1;
        }
    }
    if missing > 0 {
        log::warn!("{missing} rated domains have no attribute row and are left out");
    }
    summary.labels_without_attributes = missing;
    summary.labeled = labeled_pairs.len();
    let split = stratified_split(&labeled_pairs, cfg.graph.split, crate::seed::derive(cfg.seed, "split"))?;
    let tags = split.tag_of();
    let mut records = BTreeMap::new();
    for (id, label) in &labeled_pairs {
        let attrs = attributes.get(id).expect("filtered above").to_vec();
        let rec = DomainRecord::new(id.clone(), attrs, Some((rated[id], *label)))?.with_split(tags[id.as_str()]);
        records.insert(id.clone(), rec);
    }
    let labeled = records.keys().cloned().collect();
    Ok(Sources {
        attributes,
        records,
        labeled,
    })
}

/// Labeled targets and their attributed backlinking sources.
fn webgraph(cfg: &RunConfig, src: &Sources, summary: &mut BuildSummary) -> Result<HeteroGraph> {
    let links = load_backlinks(required(&cfg.inputs.backlinks, "backlinks")?)?;
    let total = links.len();
    let usable: Vec<Backlink> = links
        .into_iter()
        .filter(|l| src.labeled.contains(&l.target) && src.attributes.contains(&l.source))
        .collect();
    let kept = cap_backlinks(usable, cfg.graph.backlinks_per_target);
    summary.backlinks_kept = kept.len();
    summary.backlinks_dropped = total - kept.len();
    let mut b = GraphBuilder::default();
    for rec in src.records.values() {
        b.add_domain(rec.clone())?;
    }
    for l in &kept {
        if !b.contains(&l.source) {
            b.add_domain(src.record(&l.source)?)?;
        }
        b.add_edge(&l.source, &l.target, EdgeType::DomainDomain, Some(l.link_count))?;
    }
    b.build()
}

fn cleaned_stream(cfg: &RunConfig, src: &Sources) -> Result<Vec<SocialMention>> {
    let mentions = load_mentions(required(&cfg.inputs.mentions, "mentions")?)?;
    let domains: BTreeSet<String> = src.attributes.domains().map(str::to_string).collect();
    Ok(filter_social_stream(&mentions, None, &domains, cfg.social))
}

/// Users and the attributed domains they linked to, weighted by summed counts.
fn social_graph(src: &Sources, stream: &[SocialMention]) -> Result<HeteroGraph> {
    let mut b = GraphBuilder::default();
    for ((user, domain), w) in user_domain_weights(stream) {
        b.add_node(&user, NodeType::User)?;
        if !b.contains(&domain) {
            b.add_domain(src.record(&domain)?)?;
        }
        b.add_edge(&user, &domain, EdgeType::UserDomain, Some(w))?;
    }
    b.build()
}

/// Phrases whose texts were posted by users of the cleaned stream.
pub(crate) fn observed_phrases(
    posts: &[(String, String)],
    users: &BTreeSet<String>,
    phrases: &[String],
) -> Result<Vec<(String, String, u64)>> {
    let kept: Vec<&(String, String)> = posts.iter().filter(|(u, _)| users.contains(u)).collect();
    let texts: Vec<&str> = kept.iter().map(|(_, t)| t.as_str()).collect();
    let mut counts: BTreeMap<(String, String), u64> = BTreeMap::new();
    for m in filter_dredge_mentions(&texts, phrases)? {
        *counts
            .entry((kept[m.text].0.clone(), phrases[m.phrase].clone()))
            .or_insert(0) += 1;
    }
    Ok(counts.into_iter().map(|((u, p), c)| (u, p, c)).collect())
}

pub(crate) fn retained_serp(cfg: &RunConfig) -> Result<(Vec<SerpResult>, Vec<String>)> {
    let serp = load_serp(required(&cfg.inputs.serp, "serp")?)?;
    let retained = retain_ranking_queries(&serp)?;
    let rows: Vec<SerpResult> = retained_rows(&serp, &retained).into_iter().cloned().collect();
    Ok((rows, retained.into_iter().map(|q| q.phrase).collect()))
}

/// Users mentioning retained dredge words, and the attributed domains each
/// word surfaces in its retained search results.
fn dredge_graph(cfg: &RunConfig, src: &Sources, stream: &[SocialMention], summary: &mut BuildSummary) -> Result<HeteroGraph> {
    let (rows, phrases) = retained_serp(cfg)?;
    let posts = load_posts(required(&cfg.inputs.posts, "posts")?)?;
    let users: BTreeSet<String> = stream.iter().map(|m| m.user.clone()).collect();
    let mut b = GraphBuilder::default();
    let mentions = observed_phrases(&posts, &users, &phrases)?;
    let words: BTreeSet<&str> = mentions.iter().map(|(_, p, _)| p.as_str()).collect();
    for (user, phrase, count) in &mentions {
        b.add_node(user, NodeType::User)?;
        b.add_node(phrase, NodeType::Dredge)?;
        b.add_edge(user, phrase, EdgeType::UserDredge, Some(*count))?;
    }
    for r in &rows {
        if !words.contains(r.query.as_str()) || !src.attributes.contains(&r.result_domain) {
            continue;
        }
        if !b.contains(&r.result_domain) {
            b.add_domain(src.record(&r.result_domain)?)?;
        }
        b.add_edge(&r.query, &r.result_domain, EdgeType::DredgeDomain, None)?;
    }
    summary.dredge_words = words.len();
    b.build()
}

/// Graph of the configured variant. All variants share one label split.
pub fn build_variant_graph(cfg: &RunConfig) -> Result<(HeteroGraph, BuildSummary)> {
    let mut summary = BuildSummary::default();
    let src = load_sources(cfg, &mut summary)?;
    let web = if cfg.variant.uses_webgraph() {
        Some(webgraph(cfg, &src, &mut summary)?)
    } else {
        None
    };
    let stream = if cfg.variant.uses_social() {
        let s = cleaned_stream(cfg, &src)?;
        summary.social_rows_kept = s.len();
        s
    } else {
        Vec::new()
    };
    let graph = match cfg.variant {
        Variant::HDomains => web.expect("webgraph variant"),
        Variant::HUsers => social_graph(&src, &stream)?,
        Variant::HDomainsUsers | Variant::EDomainsUsers => {
            graph_union(&web.expect("webgraph variant"), &social_graph(&src, &stream)?)?
        }
        Variant::EDomainsUsersDredge => {
            let base = graph_union(&web.expect("webgraph variant"), &social_graph(&src, &stream)?)?;
            graph_union(&base, &dredge_graph(cfg, &src, &stream, &mut summary)?)?
        }
    };
    if graph.labels().is_empty() {
        return Err(Error::Data(format!("variant {} has no labeled domain", cfg.variant)));
    }
    Ok((graph, summary))
}

/// Every rated id in the labels file, whether or not it made it into a graph.
pub fn rated_ids(cfg: &RunConfig) -> Result<BTreeSet<String>> {
    Ok(load_labels(required(&cfg.inputs.labels, "labels")?)?
        .into_iter()
        .map(|(id, _)| id)
        .collect())
}

pub fn optional_ids(path: Option<&Path>) -> Result<Option<BTreeSet<String>>> {
    path.map(load_id_list).transpose()
}

/// Retained dredge words mentioned by users of the cleaned social stream.
pub fn observed_dredge_words(cfg: &RunConfig) -> Result<BTreeSet<String>> {
    let attributes = load_attributes(required(&cfg.inputs.attributes, "attributes")?)?;
    let mentions = load_mentions(required(&cfg.inputs.mentions, "mentions")?)?;
    let domains: BTreeSet<String> = attributes.domains().map(str::to_string).collect();
    let stream = filter_social_stream(&mentions, None, &domains, cfg.social);
    let users: BTreeSet<String> = stream.iter().map(|m| m.user.clone()).collect();
    let (_, phrases) = retained_serp(cfg)?;
    let posts = load_posts(required(&cfg.inputs.posts, "posts")?)?;
    Ok(observed_phrases(&posts, &users, &phrases)?
        .into_iter()
        .map(|(_, p, _)| p)
        .collect())
}
