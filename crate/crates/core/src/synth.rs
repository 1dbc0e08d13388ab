//! Planted two-block datasets written as raw input tables.
//!
//! Domains, users and candidates belong to a reliable or an unreliable block.
//! Links and mentions form mostly within a block, attributes shift with the
//! block, and dredge words target unreliable domains. The tables go through
//! the normal ingest path, so they are shaped to survive the social filters.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::ATTRIBUTE_DIM;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantedConfig {
    /// Labeled domains (backlink targets).
    pub domains: usize,
    pub users: usize,
    /// Unlabeled backlinking domains.
    pub unlabeled: usize,
    pub p_in: f64,
    pub p_out: f64,
    /// Per-attribute shift of the log-attributes of unreliable nodes.
    pub attribute_shift: f64,
    pub dredge_words: usize,
    /// Off-graph domains that only appear in search results.
    pub candidates: usize,
    pub user_text_dim: usize,
    pub dredge_text_dim: usize,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        Self {
            domains: 500,
            users: 200,
            unlabeled: 0,
            p_in: 0.05,
            p_out: 0.005,
            attribute_shift: 0.35,
            dredge_words: 0,
            candidates: 0,
            user_text_dim: 0,
            dredge_text_dim: 0,
            seed: 0,
        }
    }
}

/// Paths of the written tables; optional ones are absent when not generated.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedFiles {
    pub backlinks: PathBuf,
    pub attributes: PathBuf,
    pub labels: PathBuf,
    pub mentions: PathBuf,
    pub serp: Option<PathBuf>,
    pub posts: Option<PathBuf>,
    pub user_vectors: Option<PathBuf>,
    pub dredge_vectors: Option<PathBuf>,
    pub seed_list: Option<PathBuf>,
    pub eval_list: Option<PathBuf>,
    pub judgments: Option<PathBuf>,
}

pub fn domain_id(i: usize) -> String {
    format!("site{i:04}.example")
}

pub fn unlabeled_id(i: usize) -> String {
    format!("ext{i:04}.example")
}

pub fn candidate_id(i: usize) -> String {
    format!("cand{i:03}.example")
}

pub fn user_id(i: usize) -> String {
    format!("user{i:04}")
}

pub fn phrase(i: usize) -> String {
    format!("hidden remedy {i}")
}

/// Block membership: odd indices are unreliable.
pub fn is_unreliable(i: usize) -> bool {
    i % 2 == 1
}

struct Sink {
    w: csv::Writer<std::fs::File>,
    path: PathBuf,
}

impl Sink {
    fn new(dir: &Path, name: &str, header: &[String]) -> Result<Self> {
        let path = dir.join(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| Error::csv(&path, e))?;
        w.write_record(header).map_err(|e| Error::csv(&path, e))?;
        Ok(Self { w, path })
    }

    fn row<I: IntoIterator<Item = String>>(&mut self, fields: I) -> Result<()> {
        let v: Vec<String> = fields.into_iter().collect();
        self.w.write_record(&v).map_err(|e| Error::csv(&self.path, e))
    }

    fn done(mut self) -> Result<PathBuf> {
        self.w.flush().map_err(|e| Error::io(&self.path, e))?;
        Ok(self.path)
    }
}

fn strs(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn raw_attributes(bad: bool, shift: f64, rng: &mut ChaCha8Rng) -> Vec<String> {
    (0..ATTRIBUTE_DIM)
        .map(|_| {
            let v: f64 = (2.0 + if bad { shift } else { 0.0 } + rng.sample::<f64, _>(StandardNormal)).max(0.0);
            format!("{:.6}", v.exp_m1())
        })
        .collect()
}

fn text_vector(dim: usize, bad: bool, rng: &mut ChaCha8Rng) -> Vec<String> {
    (0..dim)
        .map(|k| {
            let mean = if bad == (k % 2 == 0) { 0.5 } else { -0.5 };
            format!("{:.6}", mean + rng.sample::<f64, _>(StandardNormal))
        })
        .collect()
}

pub fn write_planted(dir: &Path, cfg: &PlantedConfig) -> Result<PlantedFiles> {
    if cfg.domains < 20 || !(0.0..=1.0).contains(&cfg.p_in) || !(0.0..=1.0).contains(&cfg.p_out) {
        return Err(Error::Config("planted graph needs >= 20 domains and probabilities in [0, 1]".into()));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let p = |a: bool, b: bool| if a == b { cfg.p_in } else { cfg.p_out };

    let mut labels = Sink::new(dir, "labels.csv", &strs(&["domain", "pc_score"]))?;
    for i in 0..cfg.domains {
        let s: f64 = if is_unreliable(i) { rng.gen_range(0.02..0.50) } else { rng.gen_range(0.53..0.99) };
        labels.row([domain_id(i), format!("{s:.6}")])?;
    }

    let mut attr_header = vec!["domain".to_string()];
    attr_header.extend((1..=ATTRIBUTE_DIM).map(|k| format!("a{k:02}")));
    let mut attrs = Sink::new(dir, "attributes.csv", &attr_header)?;
    for i in 0..cfg.domains {
        attrs.row(std::iter::once(domain_id(i)).chain(raw_attributes(is_unreliable(i), cfg.attribute_shift, &mut rng)))?;
    }
    for i in 0..cfg.unlabeled {
        attrs.row(std::iter::once(unlabeled_id(i)).chain(raw_attributes(is_unreliable(i), cfg.attribute_shift, &mut rng)))?;
    }
    for i in 0..cfg.candidates {
        attrs.row(std::iter::once(candidate_id(i)).chain(raw_attributes(is_unreliable(i), cfg.attribute_shift, &mut rng)))?;
    }

    let mut links = Sink::new(dir, "backlinks.csv", &strs(&["source", "target", "link_count"]))?;
    for t in 0..cfg.domains {
        for s in 0..cfg.domains {
            if s != t && rng.gen::<f64>() < p(is_unreliable(s), is_unreliable(t)) {
                links.row([domain_id(s), domain_id(t), rng.gen_range(1..5000u32).to_string()])?;
            }
        }
        for s in 0..cfg.unlabeled {
            if rng.gen::<f64>() < p(is_unreliable(s), is_unreliable(t)) {
                links.row([unlabeled_id(s), domain_id(t), rng.gen_range(1..5000u32).to_string()])?;
            }
        }
    }

    // two tweets per user-domain pair, each seen three times
    let mut mentions = Sink::new(dir, "mentions.csv", &strs(&["user", "tweet_id", "domain", "count"]))?;
    let mut tweet = 0u64;
    for u in 0..cfg.users {
        let targets = (0..cfg.domains).map(|d| (domain_id(d), is_unreliable(d)));
        let extra = (0..cfg.unlabeled).map(|d| (unlabeled_id(d), is_unreliable(d)));
        for (d, bad) in targets.chain(extra) {
            if rng.gen::<f64>() < p(is_unreliable(u), bad) {
                for _ in 0..2 {
                    tweet += 1;
                    mentions.row([user_id(u), format!("tw{tweet:07}"), d.clone(), "3".into()])?;
                }
            }
        }
    }

    let mut files = PlantedFiles {
        backlinks: links.done()?,
        attributes: attrs.done()?,
        labels: labels.done()?,
        mentions: mentions.done()?,
        serp: None,
        posts: None,
        user_vectors: None,
        dredge_vectors: None,
        seed_list: None,
        eval_list: None,
        judgments: None,
    };

    if cfg.dredge_words > 0 {
        let bad_domains: Vec<usize> = (0..cfg.domains).filter(|&i| is_unreliable(i)).collect();
        let mut serp = Sink::new(dir, "serp.csv", &strs(&["query", "target_domain", "rank", "result_domain"]))?;
        let mut posts = Sink::new(dir, "posts.csv", &strs(&["user", "text"]))?;
        for k in 0..cfg.dredge_words {
            let target = domain_id(bad_domains[k % bad_domains.len()]);
            // every fifth query never surfaces its target
            let target_rank = (k % 5 != 4).then_some(1 + k % 10);
            let mut used = BTreeSet::from([target.clone()]);
            for rank in 1..=10usize {
                let result = if Some(rank) == target_rank {
                    target.clone()
                } else {
                    let mut pick = String::new();
                    for _ in 0..20 {
                        let r: f64 = rng.gen();
                        pick = if cfg.candidates > 0 && r < 0.4 {
                            // unreliable candidates surface more often
                            let c = rng.gen_range(0..cfg.candidates);
                            candidate_id(if rng.gen::<f64>() < 0.75 { c | 1 } else { c & !1 }.min(cfg.candidates - 1))
                        } else if r < 0.8 {
                            domain_id(bad_domains[rng.gen_range(0..bad_domains.len())])
                        } else {
                            domain_id(2 * rng.gen_range(0..cfg.domains / 2))
                        };
                        if used.insert(pick.clone()) {
                            break;
                        }
                    }
                    pick
                };
                serp.row([phrase(k), target.clone(), rank.to_string(), result])?;
            }
            for u in 0..cfg.users {
                if rng.gen::<f64>() < if is_unreliable(u) { 0.08 } else { 0.008 } {
                    let text = match rng.gen_range(0..3) {
                        0 => format!("{} is what they hide", phrase(k)),
                        1 => format!("look up #{} today", phrase(k).replace(' ', "")),
                        _ => format!("read about {} now", phrase(k)),
                    };
                    posts.row([user_id(u), text])?;
                }
            }
        }
        posts.row([user_id(0), format!("x{} does not count", phrase(0))])?;
        files.serp = Some(serp.done()?);
        files.posts = Some(posts.done()?);
    }

    if cfg.user_text_dim > 0 {
        let mut h = vec!["id".to_string(), "dim".to_string()];
        h.extend((1..=cfg.user_text_dim).map(|k| format!("v{k}")));
        let mut s = Sink::new(dir, "user_vectors.csv", &h)?;
        for u in 0..cfg.users {
            s.row([user_id(u), cfg.user_text_dim.to_string()].into_iter().chain(text_vector(cfg.user_text_dim, is_unreliable(u), &mut rng)))?;
        }
        files.user_vectors = Some(s.done()?);
    }
    if cfg.dredge_text_dim > 0 && cfg.dredge_words > 0 {
        let mut h = vec!["id".to_string(), "dim".to_string()];
        h.extend((1..=cfg.dredge_text_dim).map(|k| format!("v{k}")));
        let mut s = Sink::new(dir, "dredge_vectors.csv", &h)?;
        for k in 0..cfg.dredge_words {
            s.row([phrase(k), cfg.dredge_text_dim.to_string()].into_iter().chain(text_vector(cfg.dredge_text_dim, true, &mut rng)))?;
        }
        files.dredge_vectors = Some(s.done()?);
    }

    if cfg.unlabeled + cfg.candidates > 0 {
        let mut seeds = Sink::new(dir, "seed_list.csv", &strs(&["domain"]))?;
        for i in (0..cfg.domains).filter(|&i| is_unreliable(i)).take(10) {
            seeds.row([domain_id(i)])?;
        }
        let mut eval = Sink::new(dir, "eval_list.csv", &strs(&["domain"]))?;
        let mut judg = Sink::new(dir, "judgments.csv", &strs(&["domain", "verdict", "annotator_id", "note"]))?;
        let unknown = (0..cfg.unlabeled).map(|i| (unlabeled_id(i), is_unreliable(i)));
        let cands = (0..cfg.candidates).map(|i| (candidate_id(i), is_unreliable(i)));
        for (n, (id, bad)) in unknown.chain(cands).enumerate() {
            if bad && n % 5 != 0 {
                eval.row([id.clone()])?;
            }
            let verdict = if bad { "unreliable" } else { "reliable" };
            judg.row([id, verdict.into(), "a1".into(), String::new()])?;
        }
        files.seed_list = Some(seeds.done()?);
        files.eval_list = Some(eval.done()?);
        files.judgments = Some(judg.done()?);
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{filter_social_stream, load_attributes, load_backlinks, load_mentions, SocialFilterRules};

    #[test]
    fn planted_tables_load_and_survive_cleaning() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = PlantedConfig { domains: 100, users: 40, unlabeled: 10, p_in: 0.2, p_out: 0.02, ..PlantedConfig::default() };
        let f = write_planted(dir.path(), &cfg).unwrap();
        let attrs = load_attributes(&f.attributes).unwrap();
        assert_eq!(attrs.len(), 110);
        let links = load_backlinks(&f.backlinks).unwrap();
        let within = links.iter().filter(|l| l.source.ends_with(".example")).count();
        assert_eq!(within, links.len());
        let m = load_mentions(&f.mentions).unwrap();
        let domains: BTreeSet<String> = attrs.domains().map(String::from).collect();
        let kept = filter_social_stream(&m, None, &domains, SocialFilterRules::default());
        let users: BTreeSet<&str> = kept.iter().map(|r| r.user.as_str()).collect();
        assert!(users.len() >= 38, "{} users kept", users.len());
    }
}
