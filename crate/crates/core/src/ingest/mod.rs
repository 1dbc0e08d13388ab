//! Readers for the raw exports and the cleaning rules applied to them.
//!
//! All inputs are UTF-8 comma-delimited tables with a header row:
//!
//! | table       | columns                                      |
//! |-------------|----------------------------------------------|
//! | backlinks   | `source,target,link_count`                   |
//! | attributes  | `domain` + 23 raw numeric attribute columns  |
//! | labels      | `domain,pc_score`                            |
//! | mentions    | `user,tweet_id,domain,count`                 |
//! | serp        | `query,target_domain,rank,result_domain`     |
//! | posts       | `user,text` (only scanned for dredge words)  |
//! | vectors     | `id,dim,v1,...,vN`                           |
//! | id lists    | `domain`                                     |

mod dredge;
mod fetch;
mod social;
mod vectors;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{normalize_domain, ATTRIBUTE_DIM};

pub use dredge::{
    build_serp_candidates, filter_dredge_mentions, retain_ranking_queries, retained_rows, DredgeMention,
    RetainedQuery, SerpCandidate, SERP_DEPTH,
};
pub use fetch::{AttributeFetcher, FileAttributeFetcher, FileSerpFetcher, SerpFetcher};
pub use social::{filter_social_stream, user_domain_weights, SocialFilterRules};
pub use vectors::{load_vectors, write_vectors, VectorTable};

pub(crate) fn open(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))
}

pub(crate) fn field<'a>(rec: &'a csv::StringRecord, col: usize, path: &Path, line: usize) -> Result<&'a str> {
    rec.get(col)
        .ok_or_else(|| Error::Schema(format!("{}:{line}: missing column {col}", path.display())))
}

pub(crate) fn number<T: std::str::FromStr>(
    rec: &csv::StringRecord,
    col: usize,
    path: &Path,
    line: usize,
) -> Result<T> {
    let raw = field(rec, col, path, line)?;
    raw.parse()
        .map_err(|_| Error::Data(format!("{}:{line}: cannot parse `{raw}` in column {col}", path.display())))
}

fn expect_columns(rec: &csv::StringRecord, n: usize, path: &Path, line: usize) -> Result<()> {
    if rec.len() != n {
        return Err(Error::Schema(format!(
            "{}:{line}: expected {n} columns, found {}",
            path.display(),
            rec.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Backlink {
    pub source: String,
    pub target: String,
    pub link_count: u64,
}

/// Log-normalized attribute vectors keyed by normalized domain id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AttributeTable {
    rows: BTreeMap<String, Vec<f64>>,
}

impl AttributeTable {
    /// Builds a table from raw (non-negative) values, storing `ln(1 + x)`.
    pub fn from_raw(raw: impl IntoIterator<Item = (String, Vec<f64>)>) -> Result<Self> {
        let mut rows = BTreeMap::new();
        for (id, values) in raw {
            if values.len() != ATTRIBUTE_DIM {
                return Err(Error::shape(format!("attributes of {id}"), ATTRIBUTE_DIM, values.len()));
            }
            let logged = values
                .iter()
                .map(|&x| {
                    if x < 0.0 || !x.is_finite() {
                        Err(Error::Data(format!("attribute value {x} for {id} must be finite and >= 0")))
                    } else {
                        Ok(x.ln_1p())
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            rows.insert(normalize_domain(&id), logged);
        }
        Ok(Self { rows })
    }

    pub fn get(&self, domain: &str) -> Option<&[f64]> {
        self.rows.get(domain).map(Vec::as_slice)
    }

    pub fn contains(&self, domain: &str) -> bool {
        self.rows.contains_key(domain)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn domains(&self) -> impl Iterator<Item = &str> + '_ {
        self.rows.keys().map(String::as_str)
    }

    /// Domains among `wanted` that have no attribute row.
    pub fn missing<'a>(&self, wanted: impl IntoIterator<Item = &'a str>) -> BTreeSet<String> {
        wanted
            .into_iter()
            .filter(|d| !self.rows.contains_key(*d))
            .map(str::to_string)
            .collect()
    }
}

pub fn load_attributes(path: &Path) -> Result<AttributeTable> {
    let mut r = open(path)?;
    let mut raw = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        expect_columns(&rec, ATTRIBUTE_DIM + 1, path, line)?;
        let values = (1..=ATTRIBUTE_DIM)
            .map(|c| number::<f64>(&rec, c, path, line))
            .collect::<Result<Vec<_>>>()?;
        raw.push((rec[0].to_string(), values));
    }
    AttributeTable::from_raw(raw)
}

pub fn load_backlinks(path: &Path) -> Result<Vec<Backlink>> {
    let mut r = open(path)?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        expect_columns(&rec, 3, path, line)?;
        let link_count: u64 = number(&rec, 2, path, line)?;
        if link_count == 0 {
            return Err(Error::Data(format!("{}:{line}: link_count must be positive", path.display())));
        }
        out.push(Backlink {
            source: normalize_domain(&rec[0]),
            target: normalize_domain(&rec[1]),
            link_count,
        });
    }
    Ok(out)
}

/// `(domain, pc_score)` rows. Scores must lie in `[0, 1]`.
pub fn load_labels(path: &Path) -> Result<Vec<(String, f64)>> {
    let mut r = open(path)?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        expect_columns(&rec, 2, path, line)?;
        let score: f64 = number(&rec, 1, path, line)?;
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::Data(format!("{}:{line}: pc_score {score} outside [0,1]", path.display())));
        }
        out.push((normalize_domain(&rec[0]), score));
    }
    Ok(out)
}

/// One observed (user, tweet, domain) link with its observation count.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SocialMention {
    pub user: String,
    pub tweet_id: String,
    pub domain: String,
    pub count: u64,
}

pub fn load_mentions(path: &Path) -> Result<Vec<SocialMention>> {
    let mut r = open(path)?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        expect_columns(&rec, 4, path, line)?;
        let count: u64 = number(&rec, 3, path, line)?;
        if count == 0 {
            return Err(Error::Data(format!("{}:{line}: count must be >= 1", path.display())));
        }
        out.push(SocialMention {
            user: rec[0].to_string(),
            tweet_id: rec[1].to_string(),
            domain: normalize_domain(&rec[2]),
            count,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SerpResult {
    pub query: String,
    pub target_domain: String,
    pub rank: u32,
    pub result_domain: String,
}

impl SerpResult {
    pub fn new(query: &str, target_domain: &str, rank: u32, result_domain: &str) -> Result<Self> {
        if query.trim().is_empty() {
            return Err(Error::Data("empty SERP query".into()));
        }
        if !(1..=SERP_DEPTH).contains(&rank) {
            return Err(Error::Data(format!("SERP rank {rank} for `{query}` outside 1..={SERP_DEPTH}")));
        }
        Ok(Self {
            query: query.trim().to_lowercase(),
            target_domain: normalize_domain(target_domain),
            rank,
            result_domain: normalize_domain(result_domain),
        })
    }
}

pub fn load_serp(path: &Path) -> Result<Vec<SerpResult>> {
    let mut r = open(path)?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        expect_columns(&rec, 4, path, line)?;
        let rank: u32 = number(&rec, 2, path, line)?;
        out.push(
            SerpResult::new(&rec[0], &rec[1], rank, &rec[3])
                .map_err(|e| Error::Data(format!("{}:{line}: {e}", path.display())))?,
        );
    }
    Ok(out)
}

/// `(user, text)` rows. Texts are only scanned for dredge-word mentions.
pub fn load_posts(path: &Path) -> Result<Vec<(String, String)>> {
    let mut r = open(path)?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        expect_columns(&rec, 2, path, line)?;
        out.push((rec[0].to_string(), rec[1].to_string()));
    }
    Ok(out)
}

/// Set of normalized domain ids from the first column of a table.
pub fn load_id_list(path: &Path) -> Result<BTreeSet<String>> {
    let mut r = open(path)?;
    let mut out = BTreeSet::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let id = field(&rec, 0, path, i + 2)?;
        if !id.is_empty() {
            out.insert(normalize_domain(id));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        std::fs::File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
        p
    }

    fn attr_header() -> String {
        let cols: Vec<String> = (1..=ATTRIBUTE_DIM).map(|i| format!("a{i}")).collect();
        format!("domain,{}\n", cols.join(","))
    }

    #[test]
    fn attributes_are_log_normalized() {
        let dir = tempfile::tempdir().unwrap();
        let mut body = attr_header();
        let mut row = vec!["0".to_string(); ATTRIBUTE_DIM];
        row[1] = (std::f64::consts::E - 1.0).to_string();
        body += &format!("https://www.A.com,{}\n", row.join(","));
        body += &format!("b.com,{}\n", vec!["0"; ATTRIBUTE_DIM].join(","));
        let t = load_attributes(&write(dir.path(), "attrs.csv", &body)).unwrap();
        let a = t.get("a.com").unwrap();
        assert_eq!(a[0], 0.0);
        assert!((a[1] - 1.0).abs() < 1e-12);
        assert_eq!(t.get("b.com").unwrap(), vec![0.0; ATTRIBUTE_DIM].as_slice());
        assert_eq!(t.missing(["a.com", "c.com"]), BTreeSet::from(["c.com".to_string()]));
    }

    #[test]
    fn attribute_errors() {
        let dir = tempfile::tempdir().unwrap();
        let mut neg = attr_header();
        let mut row = vec!["1".to_string(); ATTRIBUTE_DIM];
        row[5] = "-2".into();
        neg += &format!("a.com,{}\n", row.join(","));
        assert!(matches!(load_attributes(&write(dir.path(), "n.csv", &neg)), Err(Error::Data(_))));

        let short = attr_header() + "a.com,1,2,3\n";
        assert!(matches!(load_attributes(&write(dir.path(), "s.csv", &short)), Err(Error::Schema(_))));
    }

    #[test]
    fn serp_rank_is_validated() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "serp.csv", "query,target_domain,rank,result_domain\nindigo children,gaia.com,11,x.com\n");
        assert!(matches!(load_serp(&p), Err(Error::Data(_))));
        let p = write(dir.path(), "serp2.csv", "query,target_domain,rank,result_domain\nIndigo Children,gaia.com,3,WWW.X.com\n");
        let rows = load_serp(&p).unwrap();
        assert_eq!(rows[0].query, "indigo children");
        assert_eq!(rows[0].result_domain, "x.com");
    }

    #[test]
    fn labels_and_mentions() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "l.csv", "domain,pc_score\na.com,0.3\n");
        assert_eq!(load_labels(&p).unwrap(), vec![("a.com".to_string(), 0.3)]);
        let p = write(dir.path(), "l2.csv", "domain,pc_score\na.com,1.3\n");
        assert!(load_labels(&p).is_err());
        let p = write(dir.path(), "m.csv", "user,tweet_id,domain,count\nu1,t1,a.com,0\n");
        assert!(matches!(load_mentions(&p), Err(Error::Data(_))));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn log_normalization_is_monotone(x1 in 0.0f64..1e9, dx in 1e-6f64..1e6) {
                let x2 = x1 + dx;
                let t = AttributeTable::from_raw([
                    ("a".to_string(), vec![x1; ATTRIBUTE_DIM]),
                    ("b".to_string(), vec![x2; ATTRIBUTE_DIM]),
                ]).unwrap();
                prop_assert!(t.get("a").unwrap()[0] < t.get("b").unwrap()[0]);
            }
        }
    }
}
