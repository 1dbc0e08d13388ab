//! Retrieval contracts for search results and SEO attributes. Only
//! file-backed implementations ship; live services can implement the same
//! traits.

use std::collections::BTreeMap;

use super::{AttributeTable, SerpResult};
use crate::error::Result;

pub trait SerpFetcher {
    /// Ranked result rows for one query, best rank first.
    fn fetch(&self, query: &str) -> Result<Vec<SerpResult>>;
}

pub trait AttributeFetcher {
    /// Log-normalized attributes, or `None` when the domain is unknown.
    fn fetch(&self, domain: &str) -> Result<Option<Vec<f64>>>;
}

#[derive(Debug, Clone, Default)]
pub struct FileSerpFetcher {
    by_query: BTreeMap<String, Vec<SerpResult>>,
}

impl FileSerpFetcher {
    pub fn new(rows: Vec<SerpResult>) -> Self {
        let mut by_query: BTreeMap<String, Vec<SerpResult>> = BTreeMap::new();
        for r in rows {
            by_query.entry(r.query.clone()).or_default().push(r);
        }
        for v in by_query.values_mut() {
            v.sort_by_key(|r| r.rank);
        }
        Self { by_query }
    }
}

impl SerpFetcher for FileSerpFetcher {
    fn fetch(&self, query: &str) -> Result<Vec<SerpResult>> {
        Ok(self
            .by_query
            .get(&query.trim().to_lowercase())
            .cloned()
            .unwrap_or_default())
    }
}

#[derive(Debug, Clone)]
pub struct FileAttributeFetcher {
    table: AttributeTable,
}

impl FileAttributeFetcher {
    pub fn new(table: AttributeTable) -> Self {
        Self { table }
    }
}

impl AttributeFetcher for FileAttributeFetcher {
    fn fetch(&self, domain: &str) -> Result<Option<Vec<f64>>> {
        Ok(self.table.get(domain).map(<[f64]>::to_vec))
    }
}
