use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Label, Split};
use crate::error::{Error, Result};

/// Smallest class size accepted by [`stratified_split`].
pub const MIN_PER_CLASS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.8,
            val: 0.1,
            test: 0.1,
        }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::Config(format!("split ratios {parts:?} outside [0,1]")));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("split ratios {parts:?} do not sum to 1")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

impl SplitAssignment {
    pub fn tag_of(&self) -> BTreeMap<&str, Split> {
        let mut m = BTreeMap::new();
        for (ids, tag) in [(&self.train, Split::Train), (&self.val, Split::Val), (&self.test, Split::Test)] {
            for id in ids {
                m.insert(id.as_str(), tag);
            }
        }
        m
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Label-stratified split. Within each class the ids are put in canonical
/// order, shuffled with a seeded generator, and cut at rounded per-class
/// counts; the test split takes the remainder.
pub fn stratified_split(
    labeled: &[(String, Label)],
    ratios: SplitRatios,
    seed: u64,
) -> Result<SplitAssignment> {
    ratios.validate()?;
    let mut by_class: BTreeMap<Label, Vec<&str>> = BTreeMap::new();
    for (id, label) in labeled {
        by_class.entry(*label).or_default().push(id.as_str());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SplitAssignment::default();
    for (label, mut ids) in by_class {
        if ids.len() < MIN_PER_CLASS {
            return Err(Error::Config(format!(
                "class {} has {} members, need at least {MIN_PER_CLASS}",
                label.as_str(),
                ids.len()
            )));
        }
        ids.sort_unstable();
        let before = ids.len();
        ids.dedup();
        if ids.len() != before {
            return Err(Error::Data("duplicate ids in labeled set".into()));
        }
        ids.shuffle(&mut rng);
        let n = ids.len();
        let n_train = ((n as f64) * ratios.train).round() as usize;
        let n_val = (((n as f64) * ratios.val).round() as usize).min(n - n_train);
        out.train.extend(ids[..n_train].iter().map(|s| s.to_string()));
        out.val.extend(ids[n_train..n_train + n_val].iter().map(|s| s.to_string()));
        out.test.extend(ids[n_train + n_val..].iter().map(|s| s.to_string()));
    }
    Ok(out)
}
