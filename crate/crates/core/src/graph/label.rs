use serde::{Deserialize, Serialize};

use super::Label;
use crate::error::{Error, Result};

/// Principal-component score below which a domain counts as unreliable
/// (the bottom two quintiles of the rating list).
pub const DEFAULT_THRESHOLD: f64 = 0.5162;

/// Which side of the threshold a score exactly at the boundary falls on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// `score < threshold` is unreliable; the threshold itself is reliable.
    #[default]
    StrictLess,
    /// `score <= threshold` is unreliable.
    LessOrEqual,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Binarizer {
    pub threshold: f64,
    #[serde(default)]
    pub boundary: Boundary,
}

impl Default for Binarizer {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            boundary: Boundary::StrictLess,
        }
    }
}

impl Binarizer {
    pub fn apply(&self, score: f64) -> Result<Label> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Input(format!("threshold {} outside [0,1]", self.threshold)));
        }
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::Input(format!("reliability score {score} outside [0,1]")));
        }
        let unreliable = match self.boundary {
            Boundary::StrictLess => score < self.threshold,
            Boundary::LessOrEqual => score <= self.threshold,
        };
        Ok(if unreliable {
            Label::Unreliable
        } else {
            Label::Reliable
        })
    }
}

pub fn binarize_label(score: f64, threshold: f64) -> Result<Label> {
    Binarizer {
        threshold,
        boundary: Boundary::StrictLess,
    }
    .apply(score)
}
