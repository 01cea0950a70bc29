//! Per-game feature vectors: season-to-date game statistics (`F1`..`F10`),
//! weekly-tweet unigrams and tweet-volume rate features.

mod context;
mod rate;
mod spec;
mod stats;
mod unigram;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::CorpusError;

pub use context::{FeatureContext, GameFeatures, Provenance};
pub use rate::{rate_p, rate_s, RateParams, RateScale, VolumeBaseline};
pub use spec::{
    enumerate_feature_sets, statistical_feature_sets, twitter_feature_sets, Atom, FeatureSetSpec,
    CCA_COMPONENTS, RATE_P_THETAS,
};
pub use stats::game_stat_features;
pub use unigram::{unigram_features, UnigramCounter, UNIGRAM_SUPPORT};

/// Prefixes of the statistical features, in set order.
pub const STAT_PREFIXES: [&str; 10] = ["F1.", "F2.", "F3.", "F4.", "F5.", "F6.", "F7.", "F8.", "F9.", "F10."];

pub fn is_stat_feature(name: &str) -> bool {
    STAT_PREFIXES.iter().any(|p| name.starts_with(p))
}

pub fn is_unigram_feature(name: &str) -> bool {
    name.starts_with("uni.")
}

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("feature set: {0}")]
    Spec(String),
    #[error("future information: {0}")]
    Leakage(String),
    #[error("game {0} has no final score")]
    MissingResult(String),
    #[error("feature {name} is not finite ({value})")]
    NonFinite { name: String, value: f64 },
    #[error("duplicate feature {0}")]
    Duplicate(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// Named sparse feature values for one game. Values are finite and
/// identifiers unique; iteration is in identifier order.
#[derive(Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(BTreeMap<String, f64>);

impl FeatureVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: f64) -> Result<(), FeatureError> {
        let name = name.into();
        if !value.is_finite() {
            return Err(FeatureError::NonFinite { name, value });
        }
        if self.0.contains_key(&name) {
            return Err(FeatureError::Duplicate(name));
        }
        self.0.insert(name, value);
        Ok(())
    }

    /// Adds every feature of `other`; identifiers must not collide.
    pub fn merge(&mut self, other: FeatureVector) -> Result<(), FeatureError> {
        for (name, value) in other.0 {
            self.insert(name, value)?;
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> + '_ {
        self.0.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> + '_ {
        self.0.keys().map(String::as_str)
    }

    /// The features whose identifiers satisfy `keep`.
    pub fn filter(&self, mut keep: impl FnMut(&str) -> bool) -> FeatureVector {
        FeatureVector(self.0.iter().filter(|(k, _)| keep(k)).map(|(k, &v)| (k.clone(), v)).collect())
    }
}

impl fmt::Debug for FeatureVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.0.iter()).finish()
    }
}

impl TryFrom<Vec<(String, f64)>> for FeatureVector {
    type Error = FeatureError;

    fn try_from(pairs: Vec<(String, f64)>) -> Result<Self, Self::Error> {
        let mut fv = FeatureVector::new();
        for (k, v) in pairs {
            fv.insert(k, v)?;
        }
        Ok(fv)
    }
}

/// One line of a feature dump: the game and its task-agnostic features.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub game_id: String,
    pub features: FeatureVector,
}
