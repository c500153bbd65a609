//! Image feature extraction `f: R^{L x W x C} -> R^m`.
//!
//! Two sources are supported: a deterministic handcrafted descriptor
//! ([`BuiltinDescriptor`]) and externally computed tables in the interchange
//! format ([`FeatureTable`]), e.g. activations of a pretrained CNN.

mod builtin;
mod table;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{DataError, Image};

pub use builtin::{BuiltinConfig, BuiltinDescriptor};
pub use table::{load_feature_table, parse_feature_table, save_feature_table, FeatureTable};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("{path}:{line}: row has {found} values, header declares m={expected}")]
    Dimension {
        path: PathBuf,
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("{path}:{line}: duplicate key ({trajectory}, {time})")]
    DuplicateKey {
        path: PathBuf,
        line: usize,
        trajectory: String,
        time: usize,
    },
    #[error("feature vectors from extractor {found:?} mixed with {expected:?}")]
    ExtractorMismatch { expected: String, found: String },
    #[error("extractor expects {expected} channel(s), image has {found}")]
    ChannelMismatch { expected: usize, found: usize },
    #[error("invalid extractor configuration: {0}")]
    Config(String),
    #[error("no features for ({trajectory}, {time})")]
    MissingKey { trajectory: String, time: usize },
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    values: Vec<f64>,
    extractor_id: String,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>, extractor_id: impl Into<String>) -> Result<Self, FeatureError> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(DataError::NonFinite("feature vector".into()).into());
        }
        Ok(Self {
            values,
            extractor_id: extractor_id.into(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn extractor_id(&self) -> &str {
        &self.extractor_id
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Checks that every vector comes from one extractor and returns its id.
pub fn common_extractor(vectors: &[FeatureVector]) -> Result<&str, FeatureError> {
    let Some(first) = vectors.first() else {
        return Err(FeatureError::Config("no feature vectors".into()));
    };
    for v in vectors {
        if v.extractor_id != first.extractor_id {
            return Err(FeatureError::ExtractorMismatch {
                expected: first.extractor_id.clone(),
                found: v.extractor_id.clone(),
            });
        }
    }
    Ok(&first.extractor_id)
}

/// A feature extractor usable on in-memory images.
pub trait FeatureExtractor: Sync {
    /// Identifies the extractor and its configuration.
    fn id(&self) -> &str;
    fn dim(&self) -> usize;
    fn extract(&self, image: &Image) -> Result<FeatureVector, FeatureError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExtractorConfig {
    BuiltinDescriptor(BuiltinConfig),
    ExternalTable { table_path: PathBuf },
}

impl Default for ExtractorConfig {
    fn default() -> Self {
        ExtractorConfig::BuiltinDescriptor(BuiltinConfig::default())
    }
}

/// Extracts features with the configured builtin descriptor.
pub fn extract_features(image: &Image, cfg: &BuiltinConfig) -> Result<FeatureVector, FeatureError> {
    BuiltinDescriptor::new(cfg.clone())?.extract(image)
}
