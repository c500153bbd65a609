//! Predicate functions `h_j`: one-vs-rest linear SVMs over image features,
//! evaluated as signed distances to the decision boundary, and the operator
//! mapping a trajectory to its signal `s[k][j] = h_j(S[k])`.

mod svm;

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{DataError, Image, LabelKind, LabeledDataset, StSignal, StTrajectory};
use crate::features::{FeatureError, FeatureExtractor, FeatureTable, FeatureVector};

pub use svm::{train_svm_points, LinearSvm, Standardizer, SvmConfig, TrainingStats};

#[derive(Debug, Error)]
pub enum PredicateError {
    #[error("class {class} outside 1..={n}")]
    UnknownClass { class: usize, n: usize },
    #[error("degenerate training data: {0}")]
    Degenerate(String),
    #[error("non-finite feature value")]
    NonFinite,
    #[error("invalid SVM configuration: {0}")]
    Config(String),
    #[error("features come from extractor {found:?}, model expects {expected:?}")]
    ExtractorMismatch { expected: String, found: String },
    #[error("feature vector has {found} values, model expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("predicate suite does not cover classes 1..=n contiguously")]
    NonContiguousSuite,
    #[error("{path}: {msg}")]
    File { path: String, msg: String },
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Relabels an image-class dataset as `+1` for class `j`, `-1` otherwise.
/// Item order is preserved; a split without positives is degenerate but valid.
pub fn one_vs_rest_split<T: Clone>(
    dataset: &LabeledDataset<T>,
    j: usize,
) -> Result<LabeledDataset<T>, PredicateError> {
    let n = match dataset.kind() {
        LabelKind::ImageClass(n) | LabelKind::TrajectoryClass(n) => n,
        LabelKind::Binary => return Err(PredicateError::UnknownClass { class: j, n: 0 }),
    };
    if j == 0 || j > n {
        return Err(PredicateError::UnknownClass { class: j, n });
    }
    let items = dataset
        .items()
        .iter()
        .map(|(x, l)| (x.clone(), if *l as usize == j { 1 } else { -1 }))
        .collect();
    Ok(LabeledDataset::new(items, LabelKind::Binary)?)
}

/// Trains on a binary dataset of feature vectors from a single extractor.
pub fn train_svm(binary: &LabeledDataset<FeatureVector>, cfg: &SvmConfig) -> Result<LinearSvm, PredicateError> {
    crate::features::common_extractor(&binary.items().iter().map(|(f, _)| f.clone()).collect::<Vec<_>>())?;
    let points: Vec<Vec<f64>> = binary.items().iter().map(|(f, _)| f.values().to_vec()).collect();
    train_svm_points(&points, &binary.labels(), cfg)
}

/// `h_j` for one spatial class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredicateModel {
    /// 1-based class index `j`.
    pub class: usize,
    pub extractor_id: String,
    pub svm: LinearSvm,
}

impl PredicateModel {
    pub fn value(&self, features: &FeatureVector) -> Result<f64, PredicateError> {
        if features.extractor_id() != self.extractor_id {
            return Err(PredicateError::ExtractorMismatch {
                expected: self.extractor_id.clone(),
                found: features.extractor_id().to_string(),
            });
        }
        if features.dim() != self.svm.weights.len() {
            return Err(PredicateError::DimensionMismatch {
                expected: self.svm.weights.len(),
                found: features.dim(),
            });
        }
        Ok(self.svm.signed_distance(features.values()))
    }
}

/// `h_j(I) = (w_j . f(I) + b_j) / ||w_j||`
pub fn predicate_value(
    model: &PredicateModel,
    image: &Image,
    extractor: &dyn FeatureExtractor,
) -> Result<f64, PredicateError> {
    check_extractor(&model.extractor_id, extractor)?;
    model.value(&extractor.extract(image)?)
}

fn check_extractor(expected: &str, extractor: &dyn FeatureExtractor) -> Result<(), PredicateError> {
    if extractor.id() != expected {
        return Err(PredicateError::ExtractorMismatch {
            expected: expected.to_string(),
            found: extractor.id().to_string(),
        });
    }
    Ok(())
}

/// Predicate models for classes `1..=n_I`, in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredicateSuite {
    pub extractor_id: String,
    pub svm: SvmConfig,
    models: Vec<PredicateModel>,
}

impl PredicateSuite {
    pub fn new(extractor_id: impl Into<String>, svm: SvmConfig, models: Vec<PredicateModel>) -> Result<Self, PredicateError> {
        let extractor_id = extractor_id.into();
        if models.is_empty() || models.iter().enumerate().any(|(i, m)| m.class != i + 1) {
            return Err(PredicateError::NonContiguousSuite);
        }
        if let Some(m) = models.iter().find(|m| m.extractor_id != extractor_id) {
            return Err(PredicateError::ExtractorMismatch {
                expected: extractor_id,
                found: m.extractor_id.clone(),
            });
        }
        Ok(Self {
            extractor_id,
            svm,
            models,
        })
    }

    pub fn models(&self) -> &[PredicateModel] {
        &self.models
    }

    /// `n_I`
    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    /// `(h_1(f), ..., h_n(f))`
    pub fn values(&self, features: &FeatureVector) -> Result<Vec<f64>, PredicateError> {
        self.models.iter().map(|m| m.value(features)).collect()
    }

    /// Signal of a trajectory given the features of its frames in time order.
    pub fn signal_from_features(&self, frames: &[&FeatureVector]) -> Result<StSignal, PredicateError> {
        let rows = frames.iter().map(|f| self.values(f)).collect::<Result<Vec<_>, _>>()?;
        Ok(StSignal::new(rows)?)
    }

    /// Signal of trajectory `id` from a feature table.
    pub fn signal_from_table(&self, table: &FeatureTable, id: &str) -> Result<StSignal, PredicateError> {
        self.signal_from_features(&table.trajectory(id))
    }
}

/// Learns one predicate per class of an image-class dataset; the binary
/// problems are trained in parallel.
pub fn learn_predicates(
    images: &LabeledDataset<FeatureVector>,
    cfg: &SvmConfig,
) -> Result<PredicateSuite, PredicateError> {
    let n = match images.kind() {
        LabelKind::ImageClass(n) => n,
        _ => return Err(PredicateError::UnknownClass { class: 0, n: 0 }),
    };
    let extractor_id = crate::features::common_extractor(
        &images.items().iter().map(|(f, _)| f.clone()).collect::<Vec<_>>(),
    )?
    .to_string();
    let models = (1..=n)
        .into_par_iter()
        .map(|j| {
            let binary = one_vs_rest_split(images, j)?;
            if binary.is_degenerate() {
                return Err(PredicateError::Degenerate(format!("class {j} has no members")));
            }
            Ok(PredicateModel {
                class: j,
                extractor_id: extractor_id.clone(),
                svm: train_svm(&binary, cfg)?,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    PredicateSuite::new(extractor_id, cfg.clone(), models)
}

/// The operator `h`: `s[k][j] = h_j(S[k])`, shape `(T+1) x n_I`.
pub fn trajectory_to_signal(
    trajectory: &StTrajectory,
    suite: &PredicateSuite,
    extractor: &dyn FeatureExtractor,
) -> Result<StSignal, PredicateError> {
    check_extractor(&suite.extractor_id, extractor)?;
    let features = trajectory
        .frames()
        .par_iter()
        .map(|frame| extractor.extract(frame))
        .collect::<Result<Vec<_>, _>>()?;
    suite.signal_from_features(&features.iter().collect::<Vec<_>>())
}

pub fn save_suite(suite: &PredicateSuite, path: &Path) -> Result<(), PredicateError> {
    let text = serde_json::to_string_pretty(suite).expect("suite serializes");
    fs::write(path, text + "\n").map_err(|e| PredicateError::File {
        path: path.display().to_string(),
        msg: e.to_string(),
    })
}

pub fn load_suite(path: &Path) -> Result<PredicateSuite, PredicateError> {
    let file_err = |msg: String| PredicateError::File {
        path: path.display().to_string(),
        msg,
    };
    let text = fs::read_to_string(path).map_err(|e| file_err(e.to_string()))?;
    let suite: PredicateSuite = serde_json::from_str(&text).map_err(|e| file_err(e.to_string()))?;
    PredicateSuite::new(suite.extractor_id, suite.svm, suite.models)
}
