//! Formula inference from labeled ST signals: exhaustive primitive search,
//! shallow STL decision trees and their AdaBoost ensembles.

mod boost;
mod multiclass;
pub(crate) mod primitive;
mod tree;

use std::path::PathBuf;

use thiserror::Error;

use crate::data::{DataError, LabeledDataset, StSignal};
use crate::logic::{satisfies, EvalError, Formula};

pub use boost::{alpha_for, bdt_to_weighted_formula, boost, boost_traced, BdtClassifier, BoostConfig, BoostTrace};
pub use multiclass::{
    binary_view, cross_validate, learn_one_vs_rest, load_multiclass, metrics_table, save_multiclass, ClassMetrics,
    ClassModel, CvReport, MulticlassModel,
};
pub use primitive::{optimize_primitive, PrimitiveChoice, PrimitiveSearch, SearchGrids, ThresholdGrid, WindowGrid};
pub use tree::{build_tree, tree_to_formula, StlTree};

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("signals differ in horizon or dimension")]
    MixedShapes,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("binary dataset holds a single label")]
    Degenerate,
    #[error("ensemble has no tree with positive weight")]
    NoPositiveWeight,
    #[error("{path}: {msg}")]
    File { path: PathBuf, msg: String },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Anything that labels a signal `+1` or `-1`.
pub trait Classifier {
    fn predict(&self, s: &StSignal) -> Result<i32, EvalError>;
}

impl Classifier for StlTree {
    fn predict(&self, s: &StSignal) -> Result<i32, EvalError> {
        self.classify(s)
    }
}

/// `+1` iff the signal satisfies the formula at time 0.
impl Classifier for Formula {
    fn predict(&self, s: &StSignal) -> Result<i32, EvalError> {
        Ok(if satisfies(s, self, 0)? { 1 } else { -1 })
    }
}

/// Flips the label of the wrapped classifier.
pub struct Negated<'a, C: ?Sized>(pub &'a C);

impl<C: Classifier + ?Sized> Classifier for Negated<'_, C> {
    fn predict(&self, s: &StSignal) -> Result<i32, EvalError> {
        Ok(-self.0.predict(s)?)
    }
}

/// Fraction of items whose predicted label differs from the true one. An
/// item the classifier cannot evaluate (horizon or dimension violation)
/// counts as misclassified.
pub fn mcr<C: Classifier + ?Sized>(classifier: &C, dataset: &LabeledDataset<StSignal>) -> f64 {
    let wrong = dataset
        .items()
        .iter()
        .enumerate()
        .filter(|(i, (s, l))| match classifier.predict(s) {
            Ok(p) => p != *l,
            Err(e) => {
                log::warn!("item {i} counted as misclassified: {e}");
                true
            }
        })
        .count();
    wrong as f64 / dataset.len() as f64
}
