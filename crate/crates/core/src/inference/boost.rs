//! AdaBoost over shallow STL decision trees.
//!
//! ```text
//! D_1(i) = 1 / N
//! for k = 1..K:
//!     f_k    = tree grown under D_k
//!     eps_k  = sum_i D_k(i) [l_i != f_k(s_i)]
//!     alpha_k = 1/2 ln(1/eps_k - 1)
//!     D_{k+1}(i) ~ D_k(i) exp(-alpha_k l_i f_k(s_i))
//! f(s) = sign(sum_k alpha_k f_k(s))
//! ```

use serde::{Deserialize, Serialize};

use super::primitive::{PrimitiveSearch, SearchGrids};
use super::tree::{build_tree, tree_to_formula, StlTree};
use super::{Classifier, InferenceError};
use crate::data::{LabelKind, LabeledDataset, StSignal};
use crate::logic::{EvalError, Formula};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostConfig {
    /// Number of trees `K`.
    pub rounds: usize,
    /// Tree depth `d`.
    pub depth: usize,
    pub grids: SearchGrids,
    /// `eps_k` is clamped into `[epsilon_min, 1 - epsilon_min]`.
    pub epsilon_min: f64,
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self {
            rounds: 3,
            depth: 2,
            grids: SearchGrids::default(),
            epsilon_min: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BdtClassifier {
    pub trees: Vec<StlTree>,
    pub alphas: Vec<f64>,
    /// Weighted training error of each tree under its round's distribution.
    pub errors: Vec<f64>,
}

/// `1/2 ln(1/eps - 1)` after clamping `eps`.
pub fn alpha_for(epsilon: f64, epsilon_min: f64) -> f64 {
    let e = epsilon.clamp(epsilon_min, 1.0 - epsilon_min);
    0.5 * (1.0 / e - 1.0).ln()
}

/// A boosting run with the weight distribution before every round and after
/// the last (`D_1 ..= D_{K+1}`).
#[derive(Debug, Clone, PartialEq)]
pub struct BoostTrace {
    pub classifier: BdtClassifier,
    pub distributions: Vec<Vec<f64>>,
    /// `f_k(s_i)` for every round and training item.
    pub predictions: Vec<Vec<i32>>,
}

pub fn boost(dataset: &LabeledDataset<StSignal>, cfg: &BoostConfig) -> Result<BdtClassifier, InferenceError> {
    Ok(boost_traced(dataset, cfg)?.classifier)
}

pub fn boost_traced(dataset: &LabeledDataset<StSignal>, cfg: &BoostConfig) -> Result<BoostTrace, InferenceError> {
    if cfg.rounds == 0 {
        return Err(InferenceError::Config("at least one boosting round is required".into()));
    }
    if cfg.depth == 0 {
        return Err(InferenceError::Config("tree depth must be >= 1".into()));
    }
    if !(cfg.epsilon_min > 0.0 && cfg.epsilon_min < 0.5) {
        return Err(InferenceError::Config("epsilon_min must lie in (0, 0.5)".into()));
    }
    if dataset.kind() != LabelKind::Binary {
        return Err(InferenceError::Config("boosting needs a binary dataset".into()));
    }
    if dataset.is_degenerate() {
        return Err(InferenceError::Degenerate);
    }
    let signals: Vec<StSignal> = dataset.items().iter().map(|(s, _)| s.clone()).collect();
    let labels = dataset.labels();
    let search = PrimitiveSearch::new(&signals, &cfg.grids)?;
    let n = signals.len();

    let mut d = vec![1.0 / n as f64; n];
    let mut distributions = vec![d.clone()];
    let mut predictions = Vec::with_capacity(cfg.rounds);
    let mut out = BdtClassifier {
        trees: Vec::new(),
        alphas: Vec::new(),
        errors: Vec::new(),
    };
    for _ in 0..cfg.rounds {
        let tree = build_tree(&search, &labels, &d, cfg.depth);
        let f: Vec<i32> = (0..n).map(|i| tree.classify_indexed(&search, i)).collect();
        let eps: f64 = (0..n).filter(|&i| f[i] != labels[i]).map(|i| d[i]).sum();
        let alpha = alpha_for(eps, cfg.epsilon_min);
        for i in 0..n {
            d[i] *= (-alpha * labels[i] as f64 * f[i] as f64).exp();
        }
        let total: f64 = d.iter().sum();
        d.iter_mut().for_each(|w| *w /= total);
        distributions.push(d.clone());
        predictions.push(f);
        out.trees.push(tree);
        out.alphas.push(alpha);
        out.errors.push(eps);
    }
    Ok(BoostTrace {
        classifier: out,
        distributions,
        predictions,
    })
}

impl BdtClassifier {
    /// `sum_k alpha_k f_k(s)`
    pub fn score(&self, s: &StSignal) -> Result<f64, EvalError> {
        let mut sum = 0.0;
        for (t, a) in self.trees.iter().zip(&self.alphas) {
            sum += a * t.classify(s)? as f64;
        }
        Ok(sum)
    }

    /// Sign of the weighted vote; a zero vote classifies as `+1`.
    pub fn classify(&self, s: &StSignal) -> Result<i32, EvalError> {
        Ok(if self.score(s)? >= 0.0 { 1 } else { -1 })
    }

    pub fn horizon(&self) -> usize {
        self.trees.iter().map(StlTree::horizon).max().unwrap_or(0)
    }

    pub fn formulas(&self) -> Vec<Formula> {
        self.trees.iter().map(tree_to_formula).collect()
    }
}

impl Classifier for BdtClassifier {
    fn predict(&self, s: &StSignal) -> Result<i32, EvalError> {
        self.classify(s)
    }
}

/// The ensemble as a weighted conjunction `AND{alpha_1..}(phi_1; ...)` of the
/// tree formulas. Trees with a non-positive weight are left out. This export
/// is for reading; its satisfaction can differ from the weighted vote.
pub fn bdt_to_weighted_formula(bdt: &BdtClassifier) -> Result<Formula, InferenceError> {
    let (weights, children): (Vec<f64>, Vec<Formula>) = bdt
        .trees
        .iter()
        .zip(&bdt.alphas)
        .filter(|(_, a)| **a > 0.0)
        .map(|(t, a)| (*a, tree_to_formula(t)))
        .unzip();
    if weights.is_empty() {
        return Err(InferenceError::NoPositiveWeight);
    }
    Ok(Formula::WAnd { weights, children })
}
