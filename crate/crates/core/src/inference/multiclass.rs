//! One-vs-rest BDT models over trajectory classes and K-fold evaluation.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::boost::{bdt_to_weighted_formula, boost, BdtClassifier, BoostConfig};
use super::tree::tree_to_formula;
use super::{mcr, InferenceError};
use crate::data::{LabelKind, LabeledDataset, StSignal};

/// The two-class problem "class `j` versus the rest".
pub fn binary_view(dataset: &LabeledDataset<StSignal>, class: i32) -> Result<LabeledDataset<StSignal>, InferenceError> {
    let items = dataset
        .items()
        .iter()
        .map(|(s, l)| (s.clone(), if *l == class { 1 } else { -1 }))
        .collect();
    Ok(LabeledDataset::new(items, LabelKind::Binary)?)
}

fn class_count(dataset: &LabeledDataset<StSignal>) -> Result<usize, InferenceError> {
    match dataset.kind() {
        LabelKind::TrajectoryClass(n) | LabelKind::ImageClass(n) if n >= 1 => Ok(n),
        _ => Err(InferenceError::Config("one-vs-rest learning needs a multi-class dataset".into())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassModel {
    pub class: usize,
    pub bdt: BdtClassifier,
    /// Per-tree formulas in the logic grammar.
    pub formulas: Vec<String>,
    /// Weighted conjunction of the trees, absent when no tree has `alpha > 0`.
    pub weighted: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MulticlassModel {
    pub config: BoostConfig,
    pub seed: u64,
    pub classes: Vec<ClassModel>,
}

fn learn_class(dataset: &LabeledDataset<StSignal>, class: usize, cfg: &BoostConfig) -> Result<ClassModel, InferenceError> {
    let bdt = boost(&binary_view(dataset, class as i32)?, cfg)?;
    let formulas = bdt.trees.iter().map(|t| tree_to_formula(t).to_string()).collect();
    let weighted = bdt_to_weighted_formula(&bdt).ok().map(|f| f.to_string());
    Ok(ClassModel {
        class,
        bdt,
        formulas,
        weighted,
    })
}

/// One BDT per class `1..=n_S`, each separating its class from the rest.
pub fn learn_one_vs_rest(
    dataset: &LabeledDataset<StSignal>,
    cfg: &BoostConfig,
    seed: u64,
) -> Result<MulticlassModel, InferenceError> {
    let n = class_count(dataset)?;
    let classes = (1..=n)
        .into_par_iter()
        .map(|j| learn_class(dataset, j, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MulticlassModel {
        config: cfg.clone(),
        seed,
        classes,
    })
}

/// Accuracies (1 - MCR) of one class's BDT on every fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: usize,
    pub train: Vec<f64>,
    pub test: Vec<f64>,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl ClassMetrics {
    pub fn train_summary(&self) -> (f64, f64) {
        mean_std(&self.train)
    }

    pub fn test_summary(&self) -> (f64, f64) {
        mean_std(&self.test)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: usize,
    pub seed: u64,
    pub classes: Vec<ClassMetrics>,
}

/// Stratified K-fold evaluation of the one-vs-rest models. Folds are drawn
/// on the multi-class labels so every class appears in every training split.
pub fn cross_validate(
    dataset: &LabeledDataset<StSignal>,
    cfg: &BoostConfig,
    folds: usize,
    seed: u64,
) -> Result<CvReport, InferenceError> {
    let n = class_count(dataset)?;
    let splits = dataset.kfold(folds, seed)?;
    let mut classes: Vec<ClassMetrics> = (1..=n)
        .map(|class| ClassMetrics {
            class,
            train: Vec::new(),
            test: Vec::new(),
        })
        .collect();
    for fold in &splits {
        let train = dataset.subset(&fold.train)?;
        let test = dataset.subset(&fold.test)?;
        let accs = (1..=n)
            .into_par_iter()
            .map(|j| -> Result<(f64, f64), InferenceError> {
                let bdt = boost(&binary_view(&train, j as i32)?, cfg)?;
                let tr = 1.0 - mcr(&bdt, &binary_view(&train, j as i32)?);
                let te = 1.0 - mcr(&bdt, &binary_view(&test, j as i32)?);
                Ok((tr, te))
            })
            .collect::<Result<Vec<_>, _>>()?;
        for (m, (tr, te)) in classes.iter_mut().zip(accs) {
            m.train.push(tr);
            m.test.push(te);
        }
    }
    Ok(CvReport { folds, seed, classes })
}

/// Text table with average accuracy and standard deviation per class.
pub fn metrics_table(report: &CvReport) -> String {
    let mut out = format!(
        "# {}-fold cross-validation, seed {}\nclass | avg accuracy (%) training | avg accuracy (%) testing | std dev training | std dev testing\n",
        report.folds, report.seed
    );
    for m in &report.classes {
        let (tr, trs) = m.train_summary();
        let (te, tes) = m.test_summary();
        out.push_str(&format!(
            "{} | {:.1} | {:.1} | {:.2} | {:.2}\n",
            m.class,
            100.0 * tr,
            100.0 * te,
            100.0 * trs,
            100.0 * tes
        ));
    }
    out
}

pub fn save_multiclass(model: &MulticlassModel, path: &Path) -> Result<(), InferenceError> {
    let file_err = |msg: String| InferenceError::File {
        path: path.to_path_buf(),
        msg,
    };
    let text = serde_json::to_string_pretty(model).map_err(|e| file_err(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| file_err(e.to_string()))
}

pub fn load_multiclass(path: &Path) -> Result<MulticlassModel, InferenceError> {
    let file_err = |msg: String| InferenceError::File {
        path: path.to_path_buf(),
        msg,
    };
    let text = fs::read_to_string(path).map_err(|e| file_err(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| file_err(e.to_string()))
}
