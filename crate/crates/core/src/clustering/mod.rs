//! k-means style clustering of images (squared feature distance) and of
//! trajectory signals (DTW on dimension-major flattened signals).
//!
//! The criterion is `f_crit = sum_j sum_{x in c_j} d(x, mu_j)` where `c_j` is
//! the set of items whose nearest center is `mu_j` (lowest index on ties).

mod dtw;
pub mod io;
mod kmeans;
mod metrics;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::StSignal;
use crate::optim::PsoError;

pub use dtw::{dtw_distance, dtw_distance_with, DtwConfig, DtwCost};
pub use kmeans::{
    cluster_images_pso, cluster_points_pso, cluster_trajectories, lloyd_kmeans, lloyd_kmeans_from,
    ClusterResult, LloydResult,
};
pub use metrics::{adjusted_rand_index, silhouette};

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("nothing to cluster")]
    Empty,
    #[error("cluster count must be >= 1")]
    ZeroClusters,
    #[error("{distinct} distinct item(s) cannot fill {n} clusters")]
    TooFewDistinct { distinct: usize, n: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("signals have mixed shapes")]
    MixedShapes,
    #[error("DTW of an empty sequence")]
    EmptySequence,
    #[error("relabel map sends cluster {0} to label 0")]
    BadRelabel(usize),
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Pso(#[from] PsoError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DistanceKind {
    /// `||x - mu||^2`
    Squared,
    Dtw(DtwConfig),
}

impl DistanceKind {
    pub fn distance(&self, x: &[f64], center: &[f64]) -> f64 {
        match self {
            DistanceKind::Squared => x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum(),
            DistanceKind::Dtw(cfg) => dtw::dtw_unchecked(x, center, cfg),
        }
    }
}

/// 1-based cluster label per item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub labels: Vec<usize>,
}

impl Assignment {
    /// Item count per cluster `1..=n`.
    pub fn sizes(&self, n: usize) -> Vec<usize> {
        let mut out = vec![0; n];
        for &l in &self.labels {
            out[l - 1] += 1;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub centers: Vec<Vec<f64>>,
    pub distance: DistanceKind,
    pub criterion: f64,
}

impl ClusterModel {
    pub fn n(&self) -> usize {
        self.centers.len()
    }

    pub fn dim(&self) -> usize {
        self.centers.first().map_or(0, Vec::len)
    }

    pub fn assign(&self, items: &[Vec<f64>]) -> Result<Assignment, ClusterError> {
        assign(items, &self.centers, &self.distance)
    }
}

fn check_dims(items: &[Vec<f64>], centers: &[Vec<f64>], kind: &DistanceKind) -> Result<(), ClusterError> {
    if items.is_empty() || centers.is_empty() {
        return Err(ClusterError::Empty);
    }
    let dim = items[0].len();
    for v in items.iter().chain(centers) {
        if v.len() != dim {
            return Err(ClusterError::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
    }
    if dim == 0 && matches!(kind, DistanceKind::Dtw(_)) {
        return Err(ClusterError::EmptySequence);
    }
    Ok(())
}

/// Index and distance of the nearest center (lowest index on ties).
pub(crate) fn nearest(x: &[f64], centers: &[Vec<f64>], kind: &DistanceKind) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.iter().enumerate() {
        let d = kind.distance(x, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

pub fn assign(items: &[Vec<f64>], centers: &[Vec<f64>], kind: &DistanceKind) -> Result<Assignment, ClusterError> {
    check_dims(items, centers, kind)?;
    Ok(Assignment {
        labels: items.iter().map(|x| nearest(x, centers, kind).0 + 1).collect(),
    })
}

pub fn criterion(items: &[Vec<f64>], centers: &[Vec<f64>], kind: &DistanceKind) -> Result<f64, ClusterError> {
    check_dims(items, centers, kind)?;
    Ok(criterion_unchecked(items, centers, kind))
}

pub(crate) fn criterion_unchecked(items: &[Vec<f64>], centers: &[Vec<f64>], kind: &DistanceKind) -> f64 {
    items.iter().map(|x| nearest(x, centers, kind).1).sum()
}

/// All of `h_1` over time, then `h_2`, and so on.
pub fn flatten_signal(s: &StSignal) -> Vec<f64> {
    (0..s.dims()).flat_map(|d| s.column(d)).collect()
}

/// Applies a merge/drop map to 1-based labels. Clusters missing from `map`
/// keep their label; `None` drops the item.
pub fn relabel(
    labels: &[usize],
    map: &std::collections::BTreeMap<usize, Option<usize>>,
) -> Result<Vec<Option<usize>>, ClusterError> {
    if let Some((&from, _)) = map.iter().find(|(_, to)| **to == Some(0)) {
        return Err(ClusterError::BadRelabel(from));
    }
    Ok(labels
        .iter()
        .map(|l| match map.get(l) {
            Some(to) => *to,
            None => Some(*l),
        })
        .collect())
}
