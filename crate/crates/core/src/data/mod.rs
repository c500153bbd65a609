//! Domain data model: images, spatio-temporal trajectories, signals and
//! labeled datasets, plus their on-disk formats.

mod dataset;
mod image;
pub mod io;
mod signal;

use std::path::PathBuf;

use thiserror::Error;

pub use dataset::{stratified_kfold, Fold, LabelKind, LabeledDataset};
pub use image::{Image, StTrajectory};
pub use signal::StSignal;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("trajectory has no frames")]
    EmptyTrajectory,
    #[error("missing frame index {index} in {dir}")]
    FrameGap { dir: PathBuf, index: usize },
    #[error("frame {frame} has shape {found:?}, expected {expected:?} (width, height, channels)")]
    ShapeMismatch {
        frame: usize,
        expected: (usize, usize, usize),
        found: (usize, usize, usize),
    },
    #[error("signal rows have {found} columns, expected {expected} (row {row})")]
    RaggedSignal {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("image codec error on {path}: {msg}")]
    Codec { path: PathBuf, msg: String },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("label {label} is outside the declared label set {kind:?}")]
    LabelOutOfSet { label: i32, kind: LabelKind },
    #[error("class {label} has {count} members, fewer than the {k} folds requested")]
    ClassTooSmall { label: i32, count: usize, k: usize },
    #[error("k-fold requires k >= 2, got {0}")]
    InvalidFoldCount(usize),
}

impl DataError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DataError::Io {
            path: path.into(),
            source,
        }
    }
}
