//! Learning, monitoring and synthesis of spatio-temporal logic specifications
//! over sequences of images.
//!
//! The pipeline turns image sequences into SVM-STL formulas:
//!
//! 1. frames are mapped to feature vectors ([`features`]),
//! 2. feature vectors are clustered into spatial classes with a PSO-optimized
//!    k-means criterion ([`clustering`], [`optim`]),
//! 3. one-vs-rest linear SVMs over those classes define the predicate functions
//!    `h_j`, and a trajectory becomes a vector-valued signal ([`predicates`]),
//! 4. signals are clustered with DTW and a boosted ensemble of shallow STL
//!    decision trees learns a formula per class ([`inference`]).
//!
//! [`logic`] provides the formula language with qualitative and quantitative
//! (robustness) semantics, [`synthesis`] searches system parameters that
//! maximize robustness, and [`rdsim`] is the reaction-diffusion benchmark
//! system that generates trajectories.

pub mod clustering;
pub mod data;
pub mod error;
pub mod features;
pub mod inference;
pub mod logic;
pub mod optim;
pub mod predicates;
pub mod rdsim;
pub mod synthesis;

pub use error::{Error, Result};
