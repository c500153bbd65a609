use thiserror::Error;

use crate::clustering::ClusterError;
use crate::data::DataError;
use crate::features::FeatureError;
use crate::inference::InferenceError;
use crate::logic::{EvalError, ParseError, TemplateError};
use crate::optim::PsoError;
use crate::predicates::PredicateError;
use crate::rdsim::SimError;
use crate::synthesis::SynthesisError;

/// Umbrella error for callers that drive several stages of the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Pso(#[from] PsoError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Predicate(#[from] PredicateError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
