use std::fmt;

/// Exit code 1 for problems the user can fix, 2 for everything else.
#[derive(Debug)]
pub enum CliError {
    User(String),
    Internal(String),
}

impl CliError {
    pub fn user(msg: impl Into<String>) -> Self {
        CliError::User(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        CliError::Internal(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::User(_) => 1,
            CliError::Internal(_) => 2,
        }
    }

    /// Names the command that produces a missing artifact.
    pub fn missing(path: &std::path::Path, producer: &str) -> Self {
        CliError::User(format!(
            "missing {}; run `svmstl {producer}` first",
            path.display()
        ))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::User(m) => write!(f, "error: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

/// Library failures surface as internal errors unless a stage maps them.
impl From<svmstl::Error> for CliError {
    fn from(e: svmstl::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

macro_rules! internal_from {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Internal(e.to_string())
            }
        })*
    };
}

internal_from!(
    std::io::Error,
    svmstl::data::DataError,
    svmstl::features::FeatureError,
    svmstl::clustering::ClusterError,
    svmstl::predicates::PredicateError,
    svmstl::inference::InferenceError,
    svmstl::rdsim::SimError,
    svmstl::synthesis::SynthesisError,
    svmstl::logic::EvalError
);
