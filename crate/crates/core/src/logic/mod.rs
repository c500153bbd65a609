//! SVM-STL: signal temporal logic over predicate signals `h_j`.
//!
//! Concrete syntax (whitespace-insensitive):
//!
//! ```text
//! h3 > 0.5          h1 <= -4          TRUE
//! !phi   phi & psi   phi | psi   ( phi )
//! G[a,b](phi)       F[a,b](phi)       G[a,b)(phi)  -- half-open, = G[a,b-1]
//! AND{w1,...,wn}(phi1; ...; phin)     OR{w1,...,wn}(phi1; ...; phin)
//! ```

mod ast;
mod parser;
mod semantics;
mod template;

use thiserror::Error;

pub use ast::{Cmp, Formula, Predicate, WeightedFormula};
pub use parser::parse_formula;
pub use semantics::{
    normalized, robustness, robustness_trace, robustness_weighted, satisfaction_trace, satisfies,
    TOP_ROBUSTNESS,
};
pub use template::{instantiate, Param, ParamValue, ParametricTemplate, TemporalKind, Valuation};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    EmptyWindow,
    Semantic,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind:?} error at offset {pos}: {msg}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    /// Byte offset into the source text.
    pub pos: usize,
    pub msg: String,
}

impl ParseError {
    pub(crate) fn syntax(pos: usize, msg: impl Into<String>) -> Self {
        Self {
            kind: ParseErrorKind::Syntax,
            pos,
            msg: msg.into(),
        }
    }

    pub(crate) fn semantic(pos: usize, msg: impl Into<String>) -> Self {
        Self {
            kind: ParseErrorKind::Semantic,
            pos,
            msg: msg.into(),
        }
    }

    pub(crate) fn empty_window(pos: usize, a: usize, b: usize) -> Self {
        Self {
            kind: ParseErrorKind::EmptyWindow,
            pos,
            msg: format!("empty window [{a},{b}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("formula needs samples up to t={required}, signal ends at t={available}")]
    OutOfHorizon { required: usize, available: usize },
    #[error("predicate h{class} referenced but the signal has {dims} dimension(s)")]
    ClassOutOfRange { class: usize, dims: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("unbound template parameter {0:?}")]
    UnboundHole(String),
    #[error("parameter {0:?} bound to a value of the wrong kind")]
    TypeMismatch(String),
    #[error("empty window [{a},{b}]")]
    EmptyWindow { a: usize, b: usize },
    #[error("threshold must be finite")]
    NonFiniteThreshold,
}
