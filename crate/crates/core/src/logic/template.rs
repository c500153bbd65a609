use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ast::{Cmp, Formula};
use super::TemplateError;

/// Outer operator of a first-order primitive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TemporalKind {
    Eventually,
    Always,
}

/// A template slot: either fixed or a named hole bound by a valuation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Param<T> {
    Fixed(T),
    Hole(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ParamValue {
    Int(usize),
    Real(f64),
    Cmp(Cmp),
}

pub type Valuation = BTreeMap<String, ParamValue>;

/// Parametric primitive `F_[a,b](h_j ~ r)` or `G_[a,b](h_j ~ r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParametricTemplate {
    pub kind: TemporalKind,
    pub class: Param<usize>,
    pub cmp: Param<Cmp>,
    pub a: Param<usize>,
    pub b: Param<usize>,
    pub threshold: Param<f64>,
}

impl ParametricTemplate {
    /// Every slot a hole, named `j`, `cmp`, `a`, `b`, `r`.
    pub fn free(kind: TemporalKind) -> Self {
        Self {
            kind,
            class: Param::Hole("j".into()),
            cmp: Param::Hole("cmp".into()),
            a: Param::Hole("a".into()),
            b: Param::Hole("b".into()),
            threshold: Param::Hole("r".into()),
        }
    }

    /// Names of the unbound slots.
    pub fn holes(&self) -> Vec<&str> {
        let mut out = Vec::new();
        if let Param::Hole(n) = &self.class {
            out.push(n.as_str());
        }
        if let Param::Hole(n) = &self.cmp {
            out.push(n.as_str());
        }
        if let Param::Hole(n) = &self.a {
            out.push(n.as_str());
        }
        if let Param::Hole(n) = &self.b {
            out.push(n.as_str());
        }
        if let Param::Hole(n) = &self.threshold {
            out.push(n.as_str());
        }
        out
    }

    pub fn instantiate(&self, theta: &Valuation) -> Result<Formula, TemplateError> {
        let class = bind_int(&self.class, theta)?;
        let cmp = match &self.cmp {
            Param::Fixed(c) => *c,
            Param::Hole(name) => match theta.get(name) {
                Some(ParamValue::Cmp(c)) => *c,
                Some(_) => return Err(TemplateError::TypeMismatch(name.clone())),
                None => return Err(TemplateError::UnboundHole(name.clone())),
            },
        };
        let a = bind_int(&self.a, theta)?;
        let b = bind_int(&self.b, theta)?;
        let r = match &self.threshold {
            Param::Fixed(r) => *r,
            Param::Hole(name) => match theta.get(name) {
                Some(ParamValue::Real(r)) => *r,
                Some(ParamValue::Int(i)) => *i as f64,
                Some(_) => return Err(TemplateError::TypeMismatch(name.clone())),
                None => return Err(TemplateError::UnboundHole(name.clone())),
            },
        };
        if !r.is_finite() {
            return Err(TemplateError::NonFiniteThreshold);
        }
        if class == 0 {
            return Err(TemplateError::TypeMismatch("class index must be >= 1".into()));
        }
        if a > b {
            return Err(TemplateError::EmptyWindow { a, b });
        }
        let pred = Formula::pred(class, cmp, r);
        let child = Box::new(pred);
        Ok(match self.kind {
            TemporalKind::Eventually => Formula::Eventually { a, b, child },
            TemporalKind::Always => Formula::Always { a, b, child },
        })
    }
}

fn bind_int(p: &Param<usize>, theta: &Valuation) -> Result<usize, TemplateError> {
    match p {
        Param::Fixed(v) => Ok(*v),
        Param::Hole(name) => match theta.get(name) {
            Some(ParamValue::Int(v)) => Ok(*v),
            Some(_) => Err(TemplateError::TypeMismatch(name.clone())),
            None => Err(TemplateError::UnboundHole(name.clone())),
        },
    }
}

/// Instantiates the fully free primitive of `kind` at `theta`.
pub fn instantiate(kind: TemporalKind, theta: &Valuation) -> Result<Formula, TemplateError> {
    ParametricTemplate::free(kind).instantiate(theta)
}
