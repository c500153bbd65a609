use std::fmt;

use serde::{Deserialize, Serialize};

use super::ParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Cmp {
    /// `h_j > r`
    Gt,
    /// `h_j <= r`
    Le,
}

impl Cmp {
    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Cmp::Gt => value > threshold,
            Cmp::Le => value <= threshold,
        }
    }

    /// Signed distance to the threshold, positive when the comparison holds
    /// (zero on the boundary).
    pub fn robustness(self, value: f64, threshold: f64) -> f64 {
        match self {
            Cmp::Gt => value - threshold,
            Cmp::Le => threshold - value,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Cmp::Gt => ">",
            Cmp::Le => "<=",
        }
    }
}

/// Atomic proposition `h_class ~ threshold`; `class` is 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Predicate {
    pub class: usize,
    pub cmp: Cmp,
    pub threshold: f64,
}

/// SVM-STL formula, including the weighted conjunction/disjunction fragment.
///
/// Temporal windows are inclusive integer ranges `[a, b]` relative to the
/// evaluation time. Weighted nodes share the qualitative semantics of their
/// unweighted counterparts; only [`robustness_weighted`](super::robustness_weighted)
/// looks at the weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Formula {
    True,
    Pred(Predicate),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Always { a: usize, b: usize, child: Box<Formula> },
    Eventually { a: usize, b: usize, child: Box<Formula> },
    WAnd { weights: Vec<f64>, children: Vec<Formula> },
    WOr { weights: Vec<f64>, children: Vec<Formula> },
}

/// Alias used where a formula is expected to carry weights.
pub type WeightedFormula = Formula;

impl Formula {
    pub fn pred(class: usize, cmp: Cmp, threshold: f64) -> Formula {
        Formula::Pred(Predicate {
            class,
            cmp,
            threshold,
        })
    }

    pub fn not(child: Formula) -> Formula {
        Formula::Not(Box::new(child))
    }

    /// `!TRUE`
    pub fn falsum() -> Formula {
        Formula::not(Formula::True)
    }

    pub fn always(a: usize, b: usize, child: Formula) -> Result<Formula, ParseError> {
        check_window(a, b)?;
        Ok(Formula::Always {
            a,
            b,
            child: Box::new(child),
        })
    }

    pub fn eventually(a: usize, b: usize, child: Formula) -> Result<Formula, ParseError> {
        check_window(a, b)?;
        Ok(Formula::Eventually {
            a,
            b,
            child: Box::new(child),
        })
    }

    pub fn weighted_and(weights: Vec<f64>, children: Vec<Formula>) -> Result<Formula, ParseError> {
        check_weights(&weights, children.len())?;
        Ok(Formula::WAnd { weights, children })
    }

    pub fn weighted_or(weights: Vec<f64>, children: Vec<Formula>) -> Result<Formula, ParseError> {
        check_weights(&weights, children.len())?;
        Ok(Formula::WOr { weights, children })
    }

    /// Smallest `H` such that evaluating at time `k` reads only indices `<= k + H`.
    pub fn horizon(&self) -> usize {
        match self {
            Formula::True | Formula::Pred(_) => 0,
            Formula::Not(c) => c.horizon(),
            Formula::And(cs) | Formula::Or(cs) => cs.iter().map(Formula::horizon).max().unwrap_or(0),
            Formula::WAnd { children, .. } | Formula::WOr { children, .. } => {
                children.iter().map(Formula::horizon).max().unwrap_or(0)
            }
            Formula::Always { b, child, .. } | Formula::Eventually { b, child, .. } => b + child.horizon(),
        }
    }

    /// Largest predicate class index referenced (0 if none).
    pub fn max_class(&self) -> usize {
        match self {
            Formula::True => 0,
            Formula::Pred(p) => p.class,
            Formula::Not(c) => c.max_class(),
            Formula::Always { child, .. } | Formula::Eventually { child, .. } => child.max_class(),
            Formula::And(cs) | Formula::Or(cs) => cs.iter().map(Formula::max_class).max().unwrap_or(0),
            Formula::WAnd { children, .. } | Formula::WOr { children, .. } => {
                children.iter().map(Formula::max_class).max().unwrap_or(0)
            }
        }
    }

    pub fn is_weighted(&self) -> bool {
        match self {
            Formula::WAnd { .. } | Formula::WOr { .. } => true,
            Formula::True | Formula::Pred(_) => false,
            Formula::Not(c) => c.is_weighted(),
            Formula::Always { child, .. } | Formula::Eventually { child, .. } => child.is_weighted(),
            Formula::And(cs) | Formula::Or(cs) => cs.iter().any(Formula::is_weighted),
        }
    }

    /// Checks structural invariants: ordered windows, nonempty boolean
    /// nodes, positive weights matching the children, 1-based classes.
    pub fn validate(&self) -> Result<(), ParseError> {
        match self {
            Formula::True => Ok(()),
            Formula::Pred(p) => {
                if p.class == 0 {
                    return Err(ParseError::semantic(0, "predicate classes are 1-based"));
                }
                if !p.threshold.is_finite() {
                    return Err(ParseError::semantic(0, "non-finite threshold"));
                }
                Ok(())
            }
            Formula::Not(c) => c.validate(),
            Formula::And(cs) | Formula::Or(cs) => {
                if cs.is_empty() {
                    return Err(ParseError::semantic(0, "empty boolean node"));
                }
                cs.iter().try_for_each(Formula::validate)
            }
            Formula::Always { a, b, child } | Formula::Eventually { a, b, child } => {
                check_window(*a, *b)?;
                child.validate()
            }
            Formula::WAnd { weights, children } | Formula::WOr { weights, children } => {
                check_weights(weights, children.len())?;
                children.iter().try_for_each(Formula::validate)
            }
        }
    }

    fn needs_parens(&self) -> bool {
        matches!(self.collapsed(), Formula::And(_) | Formula::Or(_) | Formula::Pred(_))
    }

    /// Skips single-child boolean nodes, which print as their child.
    fn collapsed(&self) -> &Formula {
        match self {
            Formula::And(cs) | Formula::Or(cs) if cs.len() == 1 => cs[0].collapsed(),
            other => other,
        }
    }
}

fn check_window(a: usize, b: usize) -> Result<(), ParseError> {
    if a > b {
        return Err(ParseError::empty_window(0, a, b));
    }
    Ok(())
}

fn check_weights(weights: &[f64], n: usize) -> Result<(), ParseError> {
    if n == 0 {
        return Err(ParseError::semantic(0, "weighted node without subformulas"));
    }
    if weights.len() != n {
        return Err(ParseError::semantic(
            0,
            format!("{} weights for {} subformulas", weights.len(), n),
        ));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(ParseError::semantic(0, "weights must be finite and strictly positive"));
    }
    Ok(())
}

fn write_joined(f: &mut fmt::Formatter<'_>, children: &[Formula], sep: &str) -> fmt::Result {
    if let [only] = children {
        return write!(f, "{only}");
    }
    for (i, c) in children.iter().enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        if matches!(c.collapsed(), Formula::And(_) | Formula::Or(_)) {
            write!(f, "({c})")?;
        } else {
            write!(f, "{c}")?;
        }
    }
    Ok(())
}

fn write_weighted(
    f: &mut fmt::Formatter<'_>,
    name: &str,
    weights: &[f64],
    children: &[Formula],
) -> fmt::Result {
    write!(f, "{name}{{")?;
    for (i, w) in weights.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{w}")?;
    }
    f.write_str("}(")?;
    for (i, c) in children.iter().enumerate() {
        if i > 0 {
            f.write_str("; ")?;
        }
        write!(f, "{c}")?;
    }
    f.write_str(")")
}

/// Canonical concrete syntax; `parse_formula(&f.to_string())` reproduces `f`.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("TRUE"),
            Formula::Pred(p) => write!(f, "h{} {} {}", p.class, p.cmp.symbol(), p.threshold),
            Formula::Not(c) => {
                if c.needs_parens() {
                    write!(f, "!({c})")
                } else {
                    write!(f, "!{c}")
                }
            }
            Formula::And(cs) => write_joined(f, cs, " & "),
            Formula::Or(cs) => write_joined(f, cs, " | "),
            Formula::Always { a, b, child } => write!(f, "G[{a},{b}]({child})"),
            Formula::Eventually { a, b, child } => write!(f, "F[{a},{b}]({child})"),
            Formula::WAnd { weights, children } => write_weighted(f, "AND", weights, children),
            Formula::WOr { weights, children } => write_weighted(f, "OR", weights, children),
        }
    }
}
