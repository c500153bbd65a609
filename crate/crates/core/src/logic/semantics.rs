//! Qualitative and quantitative semantics over discrete-time signals.
//!
//! Evaluation is bottom-up: every subformula is turned into a trace over all
//! start times at which it is defined (`0..=T - horizon`), temporal operators
//! being sliding-window extrema over the child's trace.

use std::collections::VecDeque;

use super::ast::Formula;
use super::EvalError;
use crate::data::StSignal;

/// Robustness of the constant `TRUE` (the largest finite value).
pub const TOP_ROBUSTNESS: f64 = f64::MAX;

fn check(signal: &StSignal, formula: &Formula, k: usize) -> Result<(), EvalError> {
    let required = k + formula.horizon();
    if required > signal.horizon() {
        return Err(EvalError::OutOfHorizon {
            required,
            available: signal.horizon(),
        });
    }
    let class = formula.max_class();
    if class > signal.dims() {
        return Err(EvalError::ClassOutOfRange {
            class,
            dims: signal.dims(),
        });
    }
    Ok(())
}

/// `(s, k) |= formula`
pub fn satisfies(signal: &StSignal, formula: &Formula, k: usize) -> Result<bool, EvalError> {
    check(signal, formula, k)?;
    Ok(sat(signal, formula)[k])
}

/// `rho(s, formula, k)`, ignoring weights on weighted nodes.
pub fn robustness(signal: &StSignal, formula: &Formula, k: usize) -> Result<f64, EvalError> {
    check(signal, formula, k)?;
    Ok(robustness_trace(signal, formula, false)?[k])
}

/// Robustness with weighted conjunctions/disjunctions scaling each child's
/// robustness by its weight normalized to mean one.
pub fn robustness_weighted(signal: &StSignal, formula: &Formula, k: usize) -> Result<f64, EvalError> {
    check(signal, formula, k)?;
    Ok(robustness_trace(signal, formula, true)?[k])
}

/// Satisfaction at every start time `0..=T - horizon`.
pub fn satisfaction_trace(signal: &StSignal, formula: &Formula) -> Result<Vec<bool>, EvalError> {
    check(signal, formula, 0)?;
    Ok(sat(signal, formula))
}

/// Robustness at every start time `0..=T - horizon`.
pub fn robustness_trace(
    signal: &StSignal,
    formula: &Formula,
    weighted: bool,
) -> Result<Vec<f64>, EvalError> {
    check(signal, formula, 0)?;
    Ok(rob(signal, formula, weighted))
}

fn trace_len(signal: &StSignal, formula: &Formula) -> usize {
    signal.len() - formula.horizon()
}

fn sat(s: &StSignal, f: &Formula) -> Vec<bool> {
    let len = trace_len(s, f);
    match f {
        Formula::True => vec![true; len],
        Formula::Pred(p) => (0..len).map(|k| p.cmp.holds(s.at(k, p.class - 1), p.threshold)).collect(),
        Formula::Not(c) => sat(s, c).into_iter().map(|v| !v).collect(),
        Formula::And(cs) | Formula::WAnd { children: cs, .. } => {
            let mut out = vec![true; len];
            for c in cs {
                for (o, v) in out.iter_mut().zip(sat(s, c)) {
                    *o &= v;
                }
            }
            out
        }
        Formula::Or(cs) | Formula::WOr { children: cs, .. } => {
            let mut out = vec![false; len];
            for c in cs {
                for (o, v) in out.iter_mut().zip(sat(s, c)) {
                    *o |= v;
                }
            }
            out
        }
        Formula::Always { a, b, child } => {
            let c = sat(s, child);
            window_fold(&c, *a, *b, len, |w| w.iter().all(|&v| v))
        }
        Formula::Eventually { a, b, child } => {
            let c = sat(s, child);
            window_fold(&c, *a, *b, len, |w| w.iter().any(|&v| v))
        }
    }
}

fn window_fold<T: Copy>(child: &[T], a: usize, b: usize, len: usize, f: impl Fn(&[T]) -> bool) -> Vec<bool> {
    (0..len).map(|k| f(&child[k + a..=k + b])).collect()
}

fn rob(s: &StSignal, f: &Formula, weighted: bool) -> Vec<f64> {
    let len = trace_len(s, f);
    match f {
        Formula::True => vec![TOP_ROBUSTNESS; len],
        Formula::Pred(p) => (0..len)
            .map(|k| p.cmp.robustness(s.at(k, p.class - 1), p.threshold))
            .collect(),
        Formula::Not(c) => rob(s, c, weighted).into_iter().map(|v| -v).collect(),
        Formula::And(cs) => combine(s, cs, None, len, weighted, f64::min, f64::INFINITY),
        Formula::Or(cs) => combine(s, cs, None, len, weighted, f64::max, f64::NEG_INFINITY),
        Formula::WAnd { weights, children } => {
            let w = weighted.then(|| normalized(weights));
            combine(s, children, w.as_deref(), len, weighted, f64::min, f64::INFINITY)
        }
        Formula::WOr { weights, children } => {
            let w = weighted.then(|| normalized(weights));
            combine(s, children, w.as_deref(), len, weighted, f64::max, f64::NEG_INFINITY)
        }
        Formula::Always { a, b, child } => sliding_extreme(&rob(s, child, weighted), *a, *b, len, false),
        Formula::Eventually { a, b, child } => sliding_extreme(&rob(s, child, weighted), *a, *b, len, true),
    }
}

/// Weights rescaled to mean one: `w_i * N / sum(w)`.
pub fn normalized(weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    let n = weights.len() as f64;
    weights.iter().map(|w| w * n / total).collect()
}

fn combine(
    s: &StSignal,
    children: &[Formula],
    weights: Option<&[f64]>,
    len: usize,
    weighted: bool,
    op: fn(f64, f64) -> f64,
    init: f64,
) -> Vec<f64> {
    let mut out = vec![init; len];
    for (i, c) in children.iter().enumerate() {
        let scale = weights.map_or(1.0, |w| w[i]);
        for (o, v) in out.iter_mut().zip(rob(s, c, weighted)) {
            let scaled = if v.abs() == TOP_ROBUSTNESS { v } else { (scale * v).clamp(-f64::MAX, f64::MAX) };
            *o = op(*o, scaled);
        }
    }
    out
}

/// `out[k] = extreme(values[k + a ..= k + b])` for `k < len`, with a monotone deque.
fn sliding_extreme(values: &[f64], a: usize, b: usize, len: usize, max: bool) -> Vec<f64> {
    let better = |x: f64, y: f64| if max { x >= y } else { x <= y };
    let mut out = Vec::with_capacity(len);
    let mut deque: VecDeque<usize> = VecDeque::new();
    let mut next = a;
    for k in 0..len {
        while next <= k + b {
            while deque.back().is_some_and(|&j| better(values[next], values[j])) {
                deque.pop_back();
            }
            deque.push_back(next);
            next += 1;
        }
        while deque.front().is_some_and(|&j| j < k + a) {
            deque.pop_front();
        }
        out.push(values[*deque.front().expect("window is nonempty")]);
    }
    out
}
