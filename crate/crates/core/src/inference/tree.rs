use serde::{Deserialize, Serialize};

use super::primitive::{PrimitiveChoice, PrimitiveSearch};
use crate::data::StSignal;
use crate::logic::{EvalError, Formula};

/// Shallow decision tree over primitives; signals satisfying a node's
/// primitive go to `sat`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StlTree {
    Leaf(i32),
    Node {
        primitive: PrimitiveChoice,
        sat: Box<StlTree>,
        unsat: Box<StlTree>,
    },
}

impl StlTree {
    pub fn classify(&self, s: &StSignal) -> Result<i32, EvalError> {
        match self {
            StlTree::Leaf(l) => Ok(*l),
            StlTree::Node { primitive, sat, unsat } => {
                if primitive.holds(s)? {
                    sat.classify(s)
                } else {
                    unsat.classify(s)
                }
            }
        }
    }

    pub(crate) fn classify_indexed(&self, search: &PrimitiveSearch, i: usize) -> i32 {
        match self {
            StlTree::Leaf(l) => *l,
            StlTree::Node { primitive, sat, unsat } => {
                if search.holds(primitive, i) {
                    sat.classify_indexed(search, i)
                } else {
                    unsat.classify_indexed(search, i)
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            StlTree::Leaf(_) => 0,
            StlTree::Node { sat, unsat, .. } => 1 + sat.depth().max(unsat.depth()),
        }
    }

    pub fn has_positive_leaf(&self) -> bool {
        match self {
            StlTree::Leaf(l) => *l > 0,
            StlTree::Node { sat, unsat, .. } => sat.has_positive_leaf() || unsat.has_positive_leaf(),
        }
    }

    /// Largest window end over the tree's primitives.
    pub fn horizon(&self) -> usize {
        match self {
            StlTree::Leaf(_) => 0,
            StlTree::Node { primitive, sat, unsat } => primitive.b.max(sat.horizon()).max(unsat.horizon()),
        }
    }

    pub fn primitives(&self) -> Vec<PrimitiveChoice> {
        match self {
            StlTree::Leaf(_) => Vec::new(),
            StlTree::Node { primitive, sat, unsat } => {
                let mut out = vec![*primitive];
                out.extend(sat.primitives());
                out.extend(unsat.primitives());
                out
            }
        }
    }
}

/// Weighted majority label of `subset` (`+1` on ties).
fn majority(subset: &[usize], labels: &[i32], weights: &[f64]) -> i32 {
    let (p, n) = subset.iter().fold((0.0, 0.0), |(p, n), &i| {
        if labels[i] > 0 {
            (p + weights[i], n)
        } else {
            (p, n + weights[i])
        }
    });
    if p >= n {
        1
    } else {
        -1
    }
}

/// Grows a tree of depth at most `depth` on the training set behind
/// `search`. A branch left without items becomes a leaf with its parent's
/// majority label.
pub fn build_tree(search: &PrimitiveSearch, labels: &[i32], weights: &[f64], depth: usize) -> StlTree {
    let all: Vec<usize> = (0..labels.len()).collect();
    grow(search, &all, labels, weights, depth, 1)
}

fn grow(search: &PrimitiveSearch, subset: &[usize], labels: &[i32], weights: &[f64], depth: usize, parent: i32) -> StlTree {
    if subset.is_empty() {
        return StlTree::Leaf(parent);
    }
    let here = majority(subset, labels, weights);
    if depth == 0 {
        return StlTree::Leaf(here);
    }
    let Some((primitive, _)) = search.best(subset, labels, weights) else {
        return StlTree::Leaf(here);
    };
    let (sat, unsat): (Vec<usize>, Vec<usize>) = subset.iter().partition(|&&i| search.holds(&primitive, i));
    StlTree::Node {
        primitive,
        sat: Box::new(grow(search, &sat, labels, weights, depth - 1, here)),
        unsat: Box::new(grow(search, &unsat, labels, weights, depth - 1, here)),
    }
}

/// Disjunction over root-to-`+1` paths of the conjunction of the path's
/// primitives (negated along `unsat` edges). A tree without a `+1` leaf
/// exports `!TRUE`.
pub fn tree_to_formula(tree: &StlTree) -> Formula {
    let mut paths = Vec::new();
    collect_paths(tree, &mut Vec::new(), &mut paths);
    let mut clauses: Vec<Formula> = paths
        .into_iter()
        .map(|mut lits| match lits.len() {
            0 => Formula::True,
            1 => lits.pop().unwrap(),
            _ => Formula::And(lits),
        })
        .collect();
    match clauses.len() {
        0 => Formula::falsum(),
        1 => clauses.pop().unwrap(),
        _ => Formula::Or(clauses),
    }
}

fn collect_paths(tree: &StlTree, prefix: &mut Vec<Formula>, out: &mut Vec<Vec<Formula>>) {
    match tree {
        StlTree::Leaf(l) => {
            if *l > 0 {
                out.push(prefix.clone());
            }
        }
        StlTree::Node { primitive, sat, unsat } => {
            prefix.push(primitive.formula());
            collect_paths(sat, prefix, out);
            prefix.pop();
            prefix.push(Formula::not(primitive.formula()));
            collect_paths(unsat, prefix, out);
            prefix.pop();
        }
    }
}
