//! Exhaustive search over first-order primitives `F[a,b](h_j ~ r)` and
//! `G[a,b](h_j ~ r)`.
//!
//! At `k = 0` every primitive is a threshold test on a window extremum:
//!
//! ```text
//! F[a,b](h > r)  <=>  max > r        G[a,b](h > r)   <=>  min > r
//! F[a,b](h <= r) <=>  min <= r       G[a,b](h <= r)  <=>  max <= r
//! ```
//!
//! so the extrema of every `(j, window)` are tabulated once per dataset and a
//! node search only sorts them under the node's weights.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::InferenceError;
use crate::data::StSignal;
use crate::logic::{Cmp, EvalError, Formula, TemporalKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveChoice {
    pub kind: TemporalKind,
    /// 1-based predicate class.
    pub class: usize,
    pub cmp: Cmp,
    pub threshold: f64,
    pub a: usize,
    pub b: usize,
}

impl PrimitiveChoice {
    pub fn formula(&self) -> Formula {
        let child = Box::new(Formula::pred(self.class, self.cmp, self.threshold));
        match self.kind {
            TemporalKind::Eventually => Formula::Eventually {
                a: self.a,
                b: self.b,
                child,
            },
            TemporalKind::Always => Formula::Always {
                a: self.a,
                b: self.b,
                child,
            },
        }
    }

    /// Satisfaction at time 0.
    pub fn holds(&self, s: &StSignal) -> Result<bool, EvalError> {
        if self.b > s.horizon() {
            return Err(EvalError::OutOfHorizon {
                required: self.b,
                available: s.horizon(),
            });
        }
        if self.class > s.dims() {
            return Err(EvalError::ClassOutOfRange {
                class: self.class,
                dims: s.dims(),
            });
        }
        let window = (self.a..=self.b).map(|k| s.at(k, self.class - 1));
        let (lo, hi) = window.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        Ok(decide(self.kind, self.cmp, lo, hi, self.threshold))
    }
}

fn decide(kind: TemporalKind, cmp: Cmp, min: f64, max: f64, r: f64) -> bool {
    match (kind, cmp) {
        (TemporalKind::Eventually, Cmp::Gt) => max > r,
        (TemporalKind::Eventually, Cmp::Le) => min <= r,
        (TemporalKind::Always, Cmp::Gt) => min > r,
        (TemporalKind::Always, Cmp::Le) => max <= r,
    }
}

/// Windows `[a, a + len]` for every listed length and every `a` on the
/// stride that fits in the horizon.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindowGrid {
    /// `b - a` values; `None` means every length.
    pub lengths: Option<Vec<usize>>,
    pub stride: usize,
}

impl Default for WindowGrid {
    fn default() -> Self {
        Self {
            lengths: None,
            stride: 1,
        }
    }
}

impl WindowGrid {
    pub fn windows(&self, horizon: usize) -> Result<Vec<(usize, usize)>, InferenceError> {
        if self.stride == 0 {
            return Err(InferenceError::Config("window stride must be >= 1".into()));
        }
        let lengths: Vec<usize> = match &self.lengths {
            Some(l) => l.iter().copied().filter(|&l| l <= horizon).collect(),
            None => (0..=horizon).collect(),
        };
        let mut out = Vec::new();
        for len in lengths {
            let mut a = 0;
            while a + len <= horizon {
                out.push((a, a + len));
                a += self.stride;
            }
        }
        out.sort_unstable();
        out.dedup();
        if out.is_empty() {
            return Err(InferenceError::Config("window grid is empty".into()));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ThresholdGrid {
    /// `q` quantiles of all observed `h_j` values, at levels `i / (q + 1)`.
    Quantiles { q: usize },
    /// The same explicit values for every class.
    Values { values: Vec<f64> },
    /// Midpoints between consecutive distinct window extrema at each node.
    Midpoints,
}

impl Default for ThresholdGrid {
    fn default() -> Self {
        ThresholdGrid::Quantiles { q: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchGrids {
    pub windows: WindowGrid,
    pub thresholds: ThresholdGrid,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], level: f64) -> f64 {
    let pos = level * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Window extrema of a fixed training set, shared by every node and round.
#[derive(Debug, Clone)]
pub struct PrimitiveSearch {
    windows: Vec<(usize, usize)>,
    dims: usize,
    /// `extrema[j * windows.len() + w][i] = (min, max)` of `h_{j+1}` over
    /// window `w` of signal `i`.
    extrema: Vec<Vec<(f64, f64)>>,
    /// Candidate thresholds per class; `None` for per-node midpoints.
    thresholds: Option<Vec<Vec<f64>>>,
}

impl PrimitiveSearch {
    pub fn new(signals: &[StSignal], grids: &SearchGrids) -> Result<Self, InferenceError> {
        let first = signals.first().ok_or(InferenceError::EmptyDataset)?;
        let (horizon, dims) = (first.horizon(), first.dims());
        if signals.iter().any(|s| s.horizon() != horizon || s.dims() != dims) {
            return Err(InferenceError::MixedShapes);
        }
        let windows = grids.windows.windows(horizon)?;
        let mut index = vec![usize::MAX; (horizon + 1) * (horizon + 1)];
        for (w, &(a, b)) in windows.iter().enumerate() {
            index[a * (horizon + 1) + b] = w;
        }
        let mut extrema = vec![Vec::with_capacity(signals.len()); dims * windows.len()];
        for s in signals {
            for j in 0..dims {
                let col = s.column(j);
                for a in 0..=horizon {
                    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                    for b in a..=horizon {
                        lo = lo.min(col[b]);
                        hi = hi.max(col[b]);
                        let w = index[a * (horizon + 1) + b];
                        if w != usize::MAX {
                            extrema[j * windows.len() + w].push((lo, hi));
                        }
                    }
                }
            }
        }
        let thresholds = match &grids.thresholds {
            ThresholdGrid::Midpoints => None,
            ThresholdGrid::Values { values } => {
                let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
                v.sort_by(f64::total_cmp);
                v.dedup();
                if v.is_empty() {
                    return Err(InferenceError::Config("threshold grid is empty".into()));
                }
                Some(vec![v; dims])
            }
            ThresholdGrid::Quantiles { q } => {
                if *q == 0 {
                    return Err(InferenceError::Config("quantile count must be >= 1".into()));
                }
                let per_class = (0..dims)
                    .map(|j| {
                        let mut all: Vec<f64> = signals.iter().flat_map(|s| s.column(j)).collect();
                        all.sort_by(f64::total_cmp);
                        let mut v: Vec<f64> = (1..=*q)
                            .map(|i| quantile(&all, i as f64 / (*q + 1) as f64))
                            .collect();
                        v.dedup();
                        v
                    })
                    .collect();
                Some(per_class)
            }
        };
        Ok(Self {
            windows,
            dims,
            extrema,
            thresholds,
        })
    }

    pub fn len(&self) -> usize {
        self.extrema.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Whether primitive `p` holds on training signal `i`.
    pub(crate) fn holds(&self, p: &PrimitiveChoice, i: usize) -> bool {
        let w = self
            .windows
            .binary_search(&(p.a, p.b))
            .expect("primitive window comes from this grid");
        let (lo, hi) = self.extrema[(p.class - 1) * self.windows.len() + w][i];
        decide(p.kind, p.cmp, lo, hi, p.threshold)
    }

    /// Best primitive for the items `subset` under `weights` (indexed like
    /// the training set), or `None` when the subset is single-class or no
    /// candidate separates it.
    pub fn best(&self, subset: &[usize], labels: &[i32], weights: &[f64]) -> Option<(PrimitiveChoice, f64)> {
        let pos = subset.iter().any(|&i| labels[i] > 0);
        let neg = subset.iter().any(|&i| labels[i] < 0);
        if !(pos && neg) {
            return None;
        }
        let total: f64 = subset.iter().map(|&i| weights[i]).sum();
        let nw = self.windows.len();
        let results: Vec<Option<Candidate>> = (0..self.dims * nw * 2)
            .into_par_iter()
            .map(|task| {
                let (jw, use_max) = (task / 2, task % 2 == 1);
                let (j, w) = (jw / nw, jw % nw);
                self.scan(j, w, use_max, subset, labels, weights, total)
            })
            .collect();
        let mut best: Option<Candidate> = None;
        for c in results.into_iter().flatten() {
            if best.as_ref().map_or(true, |b| c.beats(b)) {
                best = Some(c);
            }
        }
        best.map(|c| (c.choice, c.impurity))
    }

    #[allow(clippy::too_many_arguments)]
    fn scan(
        &self,
        j: usize,
        w: usize,
        use_max: bool,
        subset: &[usize],
        labels: &[i32],
        weights: &[f64],
        total: f64,
    ) -> Option<Candidate> {
        let table = &self.extrema[j * self.windows.len() + w];
        let mut items: Vec<(f64, usize)> = subset
            .iter()
            .map(|&i| (if use_max { table[i].1 } else { table[i].0 }, i))
            .collect();
        items.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        let (wp_total, wn_total) = subset.iter().fold((0.0, 0.0), |(p, n), &i| {
            if labels[i] > 0 {
                (p + weights[i], n)
            } else {
                (p, n + weights[i])
            }
        });

        let (a, b) = self.windows[w];
        let mut best: Option<Candidate> = None;
        let mut consider = |r: f64, wp_le: f64, wn_le: f64| {
            let (wp_gt, wn_gt) = (wp_total - wp_le, wn_total - wn_le);
            let impurity = if total > 0.0 {
                (wp_le.min(wn_le) + wp_gt.min(wn_gt)) / total
            } else {
                0.0
            };
            // the satisfied side is the one leaning more towards +1
            let gt_satisfied = wp_gt - wn_gt >= wp_le - wn_le;
            let (kind, cmp) = match (use_max, gt_satisfied) {
                (true, true) => (TemporalKind::Eventually, Cmp::Gt),
                (true, false) => (TemporalKind::Always, Cmp::Le),
                (false, true) => (TemporalKind::Always, Cmp::Gt),
                (false, false) => (TemporalKind::Eventually, Cmp::Le),
            };
            let c = Candidate {
                choice: PrimitiveChoice {
                    kind,
                    class: j + 1,
                    cmp,
                    threshold: r,
                    a,
                    b,
                },
                impurity,
            };
            if best.as_ref().map_or(true, |b| c.beats(b)) {
                best = Some(c);
            }
        };

        let n = items.len();
        match &self.thresholds {
            None => {
                let (mut wp, mut wn) = (0.0, 0.0);
                for p in 0..n - 1 {
                    let i = items[p].1;
                    if labels[i] > 0 {
                        wp += weights[i];
                    } else {
                        wn += weights[i];
                    }
                    if items[p].0 < items[p + 1].0 {
                        let r = 0.5 * (items[p].0 + items[p + 1].0);
                        if r.is_finite() && r >= items[p].0 && r < items[p + 1].0 {
                            consider(r, wp, wn);
                        }
                    }
                }
            }
            Some(per_class) => {
                let (mut p, mut wp, mut wn) = (0, 0.0, 0.0);
                for &r in &per_class[j] {
                    while p < n && items[p].0 <= r {
                        let i = items[p].1;
                        if labels[i] > 0 {
                            wp += weights[i];
                        } else {
                            wn += weights[i];
                        }
                        p += 1;
                    }
                    if p > 0 && p < n {
                        consider(r, wp, wn);
                    }
                }
            }
        }
        best
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    choice: PrimitiveChoice,
    impurity: f64,
}

const IMPURITY_TIE: f64 = 1e-12;

impl Candidate {
    /// Lower impurity, then shorter window, smaller class, smaller threshold.
    fn beats(&self, other: &Candidate) -> bool {
        if self.impurity < other.impurity - IMPURITY_TIE {
            return true;
        }
        if self.impurity > other.impurity + IMPURITY_TIE {
            return false;
        }
        let key = |c: &Candidate| (c.choice.b - c.choice.a, c.choice.class);
        match key(self).cmp(&key(other)) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Greater => false,
            std::cmp::Ordering::Equal => self.choice.threshold < other.choice.threshold,
        }
    }
}

/// Single-node search: the best primitive and its weighted misclassification
/// impurity, or `None` for a single-class dataset.
pub fn optimize_primitive(
    signals: &[StSignal],
    labels: &[i32],
    weights: &[f64],
    grids: &SearchGrids,
) -> Result<Option<(PrimitiveChoice, f64)>, InferenceError> {
    let search = PrimitiveSearch::new(signals, grids)?;
    let all: Vec<usize> = (0..signals.len()).collect();
    Ok(search.best(&all, labels, weights))
}
