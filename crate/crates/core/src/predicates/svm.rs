//! Soft-margin linear SVM solved in the dual with SMO.
//!
//! Minimizes `1/2 a^T Q a - sum(a)` subject to `0 <= a_i <= C` and
//! `sum(y_i a_i) = 0`, with `Q_ij = y_i y_j x_i . x_j`, selecting the
//! maximal-violating pair with second-order working-set selection. The primal
//! solution is `w = sum(a_i y_i x_i)`; the bias comes from the free
//! multipliers. The solver has no randomness.

use serde::{Deserialize, Serialize};

use super::PredicateError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    /// Soft-margin weight `C`; large values approach the hard margin.
    pub c: f64,
    /// Stop once the maximal KKT violation drops below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Fit a per-dimension standardization on the training data.
    pub standardize: bool,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 10.0,
            tolerance: 1e-6,
            max_iterations: 10_000_000,
            standardize: true,
        }
    }
}

impl SvmConfig {
    pub fn hard_margin() -> Self {
        Self {
            c: 1e8,
            tolerance: 1e-10,
            standardize: false,
            ..Self::default()
        }
    }
}

/// Per-dimension affine map `z = (x - mean) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    /// Population mean and standard deviation; constant dimensions get scale 1.
    pub fn fit(points: &[Vec<f64>]) -> Self {
        let dim = points[0].len();
        let n = points.len() as f64;
        let mut mean = vec![0.0; dim];
        for p in points {
            for (m, v) in mean.iter_mut().zip(p) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; dim];
        for p in points {
            for d in 0..dim {
                var[d] += (p[d] - mean[d]).powi(2) / n;
            }
        }
        let scale = var
            .into_iter()
            .map(|v| if v.sqrt() > 1e-12 { v.sqrt() } else { 1.0 })
            .collect();
        Self { mean, scale }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingStats {
    /// Geometric margin `1 / ||w||` in the (standardized) training space.
    pub margin: f64,
    /// Training points with `y (w.x + b) < 1` beyond solver tolerance.
    pub margin_violations: usize,
    pub support_vectors: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub standardizer: Option<Standardizer>,
    pub stats: TrainingStats,
}

impl LinearSvm {
    /// Signed distance of `x` to the decision boundary,
    /// `(w.z + b) / ||w||` with `z` the standardized `x`.
    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        let z;
        let x = match &self.standardizer {
            Some(s) => {
                z = s.apply(x);
                &z[..]
            }
            None => x,
        };
        (dot(&self.weights, x) + self.bias) / norm(&self.weights)
    }

    pub fn classify(&self, x: &[f64]) -> i32 {
        if self.signed_distance(x) >= 0.0 {
            1
        } else {
            -1
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Trains on raw points with labels in `{+1, -1}`.
pub fn train_svm_points(points: &[Vec<f64>], labels: &[i32], cfg: &SvmConfig) -> Result<LinearSvm, PredicateError> {
    if points.is_empty() || points.len() != labels.len() {
        return Err(PredicateError::Degenerate("no training points".into()));
    }
    if !(cfg.c.is_finite() && cfg.c > 0.0) {
        return Err(PredicateError::Config("C must be finite and positive".into()));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(PredicateError::Config("ragged training points".into()));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(PredicateError::NonFinite);
    }
    if let Some(l) = labels.iter().find(|l| **l != 1 && **l != -1) {
        return Err(PredicateError::Config(format!("label {l} is not +1/-1")));
    }
    for want in [1, -1] {
        if !labels.contains(&want) {
            return Err(PredicateError::Degenerate(format!("no examples labeled {want:+}")));
        }
    }

    let standardizer = cfg.standardize.then(|| Standardizer::fit(points));
    let xs: Vec<Vec<f64>> = match &standardizer {
        Some(s) => points.iter().map(|p| s.apply(p)).collect(),
        None => points.to_vec(),
    };
    let y: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
    let (alpha, rho, iterations) = smo(&xs, &y, cfg);

    let mut weights = vec![0.0; dim];
    for ((x, yi), a) in xs.iter().zip(&y).zip(&alpha) {
        for (w, v) in weights.iter_mut().zip(x) {
            *w += a * yi * v;
        }
    }
    let bias = -rho;
    let wn = norm(&weights);
    if wn == 0.0 {
        return Err(PredicateError::Degenerate("zero normal vector".into()));
    }
    let margin_violations = xs
        .iter()
        .zip(&y)
        .filter(|(x, yi)| *yi * (dot(&weights, x) + bias) < 1.0 - 1e3 * cfg.tolerance.max(1e-9))
        .count();
    Ok(LinearSvm {
        weights,
        bias,
        standardizer,
        stats: TrainingStats {
            margin: 1.0 / wn,
            margin_violations,
            support_vectors: alpha.iter().filter(|a| **a > 0.0).count(),
            iterations,
        },
    })
}

/// Returns `(alpha, rho, iterations)`; the decision function is `w.x - rho`.
fn smo(xs: &[Vec<f64>], y: &[f64], cfg: &SvmConfig) -> (Vec<f64>, f64, usize) {
    let n = xs.len();
    let c = cfg.c;
    let kdiag: Vec<f64> = xs.iter().map(|x| dot(x, x)).collect();
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
    let low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);
    let mut iterations = 0;

    while iterations < cfg.max_iterations {
        // i: maximal -y G over I_up
        let mut i = usize::MAX;
        let mut gmax = f64::NEG_INFINITY;
        for t in 0..n {
            if up(alpha[t], y[t]) && (i == usize::MAX || -y[t] * grad[t] > gmax) {
                i = t;
                gmax = -y[t] * grad[t];
            }
        }
        // j: second-order choice over I_low
        let mut j = usize::MAX;
        let mut gmin = f64::INFINITY;
        let mut best_obj = f64::INFINITY;
        let ki: Vec<f64> = if i == usize::MAX {
            Vec::new()
        } else {
            xs.iter().map(|x| dot(&xs[i], x)).collect()
        };
        for t in 0..n {
            if !low(alpha[t], y[t]) {
                continue;
            }
            let v = -y[t] * grad[t];
            gmin = gmin.min(v);
            if i != usize::MAX {
                let b = gmax - v;
                if b > 0.0 {
                    let a = (kdiag[i] + kdiag[t] - 2.0 * ki[t]).max(1e-12);
                    let obj = -(b * b) / a;
                    if obj < best_obj {
                        best_obj = obj;
                        j = t;
                    }
                }
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < cfg.tolerance {
            break;
        }
        iterations += 1;

        let kij = ki[j];
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let quad = (kdiag[i] + kdiag[j] - 2.0 * kij).max(1e-12);
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            let kjt = dot(&xs[j], &xs[t]);
            grad[t] += y[t] * (y[i] * di * ki[t] + y[j] * dj * kjt);
        }
    }

    // rho from free multipliers, else the midpoint of the feasible interval
    let (mut free_sum, mut free_n) = (0.0, 0usize);
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] > 0.0 && alpha[t] < c {
            free_sum += yg;
            free_n += 1;
        } else if (alpha[t] >= c && y[t] < 0.0) || (alpha[t] <= 0.0 && y[t] > 0.0) {
            ub = ub.min(yg);
        } else {
            lb = lb.max(yg);
        }
    }
    let rho = if free_n > 0 { free_sum / free_n as f64 } else { (ub + lb) / 2.0 };
    (alpha, rho, iterations)
}
