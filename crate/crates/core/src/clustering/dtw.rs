use serde::{Deserialize, Serialize};

use super::ClusterError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DtwCost {
    #[default]
    Absolute,
    Squared,
}

impl DtwCost {
    fn apply(self, x: f64, y: f64) -> f64 {
        match self {
            DtwCost::Absolute => (x - y).abs(),
            DtwCost::Squared => (x - y) * (x - y),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct DtwConfig {
    pub cost: DtwCost,
    /// Sakoe-Chiba half-width. Widened to the length difference when that is
    /// larger, so an alignment always exists.
    pub band: Option<usize>,
}

/// Unconstrained DTW with absolute-difference cost.
pub fn dtw_distance(a: &[f64], b: &[f64]) -> Result<f64, ClusterError> {
    dtw_distance_with(a, b, &DtwConfig::default())
}

pub fn dtw_distance_with(a: &[f64], b: &[f64], cfg: &DtwConfig) -> Result<f64, ClusterError> {
    if a.is_empty() || b.is_empty() {
        return Err(ClusterError::EmptySequence);
    }
    Ok(dtw_unchecked(a, b, cfg))
}

/// Two-row DP; cells outside the band stay at infinity.
pub(crate) fn dtw_unchecked(a: &[f64], b: &[f64], cfg: &DtwConfig) -> f64 {
    let (n, m) = (a.len(), b.len());
    let w = cfg.band.map(|w| w.max(n.abs_diff(m)));
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut cur = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for i in 1..=n {
        let (lo, hi) = match w {
            Some(w) => (i.saturating_sub(w).max(1), (i + w).min(m)),
            None => (1, m),
        };
        cur.fill(f64::INFINITY);
        for j in lo..=hi {
            let best = prev[j].min(cur[j - 1]).min(prev[j - 1]);
            cur[j] = cfg.cost.apply(a[i - 1], b[j - 1]) + best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m]
}
