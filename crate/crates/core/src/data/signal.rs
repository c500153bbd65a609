use serde::{Deserialize, Serialize};

use super::DataError;

/// Vector-valued discrete-time signal: `values[k][j]` is predicate `h_{j+1}`
/// evaluated on frame `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StSignal {
    values: Vec<Vec<f64>>,
    labels: Vec<String>,
}

impl StSignal {
    /// Builds a signal from time-major rows with default labels `h_1..h_n`.
    pub fn new(values: Vec<Vec<f64>>) -> Result<Self, DataError> {
        let dims = values.first().map_or(0, Vec::len);
        let labels = (1..=dims).map(|j| format!("h_{j}")).collect();
        Self::with_labels(values, labels)
    }

    pub fn with_labels(values: Vec<Vec<f64>>, labels: Vec<String>) -> Result<Self, DataError> {
        if values.is_empty() {
            return Err(DataError::EmptyTrajectory);
        }
        let dims = labels.len();
        if dims == 0 {
            return Err(DataError::RaggedSignal {
                row: 0,
                expected: 1,
                found: 0,
            });
        }
        for (row, v) in values.iter().enumerate() {
            if v.len() != dims {
                return Err(DataError::RaggedSignal {
                    row,
                    expected: dims,
                    found: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(DataError::NonFinite(format!("signal row {row}")));
            }
        }
        Ok(Self { values, labels })
    }

    /// Single-dimension signal from a plain sequence.
    pub fn from_scalar(values: &[f64]) -> Result<Self, DataError> {
        Self::new(values.iter().map(|&v| vec![v]).collect())
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Index `T` of the last sample.
    pub fn horizon(&self) -> usize {
        self.values.len() - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.labels.len()
    }

    /// Value of dimension `dim` (0-based) at time `k`.
    pub fn at(&self, k: usize, dim: usize) -> f64 {
        self.values[k][dim]
    }

    /// All samples of one dimension (0-based) in time order.
    pub fn column(&self, dim: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[dim]).collect()
    }

    pub fn prefix(&self, last: usize) -> StSignal {
        StSignal {
            values: self.values[..=last.min(self.horizon())].to_vec(),
            labels: self.labels.clone(),
        }
    }
}
