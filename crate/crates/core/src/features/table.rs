use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::{FeatureError, FeatureVector};
use crate::data::DataError;

/// Feature vectors keyed by `(trajectory id, time index)`.
///
/// Interchange format:
/// ```text
/// # extractor=<id> m=<int>
/// traj0,0,v1,...,vm
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub extractor_id: String,
    pub m: usize,
    pub rows: BTreeMap<(String, usize), FeatureVector>,
}

impl FeatureTable {
    pub fn new(extractor_id: impl Into<String>, m: usize) -> Self {
        Self {
            extractor_id: extractor_id.into(),
            m,
            rows: BTreeMap::new(),
        }
    }

    pub fn get(&self, trajectory: &str, time: usize) -> Result<&FeatureVector, FeatureError> {
        self.rows
            .get(&(trajectory.to_string(), time))
            .ok_or_else(|| FeatureError::MissingKey {
                trajectory: trajectory.to_string(),
                time,
            })
    }

    /// Frames of one trajectory in time order.
    pub fn trajectory(&self, trajectory: &str) -> Vec<&FeatureVector> {
        self.rows
            .range((trajectory.to_string(), 0)..=(trajectory.to_string(), usize::MAX))
            .map(|(_, v)| v)
            .collect()
    }

    pub fn trajectory_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.rows.keys().map(|(t, _)| t.clone()).collect();
        ids.dedup();
        ids
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn insert(&mut self, trajectory: &str, time: usize, v: FeatureVector) -> Result<(), FeatureError> {
        if v.extractor_id() != self.extractor_id {
            return Err(FeatureError::ExtractorMismatch {
                expected: self.extractor_id.clone(),
                found: v.extractor_id().to_string(),
            });
        }
        if v.dim() != self.m {
            return Err(FeatureError::Config(format!(
                "vector of dimension {} in table with m={}",
                v.dim(),
                self.m
            )));
        }
        self.rows.insert((trajectory.to_string(), time), v);
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("# extractor={} m={}\n", self.extractor_id, self.m);
        for ((traj, t), v) in &self.rows {
            out.push_str(traj);
            out.push(',');
            out.push_str(&t.to_string());
            for x in v.values() {
                out.push_str(&format!(",{x:.16e}"));
            }
            out.push('\n');
        }
        out
    }
}

pub fn parse_feature_table(text: &str, path: &Path) -> Result<FeatureTable, FeatureError> {
    let perr = |line: usize, msg: String| FeatureError::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| perr(1, "empty feature table".into()))?;
    let header = header
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| perr(1, "header must start with '#'".into()))?;
    let mut extractor = None;
    let mut m = None;
    for field in header.split_whitespace() {
        match field.split_once('=') {
            Some(("extractor", v)) => extractor = Some(v.to_string()),
            Some(("m", v)) => {
                m = Some(
                    v.parse::<usize>()
                        .map_err(|_| perr(1, format!("bad dimension {v:?}")))?,
                )
            }
            _ => {}
        }
    }
    let extractor = extractor.ok_or_else(|| perr(1, "header lacks extractor=<id>".into()))?;
    let m = m.ok_or_else(|| perr(1, "header lacks m=<int>".into()))?;
    let mut table = FeatureTable::new(extractor, m);
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() < 2 {
            return Err(perr(i + 1, "expected trajectoryId,timeIndex,values...".into()));
        }
        if cells.len() - 2 != m {
            return Err(FeatureError::Dimension {
                path: path.to_path_buf(),
                line: i + 1,
                expected: m,
                found: cells.len() - 2,
            });
        }
        let time: usize = cells[1]
            .parse()
            .map_err(|_| perr(i + 1, format!("bad time index {:?}", cells[1])))?;
        let values = cells[2..]
            .iter()
            .map(|c| {
                c.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| perr(i + 1, format!("bad value {c:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let key = (cells[0].to_string(), time);
        if table.rows.contains_key(&key) {
            return Err(FeatureError::DuplicateKey {
                path: path.to_path_buf(),
                line: i + 1,
                trajectory: key.0,
                time,
            });
        }
        let v = FeatureVector::new(values, table.extractor_id.clone())?;
        table.rows.insert(key, v);
    }
    Ok(table)
}

pub fn load_feature_table(path: &Path) -> Result<FeatureTable, FeatureError> {
    let text = fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
    parse_feature_table(&text, path)
}

pub fn save_feature_table(table: &FeatureTable, path: &Path) -> Result<(), FeatureError> {
    fs::write(path, table.to_text()).map_err(|e| DataError::io(path, e).into())
}
