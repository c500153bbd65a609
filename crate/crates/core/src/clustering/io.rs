//! Text formats for cluster models and assignments.
//!
//! ```text
//! # n=3 distance=dtw cost=absolute band=8 m=366 criterion=12.5
//! 0.25,0.5,...
//! ```
//!
//! Assignments are `itemId,label` lines after a `# item,label` header.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Assignment, ClusterError, ClusterModel, DistanceKind, DtwConfig, DtwCost};

fn io_err(path: &Path, source: std::io::Error) -> ClusterError {
    ClusterError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> ClusterError {
    ClusterError::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

pub fn model_to_string(model: &ClusterModel) -> String {
    let mut out = format!("# n={}", model.n());
    match model.distance {
        DistanceKind::Squared => out.push_str(" distance=squared"),
        DistanceKind::Dtw(cfg) => {
            let cost = match cfg.cost {
                DtwCost::Absolute => "absolute",
                DtwCost::Squared => "squared",
            };
            let band = cfg.band.map_or("none".to_string(), |w| w.to_string());
            write!(out, " distance=dtw cost={cost} band={band}").unwrap();
        }
    }
    writeln!(out, " m={} criterion={}", model.dim(), model.criterion).unwrap();
    for c in &model.centers {
        let row: Vec<String> = c.iter().map(f64::to_string).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_cluster_model(text: &str, path: &Path) -> Result<ClusterModel, ClusterError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let header = header
        .strip_prefix('#')
        .ok_or_else(|| parse_err(path, 1, "missing '#' header"))?;
    let fields: std::collections::BTreeMap<&str, &str> = header
        .split_whitespace()
        .filter_map(|kv| kv.split_once('='))
        .collect();
    let field = |k: &str| fields.get(k).copied().ok_or_else(|| parse_err(path, 1, format!("missing {k}=")));
    let int = |k: &str| -> Result<usize, ClusterError> {
        field(k)?.parse().map_err(|_| parse_err(path, 1, format!("bad {k}")))
    };
    let n = int("n")?;
    let m = int("m")?;
    let criterion: f64 = field("criterion")?
        .parse()
        .map_err(|_| parse_err(path, 1, "bad criterion"))?;
    let distance = match field("distance")? {
        "squared" => DistanceKind::Squared,
        "dtw" => {
            let cost = match field("cost")? {
                "absolute" => DtwCost::Absolute,
                "squared" => DtwCost::Squared,
                other => return Err(parse_err(path, 1, format!("unknown cost {other:?}"))),
            };
            let band = match field("band")? {
                "none" => None,
                w => Some(w.parse().map_err(|_| parse_err(path, 1, "bad band"))?),
            };
            DistanceKind::Dtw(DtwConfig { cost, band })
        }
        other => return Err(parse_err(path, 1, format!("unknown distance {other:?}"))),
    };
    let mut centers = Vec::with_capacity(n);
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| parse_err(path, i + 1, e.to_string()))?;
        if row.len() != m {
            return Err(parse_err(path, i + 1, format!("expected {m} values, found {}", row.len())));
        }
        centers.push(row);
    }
    if centers.len() != n {
        return Err(parse_err(path, 1, format!("header says {n} centers, found {}", centers.len())));
    }
    Ok(ClusterModel {
        centers,
        distance,
        criterion,
    })
}

pub fn save_cluster_model(model: &ClusterModel, path: &Path) -> Result<(), ClusterError> {
    fs::write(path, model_to_string(model)).map_err(|e| io_err(path, e))
}

pub fn load_cluster_model(path: &Path) -> Result<ClusterModel, ClusterError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_cluster_model(&text, path)
}

pub fn save_assignment(ids: &[String], assignment: &Assignment, path: &Path) -> Result<(), ClusterError> {
    assert_eq!(ids.len(), assignment.labels.len(), "one id per label");
    let mut out = String::from("# item,label\n");
    for (id, l) in ids.iter().zip(&assignment.labels) {
        writeln!(out, "{id},{l}").unwrap();
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn load_assignment(path: &Path) -> Result<Vec<(String, usize)>, ClusterError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let (id, label) = line
            .rsplit_once(',')
            .ok_or_else(|| parse_err(path, i + 1, "expected itemId,label"))?;
        let label: usize = label
            .trim()
            .parse()
            .ok()
            .filter(|l| *l >= 1)
            .ok_or_else(|| parse_err(path, i + 1, "label must be a positive integer"))?;
        out.push((id.to_string(), label));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        for distance in [
            DistanceKind::Squared,
            DistanceKind::Dtw(DtwConfig {
                cost: DtwCost::Squared,
                band: Some(4),
            }),
            DistanceKind::Dtw(DtwConfig::default()),
        ] {
            let model = ClusterModel {
                centers: vec![vec![0.1, -2.0 / 3.0], vec![1e-300, 7.0]],
                distance,
                criterion: 1.0 / 3.0,
            };
            let path = dir.path().join("model.txt");
            save_cluster_model(&model, &path).unwrap();
            assert_eq!(load_cluster_model(&path).unwrap(), model);
        }
        assert!(parse_cluster_model("# n=2 distance=squared m=1 criterion=0\n1\n", Path::new("x")).is_err());
    }

    #[test]
    fn assignment_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.csv");
        let ids = vec!["traj_000".to_string(), "traj_001".to_string()];
        save_assignment(&ids, &Assignment { labels: vec![2, 1] }, &path).unwrap();
        assert_eq!(
            load_assignment(&path).unwrap(),
            vec![("traj_000".to_string(), 2), ("traj_001".to_string(), 1)]
        );
    }
}
