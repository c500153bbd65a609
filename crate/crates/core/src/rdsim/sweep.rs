//! Resumable parameter sweeps writing one trajectory directory per run and a
//! `D1,D2,seed,status,path` manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{simulate, RdParams, SimError};
use crate::data::io::{read_manifest, save_trajectory, TRAJECTORY_MANIFEST};
use crate::data::DataError;

pub const SWEEP_MANIFEST: &str = "sweep.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SeedPolicy {
    /// Every run uses the same initial-condition seed.
    Fixed { seed: u64 },
    /// Seed mixed from `base`, the coefficients and the replicate index.
    Derived { base: u64 },
}

impl SeedPolicy {
    pub fn seed_for(&self, d1: f64, d2: f64, replicate: usize) -> u64 {
        match *self {
            SeedPolicy::Fixed { seed } => seed,
            SeedPolicy::Derived { base } => {
                let mut h = splitmix(base);
                for v in [d1.to_bits(), d2.to_bits(), replicate as u64] {
                    h = splitmix(h ^ v);
                }
                h
            }
        }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepStatus {
    Ok,
    /// The run diverged; the message carries the step.
    BlowUp(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub d1: f64,
    pub d2: f64,
    pub replicate: usize,
    pub seed: u64,
    pub status: SweepStatus,
    /// Relative to the sweep's output directory.
    pub path: PathBuf,
    /// False when a complete earlier output was reused.
    pub computed: bool,
}

fn run_dir(d1: f64, d2: f64, replicate: usize) -> PathBuf {
    PathBuf::from(format!("rd_D1-{d1:.2}_D2-{d2:.2}_r{replicate}"))
}

/// Whether `dir` holds a finished run with exactly these parameters.
fn is_complete(dir: &Path, p: &RdParams) -> bool {
    let Ok(meta) = read_manifest(&dir.join(TRAJECTORY_MANIFEST)) else {
        return false;
    };
    let expected = metadata(p);
    if expected.iter().any(|(k, v)| meta.get(k) != Some(v)) {
        return false;
    }
    if meta.get("frames") != Some(&(p.frames + 1).to_string()) {
        return false;
    }
    (0..=p.frames).all(|k| dir.join(format!("frame_{k:04}.pgm")).exists())
}

fn metadata(p: &RdParams) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    m.insert("D1".into(), p.d1.to_string());
    m.insert("D2".into(), p.d2.to_string());
    m.insert("seed".into(), p.seed.to_string());
    m.insert(
        "params".into(),
        serde_json::to_string(p).expect("params serialize"),
    );
    m
}

/// Simulates every `(D1, D2)` pair `replicates` times into `out_dir`.
///
/// Runs whose directory already holds a complete trajectory with identical
/// parameters are skipped. A diverging run is recorded in the manifest and
/// does not stop the sweep.
pub fn sweep(
    grid: &[(f64, f64)],
    base: &RdParams,
    seeds: SeedPolicy,
    replicates: usize,
    out_dir: &Path,
) -> Result<Vec<SweepEntry>, SimError> {
    if grid.is_empty() || replicates == 0 {
        return Err(SimError::EmptyGrid);
    }
    base.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| DataError::io(out_dir, e))?;
    let jobs: Vec<(f64, f64, usize)> = grid
        .iter()
        .flat_map(|&(d1, d2)| (0..replicates).map(move |r| (d1, d2, r)))
        .collect();
    let entries = jobs
        .par_iter()
        .map(|&(d1, d2, replicate)| -> Result<SweepEntry, SimError> {
            let seed = seeds.seed_for(d1, d2, replicate);
            let p = RdParams {
                d1,
                d2,
                seed,
                ..base.clone()
            };
            let rel = run_dir(d1, d2, replicate);
            let dir = out_dir.join(&rel);
            let mut entry = SweepEntry {
                d1,
                d2,
                replicate,
                seed,
                status: SweepStatus::Ok,
                path: rel,
                computed: false,
            };
            if is_complete(&dir, &p) {
                return Ok(entry);
            }
            entry.computed = true;
            match simulate(&p) {
                Ok(traj) => save_trajectory(&traj, &dir, &metadata(&p))?,
                Err(SimError::BlowUp { step, frame, .. }) => {
                    entry.status = SweepStatus::BlowUp(format!("step {step} frame {frame}"));
                }
                Err(e) => return Err(e),
            }
            Ok(entry)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut csv = String::from("D1,D2,seed,status,path\n");
    for e in &entries {
        let status = match &e.status {
            SweepStatus::Ok => "ok".to_string(),
            SweepStatus::BlowUp(m) => format!("blowup ({m})"),
        };
        csv.push_str(&format!("{},{},{},{},{}\n", e.d1, e.d2, e.seed, status, e.path.display()));
    }
    let manifest = out_dir.join(SWEEP_MANIFEST);
    fs::write(&manifest, csv).map_err(|e| DataError::io(manifest, e))?;
    Ok(entries)
}
