//! Pipeline configuration: one TOML file with a section per stage.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use svmstl::clustering::DtwConfig;
use svmstl::features::ExtractorConfig;
use svmstl::inference::BoostConfig;
use svmstl::optim::{PsoConfig, StopCondition};
use svmstl::predicates::SvmConfig;
use svmstl::rdsim::{RdParams, SeedPolicy};
use svmstl::synthesis::SeedMode;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Seed of every randomized stage.
    pub seed: u64,
    /// Root directory of all stage outputs.
    pub out: PathBuf,
    pub simulate: SimulateConfig,
    pub extract: ExtractorConfig,
    pub cluster_images: ImageClusterConfig,
    pub predicates: SvmConfig,
    pub cluster_trajectories: TrajectoryClusterConfig,
    pub learn_formula: FormulaConfig,
    pub synthesize: SynthesizeConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: PathBuf::from("svmstl-run"),
            simulate: SimulateConfig::default(),
            extract: ExtractorConfig::default(),
            cluster_images: ImageClusterConfig::default(),
            predicates: SvmConfig::default(),
            cluster_trajectories: TrajectoryClusterConfig::default(),
            learn_formula: FormulaConfig::default(),
            synthesize: SynthesizeConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    /// `(D1, D2)` pairs; defaults to the 3x3 grid over `{1, 5, 9}`.
    pub regimes: Vec<[f64; 2]>,
    pub replicates: usize,
    /// Derive a distinct initial-condition seed per run from the global
    /// seed, or reuse the global seed for every run.
    pub vary_seeds: bool,
    pub params: RdParams,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        let axis = [1.0, 5.0, 9.0];
        Self {
            regimes: axis
                .iter()
                .flat_map(|&a| axis.iter().map(move |&b| [a, b]))
                .collect(),
            replicates: 1,
            vary_seeds: false,
            params: RdParams::default(),
        }
    }
}

impl SimulateConfig {
    pub fn seed_policy(&self, seed: u64) -> SeedPolicy {
        if self.vary_seeds {
            SeedPolicy::Derived { base: seed }
        } else {
            SeedPolicy::Fixed { seed }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImageClusterConfig {
    /// Number of spatial classes `n_I`.
    pub n: usize,
    /// Extra cluster counts whose criterion is reported to guide the choice of `n`.
    pub curve: Vec<usize>,
    /// Use every `frame_stride`-th frame of each trajectory.
    pub frame_stride: usize,
    pub pso: PsoConfig,
    pub stop: StopCondition,
    /// `cluster -> new label`; 0 drops the cluster's images. Labels must end
    /// up as `1..=n'`.
    pub relabel: BTreeMap<String, usize>,
    pub montage_samples: usize,
}

impl Default for ImageClusterConfig {
    fn default() -> Self {
        Self {
            n: 4,
            curve: vec![3, 4, 5, 6],
            frame_stride: 1,
            pso: PsoConfig::default().with_swarm_size(30),
            stop: StopCondition::iterations(100),
            relabel: BTreeMap::new(),
            montage_samples: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectoryClusterConfig {
    /// Number of spatio-temporal classes `n_S`.
    pub n: usize,
    pub curve: Vec<usize>,
    pub dtw: DtwConfig,
    pub pso: PsoConfig,
    pub stop: StopCondition,
    pub relabel: BTreeMap<String, usize>,
}

impl Default for TrajectoryClusterConfig {
    fn default() -> Self {
        Self {
            n: 3,
            curve: Vec::new(),
            dtw: DtwConfig::default(),
            pso: PsoConfig::default().with_swarm_size(20),
            stop: StopCondition::iterations(30),
            relabel: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FormulaConfig {
    pub folds: usize,
    pub boost: BoostConfig,
}

impl Default for FormulaConfig {
    fn default() -> Self {
        Self {
            folds: 2,
            boost: BoostConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesizeConfig {
    /// Target formula over the learned predicates `h1..hn`; the pipeline
    /// skips synthesis while it is unset.
    pub formula: Option<String>,
    /// Box over `(D1, D2)`.
    pub lower: [f64; 2],
    pub upper: [f64; 2],
    pub pso: PsoConfig,
    pub stop: StopCondition,
    pub seed_mode: SeedMode,
    /// Initial-condition seed of every simulation; the global seed when unset.
    pub simulation_seed: Option<u64>,
    pub resolution: f64,
}

impl Default for SynthesizeConfig {
    fn default() -> Self {
        Self {
            formula: None,
            lower: [0.5, 0.5],
            upper: [10.0, 35.0],
            pso: PsoConfig::default().with_swarm_size(20),
            stop: StopCondition::iterations(20),
            seed_mode: SeedMode::Fixed,
            simulation_seed: None,
            resolution: 1e-6,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::user(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::user(format!("invalid config {}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::user(m));
        if self.simulate.regimes.is_empty() || self.simulate.replicates == 0 {
            return bad("simulate: need at least one regime and one replicate".into());
        }
        self.simulate
            .params
            .validate()
            .map_err(|e| CliError::user(format!("simulate.params: {e}")))?;
        if self.cluster_images.n == 0 || self.cluster_images.curve.contains(&0) {
            return bad("cluster_images: cluster counts must be >= 1".into());
        }
        if self.cluster_images.frame_stride == 0 {
            return bad("cluster_images.frame_stride must be >= 1".into());
        }
        if self.cluster_trajectories.n == 0 || self.cluster_trajectories.curve.contains(&0) {
            return bad("cluster_trajectories: cluster counts must be >= 1".into());
        }
        for (stage, map) in [
            ("cluster_images", &self.cluster_images.relabel),
            ("cluster_trajectories", &self.cluster_trajectories.relabel),
        ] {
            if let Some(k) = map
                .keys()
                .find(|k| k.parse::<usize>().map_or(true, |v| v == 0))
            {
                return bad(format!("{stage}.relabel: key {k:?} is not a cluster label"));
            }
        }
        if self.learn_formula.folds < 2 {
            return bad("learn_formula.folds must be >= 2".into());
        }
        let s = &self.synthesize;
        if (0..2)
            .any(|d| !(s.lower[d] >= 0.0 && s.lower[d] <= s.upper[d] && s.upper[d].is_finite()))
        {
            return bad("synthesize: need 0 <= lower <= upper < inf".into());
        }
        Ok(())
    }
}
