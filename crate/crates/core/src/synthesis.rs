//! Parameter synthesis: PSO search for the system parameters whose generated
//! trajectory maximizes robustness `rho(phi, h(S_pi), 0)`.

use std::collections::HashMap;
use std::error::Error as StdError;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{StSignal, StTrajectory};
use crate::features::FeatureExtractor;
use crate::logic::{robustness_weighted, EvalError, Formula};
use crate::optim::{Bounds, Pso, PsoConfig, PsoError, StopCondition};
use crate::predicates::{trajectory_to_signal, PredicateSuite};
use crate::rdsim::{simulate, RdParams};

pub type BoxError = Box<dyn StdError + Send + Sync>;

#[derive(Debug, Error)]
pub enum SynthesisError {
    #[error("formula horizon {formula} exceeds the system horizon {system}")]
    Horizon { formula: usize, system: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("re-simulating the best parameters gave rho={again}, search recorded rho={recorded}")]
    NotReproducible { recorded: f64, again: f64 },
    #[error("witness generation failed: {0}")]
    Witness(String),
    #[error(transparent)]
    Pso(#[from] PsoError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// A parametric system `pi -> S_pi` over a box `Pi`.
pub trait SystemUnderSynthesis: Sync {
    fn space(&self) -> &Bounds;
    /// Last time index of every generated trajectory.
    fn horizon(&self) -> usize;
    fn generate(&self, pi: &[f64], seed: u64) -> Result<StTrajectory, BoxError>;
}

/// Turns a generated trajectory into the signal the formula is monitored on.
pub trait SignalMap: Sync {
    fn signal(&self, trajectory: &StTrajectory) -> Result<StSignal, BoxError>;
}

/// The operator `h` of a predicate suite.
pub struct SuiteSignal<'a> {
    pub suite: &'a PredicateSuite,
    pub extractor: &'a dyn FeatureExtractor,
}

impl SignalMap for SuiteSignal<'_> {
    fn signal(&self, trajectory: &StTrajectory) -> Result<StSignal, BoxError> {
        Ok(trajectory_to_signal(trajectory, self.suite, self.extractor)?)
    }
}

/// The reaction-diffusion benchmark with `pi = (D1, D2)`.
pub struct RdSystem {
    pub base: RdParams,
    pub space: Bounds,
}

impl RdSystem {
    pub fn new(base: RdParams, space: Bounds) -> Result<Self, SynthesisError> {
        if space.dim() != 2 {
            return Err(SynthesisError::Config("RD parameter space is (D1, D2)".into()));
        }
        if space.lower().iter().any(|l| *l < 0.0) {
            return Err(SynthesisError::Config("diffusion coefficients must be >= 0".into()));
        }
        Ok(Self { base, space })
    }

    pub fn params(&self, pi: &[f64], seed: u64) -> RdParams {
        RdParams {
            d1: pi[0],
            d2: pi[1],
            seed,
            ..self.base.clone()
        }
    }
}

impl SystemUnderSynthesis for RdSystem {
    fn space(&self) -> &Bounds {
        &self.space
    }

    fn horizon(&self) -> usize {
        self.base.frames
    }

    fn generate(&self, pi: &[f64], seed: u64) -> Result<StTrajectory, BoxError> {
        Ok(simulate(&self.params(pi, seed))?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedMode {
    /// Every evaluation simulates with the same seed.
    Fixed,
    /// Each evaluation draws a seed from the base seed, the parameters and
    /// the number of earlier visits to them.
    PerEvaluation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthesisConfig {
    pub pso: PsoConfig,
    pub stop: StopCondition,
    /// PSO seed.
    pub seed: u64,
    /// Trajectory generation seed.
    pub simulation_seed: u64,
    pub seed_mode: SeedMode,
    /// Parameters are snapped to this grid before simulation and caching.
    pub resolution: f64,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            pso: PsoConfig::default(),
            stop: StopCondition::iterations(20),
            seed: 0,
            simulation_seed: 0,
            seed_mode: SeedMode::Fixed,
            resolution: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub pi: Vec<f64>,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct SynthesisResult {
    pub pi: Vec<f64>,
    pub rho: f64,
    /// Seed the witness was generated with.
    pub seed: u64,
    /// Objective evaluations requested by the swarm.
    pub evaluations: usize,
    /// Evaluations that ran the generator (cache misses).
    pub simulations: usize,
    /// Best robustness after initialization and after every iteration.
    pub history: Vec<f64>,
    pub best_points: Vec<Vec<f64>>,
    pub failures: Vec<Failure>,
    pub witness: Option<StTrajectory>,
    pub witness_signal: Option<StSignal>,
}

#[derive(Default)]
struct Memo {
    rho: HashMap<Vec<i64>, (f64, u64)>,
    visits: HashMap<Vec<i64>, u64>,
    simulations: usize,
    failures: Vec<Failure>,
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn evaluate(
    system: &dyn SystemUnderSynthesis,
    map: &dyn SignalMap,
    formula: &Formula,
    pi: &[f64],
    seed: u64,
) -> Result<(f64, StTrajectory, StSignal), BoxError> {
    let trajectory = system.generate(pi, seed)?;
    let signal = map.signal(&trajectory)?;
    let rho = robustness_weighted(&signal, formula, 0)?;
    Ok((rho, trajectory, signal))
}

/// Maximizes `rho(formula, map(system(pi)), 0)` over the system's box.
///
/// Generator or monitoring failures score `-inf` and are listed in the
/// result. The returned `rho` is re-derived from a fresh simulation of the
/// returned parameters.
pub fn synthesize(
    system: &dyn SystemUnderSynthesis,
    formula: &Formula,
    map: &dyn SignalMap,
    cfg: &SynthesisConfig,
) -> Result<SynthesisResult, SynthesisError> {
    synthesize_from(system, formula, map, cfg, Vec::new())
}

/// [`synthesize`] with explicit starting positions for the first particles.
pub fn synthesize_from(
    system: &dyn SystemUnderSynthesis,
    formula: &Formula,
    map: &dyn SignalMap,
    cfg: &SynthesisConfig,
    initial: Vec<Vec<f64>>,
) -> Result<SynthesisResult, SynthesisError> {
    if formula.horizon() > system.horizon() {
        return Err(SynthesisError::Horizon {
            formula: formula.horizon(),
            system: system.horizon(),
        });
    }
    if !(cfg.resolution > 0.0 && cfg.resolution.is_finite()) {
        return Err(SynthesisError::Config("resolution must be positive".into()));
    }
    let bounds = system.space();
    let snap = |x: &[f64]| -> (Vec<i64>, Vec<f64>) {
        let key: Vec<i64> = x.iter().map(|v| (v / cfg.resolution).round() as i64).collect();
        let pi = key
            .iter()
            .zip(bounds.lower().iter().zip(bounds.upper()))
            .map(|(q, (lo, hi))| (*q as f64 * cfg.resolution).clamp(*lo, *hi))
            .collect();
        (key, pi)
    };
    let memo = Mutex::new(Memo::default());

    let objective = |x: &[f64]| -> f64 {
        let (key, pi) = snap(x);
        let seed = {
            let mut m = memo.lock().unwrap();
            match cfg.seed_mode {
                SeedMode::Fixed => {
                    if let Some((rho, _)) = m.rho.get(&key) {
                        return *rho;
                    }
                    cfg.simulation_seed
                }
                SeedMode::PerEvaluation => {
                    let visit = m.visits.entry(key.clone()).or_insert(0);
                    *visit += 1;
                    key.iter()
                        .fold(mix(cfg.simulation_seed ^ *visit), |h, q| mix(h ^ *q as u64))
                }
            }
        };
        let (rho, failure) = match evaluate(system, map, formula, &pi, seed) {
            Ok((rho, _, _)) if !rho.is_nan() => (rho, None),
            Ok(_) => (f64::NEG_INFINITY, Some("robustness is NaN".to_string())),
            Err(e) => (f64::NEG_INFINITY, Some(e.to_string())),
        };
        let mut m = memo.lock().unwrap();
        m.simulations += 1;
        if let Some(message) = failure {
            m.failures.push(Failure { pi: pi.clone(), message });
        }
        let slot = m.rho.entry(key).or_insert((rho, seed));
        if rho > slot.0 {
            *slot = (rho, seed);
        }
        rho
    };

    let run = Pso::new(cfg.pso.clone(), bounds.clone())?
        .seed(cfg.seed)
        .initial_positions(initial)?
        .maximize(objective, &cfg.stop)?;
    let mut memo = memo.into_inner().unwrap();
    memo.failures.sort_by(|a, b| a.pi.partial_cmp(&b.pi).unwrap_or(std::cmp::Ordering::Equal));

    let (key, pi) = snap(&run.best_point);
    let (recorded, seed) = memo.rho.get(&key).copied().unwrap_or((run.best_value, cfg.simulation_seed));
    let (witness, witness_signal) = if recorded.is_finite() {
        let (again, t, s) = evaluate(system, map, formula, &pi, seed).map_err(|e| SynthesisError::Witness(e.to_string()))?;
        if again.to_bits() != recorded.to_bits() {
            return Err(SynthesisError::NotReproducible { recorded, again });
        }
        (Some(t), Some(s))
    } else {
        (None, None)
    };
    Ok(SynthesisResult {
        pi,
        rho: recorded,
        seed,
        evaluations: run.evaluations,
        simulations: memo.simulations,
        history: run.history,
        best_points: run.best_points,
        failures: memo.failures,
        witness,
        witness_signal,
    })
}
