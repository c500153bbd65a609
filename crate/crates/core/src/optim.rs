//! Particle swarm optimization over a box.
//!
//! Each iteration moves every particle with
//!
//! ```text
//! v_k <- W v_k + eta(0, r_p) (pbest_k - x_k) + eta(0, r_g) (gbest - x_k)
//! x_k <- x_k + v_k
//! ```
//!
//! where `eta(0, r)` is drawn uniformly per coordinate, then re-evaluates the
//! swarm and updates personal and global bests (minimization). Objective
//! evaluations within an iteration run in parallel; all random draws and the
//! best-update reduction are sequential, so a seed fixes the whole run.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PsoError {
    #[error("invalid search bounds: {0}")]
    InvalidBounds(String),
    #[error("invalid PSO configuration: {0}")]
    InvalidConfig(String),
    #[error("stop condition has no criterion")]
    NoStopCriterion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PsoConfig {
    /// `K`
    pub swarm_size: usize,
    /// `W`
    pub inertia: f64,
    /// `r_p`, range of the attraction towards the particle's own best.
    pub cognitive: f64,
    /// `r_g`, range of the attraction towards the swarm's best.
    pub social: f64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            swarm_size: 100,
            inertia: 0.6,
            cognitive: 1.5,
            social: 2.5,
        }
    }
}

impl PsoConfig {
    pub fn with_swarm_size(self, swarm_size: usize) -> Self {
        Self { swarm_size, ..self }
    }

    fn validate(&self) -> Result<(), PsoError> {
        if self.swarm_size == 0 {
            return Err(PsoError::InvalidConfig("swarm size must be >= 1".into()));
        }
        for (name, v) in [
            ("inertia", self.inertia),
            ("cognitive", self.cognitive),
            ("social", self.social),
        ] {
            if !v.is_finite() {
                return Err(PsoError::InvalidConfig(format!("{name} is not finite")));
            }
        }
        if self.cognitive < 0.0 || self.social < 0.0 {
            return Err(PsoError::InvalidConfig("attraction ranges must be >= 0".into()));
        }
        Ok(())
    }
}

/// Stop when `pi_best` moved by less than `tolerance` (relative) over the
/// last `window` iterations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stagnation {
    pub window: usize,
    pub tolerance: f64,
}

impl Default for Stagnation {
    fn default() -> Self {
        Self {
            window: 10,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct StopCondition {
    pub max_iterations: Option<usize>,
    /// Stop once the best objective value is `<=` this.
    pub target_value: Option<f64>,
    pub stagnation: Option<Stagnation>,
}

impl StopCondition {
    pub fn iterations(n: usize) -> Self {
        Self {
            max_iterations: Some(n),
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<(), PsoError> {
        if self.max_iterations.is_none() && self.target_value.is_none() && self.stagnation.is_none() {
            return Err(PsoError::NoStopCriterion);
        }
        if let Some(s) = self.stagnation {
            if s.window == 0 || !(s.tolerance >= 0.0) {
                return Err(PsoError::InvalidConfig("bad stagnation window/tolerance".into()));
            }
        }
        Ok(())
    }

    fn should_stop(&self, iteration: usize, history: &[f64]) -> bool {
        if self.max_iterations.is_some_and(|n| iteration >= n) {
            return true;
        }
        let best = *history.last().expect("history starts with the initial best");
        if self.target_value.is_some_and(|t| best <= t) {
            return true;
        }
        if let Some(s) = self.stagnation {
            if history.len() > s.window {
                let old = history[history.len() - 1 - s.window];
                let scale = old.abs().max(f64::MIN_POSITIVE);
                if old.is_finite() && (old - best).abs() <= s.tolerance * scale {
                    return true;
                }
            }
        }
        false
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, PsoError> {
        if lower.is_empty() {
            return Err(PsoError::InvalidBounds("zero-dimensional search space".into()));
        }
        if lower.len() != upper.len() {
            return Err(PsoError::InvalidBounds(format!(
                "{} lower vs {} upper bounds",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !l.is_finite() || !u.is_finite() || l > u {
                return Err(PsoError::InvalidBounds(format!("coordinate {i}: [{l}, {u}]")));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The same interval on every coordinate.
    pub fn uniform(dim: usize, lower: f64, upper: f64) -> Result<Self, PsoError> {
        Self::new(vec![lower; dim], vec![upper; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| v >= l && v <= u)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsoResult {
    pub best_point: Vec<f64>,
    pub best_value: f64,
    /// Global best value after initialization and after every iteration.
    pub history: Vec<f64>,
    /// Global best position after initialization and after every iteration.
    pub best_points: Vec<Vec<f64>>,
    pub iterations: usize,
    pub evaluations: usize,
}

/// PSO run builder.
pub struct Pso {
    config: PsoConfig,
    bounds: Bounds,
    seed: u64,
    initial: Vec<Vec<f64>>,
}

impl Pso {
    pub fn new(config: PsoConfig, bounds: Bounds) -> Result<Self, PsoError> {
        config.validate()?;
        Ok(Self {
            config,
            bounds,
            seed: 0,
            initial: Vec::new(),
        })
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Starting positions for the first particles (clamped into the box);
    /// remaining particles start uniformly at random.
    pub fn initial_positions(mut self, positions: Vec<Vec<f64>>) -> Result<Self, PsoError> {
        if positions.iter().any(|p| p.len() != self.bounds.dim()) {
            return Err(PsoError::InvalidConfig("initial position of wrong dimension".into()));
        }
        self.initial = positions;
        Ok(self)
    }

    pub fn minimize<F>(&self, objective: F, stop: &StopCondition) -> Result<PsoResult, PsoError>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        stop.validate()?;
        let eval = |x: &[f64]| {
            let v = objective(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };
        let dim = self.bounds.dim();
        let k = self.config.swarm_size;
        let (lo, hi) = (&self.bounds.lower, &self.bounds.upper);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);

        let mut positions: Vec<Vec<f64>> = Vec::with_capacity(k);
        let mut velocities: Vec<Vec<f64>> = Vec::with_capacity(k);
        for p in 0..k {
            let pos: Vec<f64> = match self.initial.get(p) {
                Some(init) => init.iter().enumerate().map(|(d, v)| v.clamp(lo[d], hi[d])).collect(),
                None => (0..dim).map(|d| uniform(&mut rng, lo[d], hi[d])).collect(),
            };
            let vel: Vec<f64> = (0..dim)
                .map(|d| {
                    let span = (hi[d] - lo[d]) / 10.0;
                    uniform(&mut rng, -span, span)
                })
                .collect();
            positions.push(pos);
            velocities.push(vel);
        }

        let mut values: Vec<f64> = positions.par_iter().map(|x| eval(x)).collect();
        let mut evaluations = k;
        let mut personal = positions.clone();
        let mut personal_values = values.clone();
        let mut best = argmin(&personal_values);
        let mut best_point = personal[best].clone();
        let mut best_value = personal_values[best];
        let mut history = vec![best_value];
        let mut best_points = vec![best_point.clone()];
        let mut iteration = 0;

        while !stop.should_stop(iteration, &history) {
            for p in 0..k {
                let (x, v) = (&mut positions[p], &mut velocities[p]);
                for d in 0..dim {
                    let eta_p = rng.gen::<f64>() * self.config.cognitive;
                    let eta_g = rng.gen::<f64>() * self.config.social;
                    let vmax = hi[d] - lo[d];
                    v[d] = (self.config.inertia * v[d]
                        + eta_p * (personal[p][d] - x[d])
                        + eta_g * (best_point[d] - x[d]))
                        .clamp(-vmax, vmax);
                    x[d] += v[d];
                    if x[d] < lo[d] {
                        x[d] = lo[d];
                        v[d] = 0.0;
                    } else if x[d] > hi[d] {
                        x[d] = hi[d];
                        v[d] = 0.0;
                    }
                }
            }
            values = positions.par_iter().map(|x| eval(x)).collect();
            evaluations += k;
            for p in 0..k {
                if values[p] < personal_values[p] {
                    personal_values[p] = values[p];
                    personal[p].clone_from(&positions[p]);
                }
            }
            best = argmin(&personal_values);
            if personal_values[best] < best_value {
                best_value = personal_values[best];
                best_point.clone_from(&personal[best]);
            }
            history.push(best_value);
            best_points.push(best_point.clone());
            iteration += 1;
        }

        Ok(PsoResult {
            best_point,
            best_value,
            history,
            best_points,
            iterations: iteration,
            evaluations,
        })
    }

    /// Maximizes by minimizing `-objective`; the reported values are un-negated.
    pub fn maximize<F>(&self, objective: F, stop: &StopCondition) -> Result<PsoResult, PsoError>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let stop = StopCondition {
            target_value: stop.target_value.map(|t| -t),
            ..stop.clone()
        };
        let mut r = self.minimize(|x| -objective(x), &stop)?;
        r.best_value = -r.best_value;
        r.history.iter_mut().for_each(|v| *v = -*v);
        Ok(r)
    }
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + rng.gen::<f64>() * (hi - lo)
}

/// First index of the smallest value.
fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

pub fn pso_minimize<F>(
    objective: F,
    bounds: &Bounds,
    config: &PsoConfig,
    stop: &StopCondition,
    seed: u64,
) -> Result<PsoResult, PsoError>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    Pso::new(config.clone(), bounds.clone())?
        .seed(seed)
        .minimize(objective, stop)
}

pub fn pso_maximize<F>(
    objective: F,
    bounds: &Bounds,
    config: &PsoConfig,
    stop: &StopCondition,
    seed: u64,
) -> Result<PsoResult, PsoError>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    Pso::new(config.clone(), bounds.clone())?
        .seed(seed)
        .maximize(objective, stop)
}
