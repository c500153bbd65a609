//! Two-species reaction-diffusion system on an `N x N` grid.
//!
//! ```text
//! dx1/dt = D1 (mu1 - x1) + f1(x1, x2)
//! dx2/dt = D2 (mu2 - x2) + f2(x1, x2)
//! ```
//!
//! where `mu` is the mean over the adjacent cells. Two reaction terms are
//! available (see [`Dynamics`]); both are integrated with forward Euler,
//! every cell updated from the pre-step state.

mod sweep;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{DataError, Image, StTrajectory};

pub use sweep::{sweep, SeedPolicy, SweepEntry, SweepStatus, SWEEP_MANIFEST};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation parameters: {0}")]
    InvalidParams(String),
    #[error("blow-up at step {step} (frame {frame}) with D1={d1}, D2={d2}")]
    BlowUp { d1: f64, d2: f64, step: usize, frame: usize },
    #[error("empty parameter grid")]
    EmptyGrid,
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Local reaction terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Dynamics {
    /// `f1 = R1 x1 x2 - x1 + R2`, `f2 = R3 x1 x2 + R4`, concentrations
    /// clamped at zero after every step. With the default constants the
    /// uniform equilibrium is `(4, 4)`.
    Turing,
    /// `f1 = R1 x1 x2' - x1 + R2`, `f2 = R3 x1 x1' - x2 + R4`, where `x'` is
    /// the transposed field when `transposed` is set and `x` otherwise.
    Printed { transposed: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Edge cells average over the neighbors that exist.
    #[default]
    Truncated,
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RdParams {
    pub d1: f64,
    pub d2: f64,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub r4: f64,
    pub dt: f64,
    pub steps_per_frame: usize,
    /// Horizon `T`; `T + 1` frames are recorded.
    pub frames: usize,
    pub grid_n: usize,
    pub seed: u64,
    /// Initial state: uniform noise in `[-init_range, init_range]` around the
    /// uniform equilibrium.
    pub init_range: f64,
    pub render_lo: f64,
    pub render_hi: f64,
    pub dynamics: Dynamics,
    pub boundary: Boundary,
    /// Round rendered frames to 8 bits, as they are after a save/load cycle.
    pub quantize: bool,
}

impl Default for RdParams {
    fn default() -> Self {
        Self {
            d1: 1.0,
            d2: 1.0,
            r1: 1.0,
            r2: -12.0,
            r3: -1.0,
            r4: 16.0,
            dt: 0.01,
            steps_per_frame: 50,
            frames: 60,
            grid_n: 32,
            seed: 0,
            init_range: 1.0,
            render_lo: -10.0,
            render_hi: 10.0,
            dynamics: Dynamics::Turing,
            boundary: Boundary::Truncated,
            quantize: true,
        }
    }
}

impl RdParams {
    pub fn with_diffusion(self, d1: f64, d2: f64) -> Self {
        Self { d1, d2, ..self }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidParams(m.to_string()));
        let all = [
            self.d1,
            self.d2,
            self.r1,
            self.r2,
            self.r3,
            self.r4,
            self.dt,
            self.init_range,
            self.render_lo,
            self.render_hi,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("non-finite parameter");
        }
        if self.d1 < 0.0 || self.d2 < 0.0 {
            return bad("diffusion coefficients must be >= 0");
        }
        if self.dt <= 0.0 {
            return bad("dt must be > 0");
        }
        if self.grid_n < 2 {
            return bad("grid must be at least 2x2");
        }
        if self.steps_per_frame == 0 {
            return bad("steps_per_frame must be >= 1");
        }
        if self.render_lo >= self.render_hi {
            return bad("render window is empty");
        }
        if self.init_range < 0.0 {
            return bad("init_range must be >= 0");
        }
        Ok(())
    }

    /// Uniform equilibrium used as the center of the initial noise. For the
    /// printed dynamics this is the real root of
    /// `R1 R3 x^3 + (R1 R4 - 1) x + R2 = 0` closest to zero.
    pub fn equilibrium(&self) -> (f64, f64) {
        match self.dynamics {
            Dynamics::Turing => {
                let product = -self.r4 / self.r3;
                let x1 = self.r1 * product + self.r2;
                (x1, product / x1)
            }
            Dynamics::Printed { .. } => {
                let g = |x: f64| self.r1 * self.r3 * x.powi(3) + (self.r1 * self.r4 - 1.0) * x + self.r2;
                let mut best: Option<f64> = None;
                let step = 0.01;
                for i in -10_000..10_000 {
                    let (a, b) = (i as f64 * step, (i + 1) as f64 * step);
                    if g(a) == 0.0 || g(a).signum() != g(b).signum() {
                        let root = bisect(&g, a, b);
                        if best.map_or(true, |r| root.abs() < r.abs()) {
                            best = Some(root);
                        }
                    }
                }
                let x1 = best.unwrap_or(0.0);
                (x1, self.r4 + self.r3 * x1 * x1)
            }
        }
    }
}

fn bisect(g: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if g(a) == 0.0 {
            return a;
        }
        if g(a).signum() == g(m).signum() {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Concentration fields, row-major `N x N`.
#[derive(Debug, Clone, PartialEq)]
pub struct RdState {
    pub n: usize,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
}

impl RdState {
    pub fn uniform(n: usize, x1: f64, x2: f64) -> Self {
        Self {
            n,
            x1: vec![x1; n * n],
            x2: vec![x2; n * n],
        }
    }

    /// Seeded uniform noise around the equilibrium.
    pub fn initial(p: &RdParams) -> Self {
        let (c1, c2) = p.equilibrium();
        let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
        let n = p.grid_n;
        let mut noise = |c: f64| -> Vec<f64> {
            (0..n * n)
                .map(|_| {
                    if p.init_range > 0.0 {
                        c + rng.gen_range(-p.init_range..=p.init_range)
                    } else {
                        c
                    }
                })
                .collect()
        };
        let x1 = noise(c1);
        let x2 = noise(c2);
        Self { n, x1, x2 }
    }

    fn max_abs(&self) -> f64 {
        self.x1
            .iter()
            .chain(&self.x2)
            .fold(0.0f64, |m, v| if v.is_finite() { m.max(v.abs()) } else { f64::INFINITY })
    }
}

fn neighbors(n: usize, i: usize, j: usize, boundary: Boundary) -> impl Iterator<Item = usize> {
    let (i, j) = (i as isize, j as isize);
    let size = n as isize;
    [(-1, 0), (1, 0), (0, -1), (0, 1)].into_iter().filter_map(move |(di, dj)| {
        let (a, b) = (i + di, j + dj);
        match boundary {
            Boundary::Periodic => Some((a.rem_euclid(size) * size + b.rem_euclid(size)) as usize),
            Boundary::Truncated => {
                ((0..size).contains(&a) && (0..size).contains(&b)).then(|| (a * size + b) as usize)
            }
        }
    })
}

/// Mean of the adjacent cells of `(i, j)` (2 at corners, 3 on edges, 4 inside
/// for truncated boundaries).
pub fn neighbor_mean(field: &[f64], n: usize, i: usize, j: usize, boundary: Boundary) -> f64 {
    let (sum, count) = neighbors(n, i, j, boundary).fold((0.0, 0usize), |(s, c), k| (s + field[k], c + 1));
    sum / count as f64
}

/// `mu - x` as the mean of differences, exactly zero on uniform fields.
fn diffusion(field: &[f64], n: usize, i: usize, j: usize, boundary: Boundary) -> f64 {
    let x = field[i * n + j];
    let (sum, count) = neighbors(n, i, j, boundary).fold((0.0, 0usize), |(s, c), k| (s + (field[k] - x), c + 1));
    sum / count as f64
}

/// Right-hand side `(dx1/dt, dx2/dt)` at every cell.
pub fn rhs(state: &RdState, p: &RdParams) -> (Vec<f64>, Vec<f64>) {
    let n = state.n;
    let mut d1 = vec![0.0; n * n];
    let mut d2 = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let k = i * n + j;
            let (a, b) = (state.x1[k], state.x2[k]);
            let (f1, f2) = match p.dynamics {
                Dynamics::Turing => (p.r1 * a * b - a + p.r2, p.r3 * a * b + p.r4),
                Dynamics::Printed { transposed } => {
                    let kt = if transposed { j * n + i } else { k };
                    (
                        p.r1 * a * state.x2[kt] - a + p.r2,
                        p.r3 * a * state.x1[kt] - b + p.r4,
                    )
                }
            };
            d1[k] = p.d1 * diffusion(&state.x1, n, i, j, p.boundary) + f1;
            d2[k] = p.d2 * diffusion(&state.x2, n, i, j, p.boundary) + f2;
        }
    }
    (d1, d2)
}

/// One forward-Euler step of size `p.dt` (no validation, so `dt = 0` is allowed).
pub fn step(state: &RdState, p: &RdParams) -> RdState {
    let (d1, d2) = rhs(state, p);
    let clamp = matches!(p.dynamics, Dynamics::Turing);
    let advance = |x: &[f64], d: &[f64]| -> Vec<f64> {
        x.iter()
            .zip(d)
            .map(|(x, d)| {
                let v = x + p.dt * d;
                if clamp && v < 0.0 {
                    0.0
                } else {
                    v
                }
            })
            .collect()
    };
    RdState {
        n: state.n,
        x1: advance(&state.x1, &d1),
        x2: advance(&state.x2, &d2),
    }
}

/// `clamp((x1 - lo) / (hi - lo), 0, 1)`
pub fn render_frame(state: &RdState, p: &RdParams) -> Image {
    let n = state.n;
    let span = p.render_hi - p.render_lo;
    let img = Image::from_fn(n, n, |r, c| ((state.x1[r * n + c] - p.render_lo) / span).clamp(0.0, 1.0))
        .expect("clamped intensities are valid");
    if p.quantize {
        img.quantized()
    } else {
        img
    }
}

/// States at frame times `0..=T`.
pub fn simulate_states(p: &RdParams) -> Result<Vec<RdState>, SimError> {
    p.validate()?;
    let mut state = RdState::initial(p);
    let mut out = Vec::with_capacity(p.frames + 1);
    out.push(state.clone());
    for frame in 1..=p.frames {
        for s in 0..p.steps_per_frame {
            state = step(&state, p);
            if state.max_abs() > 1e6 {
                return Err(SimError::BlowUp {
                    d1: p.d1,
                    d2: p.d2,
                    step: (frame - 1) * p.steps_per_frame + s + 1,
                    frame,
                });
            }
        }
        out.push(state.clone());
    }
    Ok(out)
}

pub fn simulate(p: &RdParams) -> Result<StTrajectory, SimError> {
    let frames = simulate_states(p)?.iter().map(|s| render_frame(s, p)).collect();
    Ok(StTrajectory::new(frames)?)
}
