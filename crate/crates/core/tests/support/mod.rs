//! Independent oracles and generators shared by the integration suites and
//! the acceptance harness.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use svmstl::data::{LabelKind, LabeledDataset, StSignal};
use svmstl::inference::{PrimitiveChoice, StlTree};
use svmstl::logic::{parse_formula, satisfies, Cmp, Formula, TemporalKind};

pub const GRID: [f64; 7] = [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0];

/// Qualitative semantics, straight from the recursive definition.
pub fn sat(s: &StSignal, f: &Formula, k: usize) -> bool {
    match f {
        Formula::True => true,
        Formula::Pred(p) => {
            let v = s.at(k, p.class - 1);
            match p.cmp {
                Cmp::Gt => v > p.threshold,
                Cmp::Le => v <= p.threshold,
            }
        }
        Formula::Not(c) => !sat(s, c, k),
        Formula::And(cs) | Formula::WAnd { children: cs, .. } => cs.iter().all(|c| sat(s, c, k)),
        Formula::Or(cs) | Formula::WOr { children: cs, .. } => cs.iter().any(|c| sat(s, c, k)),
        Formula::Always { a, b, child } => (k + a..=k + b).all(|t| sat(s, child, t)),
        Formula::Eventually { a, b, child } => (k + a..=k + b).any(|t| sat(s, child, t)),
    }
}

/// Unweighted robustness, straight from the recursive definition.
pub fn rho(s: &StSignal, f: &Formula, k: usize) -> f64 {
    match f {
        Formula::True => f64::MAX,
        Formula::Pred(p) => {
            let v = s.at(k, p.class - 1);
            match p.cmp {
                Cmp::Gt => v - p.threshold,
                Cmp::Le => p.threshold - v,
            }
        }
        Formula::Not(c) => -rho(s, c, k),
        Formula::And(cs) | Formula::WAnd { children: cs, .. } => cs
            .iter()
            .map(|c| rho(s, c, k))
            .fold(f64::INFINITY, f64::min),
        Formula::Or(cs) | Formula::WOr { children: cs, .. } => cs
            .iter()
            .map(|c| rho(s, c, k))
            .fold(f64::NEG_INFINITY, f64::max),
        Formula::Always { a, b, child } => (k + a..=k + b)
            .map(|t| rho(s, child, t))
            .fold(f64::INFINITY, f64::min),
        Formula::Eventually { a, b, child } => (k + a..=k + b)
            .map(|t| rho(s, child, t))
            .fold(f64::NEG_INFINITY, f64::max),
    }
}

pub fn random_formula(rng: &mut ChaCha8Rng, depth: usize, dims: usize, budget: usize) -> Formula {
    let leaf = depth == 0 || rng.gen_bool(0.25);
    if leaf {
        if rng.gen_bool(0.05) {
            return Formula::True;
        }
        let cmp = if rng.gen_bool(0.5) { Cmp::Gt } else { Cmp::Le };
        let r = if rng.gen_bool(0.5) {
            GRID[rng.gen_range(0..GRID.len())]
        } else {
            rng.gen_range(-2.0..2.0)
        };
        return Formula::pred(rng.gen_range(1..=dims), cmp, r);
    }
    match rng.gen_range(0..5) {
        0 => Formula::not(random_formula(rng, depth - 1, dims, budget)),
        1 | 2 => {
            let n = rng.gen_range(1..=3);
            let cs = (0..n)
                .map(|_| random_formula(rng, depth - 1, dims, budget))
                .collect();
            if rng.gen_bool(0.5) {
                Formula::And(cs)
            } else {
                Formula::Or(cs)
            }
        }
        _ => {
            let a = rng.gen_range(0..=budget / 2);
            let b = rng.gen_range(a..=budget / 2);
            let child = random_formula(rng, depth - 1, dims, budget / 2);
            if rng.gen_bool(0.5) {
                Formula::always(a, b, child).unwrap()
            } else {
                Formula::eventually(a, b, child).unwrap()
            }
        }
    }
}

pub fn random_signal(rng: &mut ChaCha8Rng, len: usize, dims: usize) -> StSignal {
    let rows = (0..len)
        .map(|_| {
            (0..dims)
                .map(|_| {
                    if rng.gen_bool(0.5) {
                        GRID[rng.gen_range(0..GRID.len())]
                    } else {
                        rng.gen_range(-2.5..2.5)
                    }
                })
                .collect()
        })
        .collect();
    StSignal::new(rows).unwrap()
}

/// Formula of depth at most 3 and a signal of horizon `T <= 10` long enough
/// to evaluate it at 0.
pub fn random_case(seed: u64) -> (Formula, StSignal) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = rng.gen_range(1..=3);
    let t = rng.gen_range(0..=10);
    let f = random_formula(&mut rng, 3, dims, t);
    let s = random_signal(&mut rng, t + 1, dims);
    (f, s)
}

/// Cheapest monotone alignment by walking every path. Partial sums never
/// decrease, so a walk that already costs at least the best total is cut.
pub fn dtw_by_paths(a: &[f64], b: &[f64]) -> f64 {
    fn walk(a: &[f64], b: &[f64], i: usize, j: usize, acc: f64, best: &mut f64) {
        let acc = acc + (a[i] - b[j]).abs();
        if acc >= *best {
            return;
        }
        if i + 1 == a.len() && j + 1 == b.len() {
            *best = acc;
            return;
        }
        if i + 1 < a.len() && j + 1 < b.len() {
            walk(a, b, i + 1, j + 1, acc, best);
        }
        if i + 1 < a.len() {
            walk(a, b, i + 1, j, acc, best);
        }
        if j + 1 < b.len() {
            walk(a, b, i, j + 1, acc, best);
        }
    }
    let mut best = f64::INFINITY;
    walk(a, b, 0, 0, 0.0, &mut best);
    best
}

/// Every word of length `1..=max_len` over `{0, 1, 2}`.
pub fn all_words(max_len: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut layer: Vec<Vec<f64>> = vec![Vec::new()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|w| {
                (0..3).map(move |v| {
                    let mut w = w.clone();
                    w.push(v as f64);
                    w
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

/// Exact hard-margin solution in the plane. The optimum is pinned by two
/// opposite-class support points (w along their difference) or by three
/// points on the margins (a 3x3 linear system); the feasible candidate with
/// the smallest `|w|` wins.
pub fn max_margin_2d(points: &[[f64; 2]], labels: &[f64]) -> ([f64; 2], f64) {
    let n = points.len();
    let feasible = |w: [f64; 2], b: f64| {
        (0..n).all(|i| labels[i] * (w[0] * points[i][0] + w[1] * points[i][1] + b) >= 1.0 - 1e-9)
    };
    let mut best: Option<([f64; 2], f64)> = None;
    let mut consider = |w: [f64; 2], b: f64| {
        if feasible(w, b) {
            let norm = w[0].hypot(w[1]);
            if best.is_none_or(|(bw, _)| norm < bw[0].hypot(bw[1])) {
                best = Some((w, b));
            }
        }
    };
    for i in 0..n {
        for j in 0..n {
            if labels[i] > 0.0 && labels[j] < 0.0 {
                let d = [points[i][0] - points[j][0], points[i][1] - points[j][1]];
                let dd = d[0] * d[0] + d[1] * d[1];
                let w = [2.0 * d[0] / dd, 2.0 * d[1] / dd];
                let mid = [
                    (points[i][0] + points[j][0]) / 2.0,
                    (points[i][1] + points[j][1]) / 2.0,
                ];
                consider(w, -(w[0] * mid[0] + w[1] * mid[1]));
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let idx = [i, j, k];
                let m: Vec<[f64; 3]> = idx
                    .iter()
                    .map(|&t| [points[t][0], points[t][1], 1.0])
                    .collect();
                let rhs: Vec<f64> = idx.iter().map(|&t| labels[t]).collect();
                if let Some(sol) = solve3(&m, &rhs) {
                    consider([sol[0], sol[1]], sol[2]);
                }
            }
        }
    }
    best.expect("separable data has a max-margin solution")
}

fn det3(m: &[[f64; 3]]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Cramer's rule.
fn solve3(m: &[[f64; 3]], rhs: &[f64]) -> Option<[f64; 3]> {
    let d = det3(m);
    if d.abs() < 1e-9 {
        return None;
    }
    let mut out = [0.0; 3];
    for (c, slot) in out.iter_mut().enumerate() {
        let mut mc: Vec<[f64; 3]> = m.to_vec();
        for r in 0..3 {
            mc[r][c] = rhs[r];
        }
        *slot = det3(&mc) / d;
    }
    Some(out)
}

/// 4 to 20 points on either side of a random line, at least 0.4 away from it.
pub fn separable(seed: u64) -> (Vec<[f64; 2]>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let (u, off) = ([angle.cos(), angle.sin()], rng.gen_range(-1.0..1.0));
    let n = rng.gen_range(4..=20);
    loop {
        let mut pts = Vec::new();
        let mut lab = Vec::new();
        while pts.len() < n {
            let p = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
            let s = u[0] * p[0] + u[1] * p[1] + off;
            if s.abs() > 0.4 {
                pts.push(p);
                lab.push(s.signum());
            }
        }
        if lab.contains(&1.0) && lab.contains(&-1.0) {
            return (pts, lab);
        }
    }
}

/// Window `[lo, hi]` of `len` samples in `[-1, -0.3]` or, when `hit`, with
/// one random sample raised into `[0.3, 1]`; everything else uniform in
/// `[-1, 1]`.
fn channel(rng: &mut ChaCha8Rng, len: usize, lo: usize, hi: usize, hit: bool) -> Vec<f64> {
    let mut v: Vec<f64> = (0..len)
        .map(|k| {
            if (lo..=hi).contains(&k) {
                rng.gen_range(-1.0..-0.3)
            } else {
                rng.gen_range(-1.0..1.0)
            }
        })
        .collect();
    if hit {
        v[rng.gen_range(lo..=hi)] = rng.gen_range(0.3..1.0);
    }
    v
}

pub const PLANTED: &str = "G[2,6](h1 <= 0) & F[3,7](h2 > 0)";

pub fn planted_formula() -> Formula {
    parse_formula(PLANTED).unwrap()
}

/// Label is satisfaction of [`PLANTED`]; each conjunct holds with
/// probability 1/sqrt(2).
pub fn planted(seed: u64, n: usize) -> LabeledDataset<StSignal> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phi = planted_formula();
    let p = std::f64::consts::FRAC_1_SQRT_2;
    let items = (0..n)
        .map(|_| {
            let violated = !rng.gen_bool(p);
            let h1 = channel(&mut rng, 11, 2, 6, violated);
            let hit = rng.gen_bool(p);
            let h2 = channel(&mut rng, 11, 3, 7, hit);
            let s =
                StSignal::new(h1.into_iter().zip(h2).map(|(a, b)| vec![a, b]).collect()).unwrap();
            let l = if satisfies(&s, &phi, 0).unwrap() {
                1
            } else {
                -1
            };
            (s, l)
        })
        .collect();
    LabeledDataset::new(items, LabelKind::Binary).unwrap()
}

pub fn random_primitive(rng: &mut ChaCha8Rng, horizon: usize) -> PrimitiveChoice {
    let a = rng.gen_range(0..=horizon);
    let b = rng.gen_range(a..=horizon);
    PrimitiveChoice {
        kind: if rng.gen_bool(0.5) {
            TemporalKind::Always
        } else {
            TemporalKind::Eventually
        },
        class: rng.gen_range(1..=2),
        cmp: if rng.gen_bool(0.5) { Cmp::Gt } else { Cmp::Le },
        threshold: [-1.0, -0.5, 0.0, 0.5, 1.0][rng.gen_range(0..5)],
        a,
        b,
    }
}

pub fn random_tree(rng: &mut ChaCha8Rng, depth: usize, horizon: usize) -> StlTree {
    if depth == 0 || rng.gen_bool(0.15) {
        return StlTree::Leaf(if rng.gen_bool(0.5) { 1 } else { -1 });
    }
    StlTree::Node {
        primitive: random_primitive(rng, horizon),
        sat: Box::new(random_tree(rng, depth - 1, horizon)),
        unsat: Box::new(random_tree(rng, depth - 1, horizon)),
    }
}

/// Every 2-dimensional signal with `len` samples over `{-1, 0, 1}`.
pub fn grid_signals(len: usize) -> Vec<StSignal> {
    let cells = 2 * len;
    (0..3usize.pow(cells as u32))
        .map(|mut code| {
            let mut flat = Vec::with_capacity(cells);
            for _ in 0..cells {
                flat.push((code % 3) as f64 - 1.0);
                code /= 3;
            }
            StSignal::new(flat.chunks(2).map(<[f64]>::to_vec).collect()).unwrap()
        })
        .collect()
}
