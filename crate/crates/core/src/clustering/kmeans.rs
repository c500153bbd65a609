use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{criterion_unchecked, flatten_signal, nearest, Assignment, ClusterError, ClusterModel, DistanceKind, DtwConfig};
use crate::data::StSignal;
use crate::features::FeatureVector;
use crate::optim::{Bounds, Pso, PsoConfig, StopCondition};

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    pub assignment: Assignment,
    pub model: ClusterModel,
    /// Best criterion after initialization and after every PSO iteration.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LloydResult {
    pub assignment: Assignment,
    pub model: ClusterModel,
    /// Criterion of every assignment step.
    pub history: Vec<f64>,
    /// Centroid updates performed.
    pub iterations: usize,
}

fn check_points(points: &[Vec<f64>], n: usize) -> Result<usize, ClusterError> {
    if n == 0 {
        return Err(ClusterError::ZeroClusters);
    }
    let first = points.first().ok_or(ClusterError::Empty)?;
    let dim = first.len();
    if let Some(bad) = points.iter().find(|p| p.len() != dim) {
        return Err(ClusterError::DimensionMismatch {
            expected: dim,
            found: bad.len(),
        });
    }
    let distinct = distinct_indices(points).len();
    if distinct < n {
        return Err(ClusterError::TooFewDistinct { distinct, n });
    }
    Ok(dim)
}

/// Index of the first occurrence of every distinct point, in input order.
fn distinct_indices(points: &[Vec<f64>]) -> Vec<usize> {
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let key: Vec<u64> = p.iter().map(|v| (v + 0.0).to_bits()).collect();
        if seen.insert(key) {
            out.push(i);
        }
    }
    out
}

/// `n` distinct data points chosen at random.
fn random_centers(points: &[Vec<f64>], n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let distinct = distinct_indices(points);
    sample(rng, distinct.len(), n)
        .into_iter()
        .map(|i| points[distinct[i]].clone())
        .collect()
}

/// PSO over the concatenated center coordinates, bounded by the data's
/// bounding box. Every particle starts on `n` distinct random data points.
pub fn cluster_points_pso(
    points: &[Vec<f64>],
    n: usize,
    distance: DistanceKind,
    hyper: &PsoConfig,
    stop: &StopCondition,
    seed: u64,
) -> Result<ClusterResult, ClusterError> {
    let dim = check_points(points, n)?;
    if dim == 0 && matches!(distance, DistanceKind::Dtw(_)) {
        return Err(ClusterError::EmptySequence);
    }
    let mut lower = vec![f64::INFINITY; dim];
    let mut upper = vec![f64::NEG_INFINITY; dim];
    for p in points {
        for d in 0..dim {
            lower[d] = lower[d].min(p[d]);
            upper[d] = upper[d].max(p[d]);
        }
    }
    let bounds = Bounds::new(lower.repeat(n), upper.repeat(n))?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c1a5);
    let initial: Vec<Vec<f64>> = (0..hyper.swarm_size)
        .map(|_| random_centers(points, n, &mut rng).concat())
        .collect();

    let objective = |flat: &[f64]| {
        let centers: Vec<Vec<f64>> = flat.chunks(dim).map(<[f64]>::to_vec).collect();
        criterion_unchecked(points, &centers, &distance)
    };
    let run = Pso::new(hyper.clone(), bounds)?
        .seed(seed)
        .initial_positions(initial)?
        .minimize(objective, stop)?;

    let centers: Vec<Vec<f64>> = run.best_point.chunks(dim).map(<[f64]>::to_vec).collect();
    let assignment = Assignment {
        labels: points.iter().map(|x| nearest(x, &centers, &distance).0 + 1).collect(),
    };
    Ok(ClusterResult {
        assignment,
        model: ClusterModel {
            centers,
            distance,
            criterion: run.best_value,
        },
        history: run.history,
    })
}

/// Image clustering with the squared feature distance.
pub fn cluster_images_pso(
    features: &[FeatureVector],
    n: usize,
    hyper: &PsoConfig,
    stop: &StopCondition,
    seed: u64,
) -> Result<ClusterResult, ClusterError> {
    let points: Vec<Vec<f64>> = features.iter().map(|f| f.values().to_vec()).collect();
    cluster_points_pso(&points, n, DistanceKind::Squared, hyper, stop, seed)
}

/// Trajectory clustering with DTW over dimension-major flattened signals.
pub fn cluster_trajectories(
    signals: &[StSignal],
    n: usize,
    dtw: &DtwConfig,
    hyper: &PsoConfig,
    stop: &StopCondition,
    seed: u64,
) -> Result<ClusterResult, ClusterError> {
    let first = signals.first().ok_or(ClusterError::Empty)?;
    let shape = (first.len(), first.dims());
    if signals.iter().any(|s| (s.len(), s.dims()) != shape) {
        return Err(ClusterError::MixedShapes);
    }
    let points: Vec<Vec<f64>> = signals.iter().map(flatten_signal).collect();
    cluster_points_pso(&points, n, DistanceKind::Dtw(*dtw), hyper, stop, seed)
}

/// Lloyd's algorithm from `n` distinct random data points.
pub fn lloyd_kmeans(points: &[Vec<f64>], n: usize, seed: u64) -> Result<LloydResult, ClusterError> {
    check_points(points, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = random_centers(points, n, &mut rng);
    lloyd_kmeans_from(points, centers)
}

/// Lloyd's algorithm from given centers, until the assignment stops changing.
/// A cluster left empty is re-seeded at the point farthest from its nearest
/// center.
pub fn lloyd_kmeans_from(points: &[Vec<f64>], mut centers: Vec<Vec<f64>>) -> Result<LloydResult, ClusterError> {
    let n = centers.len();
    let dim = check_points(points, n)?;
    if let Some(bad) = centers.iter().find(|c| c.len() != dim) {
        return Err(ClusterError::DimensionMismatch {
            expected: dim,
            found: bad.len(),
        });
    }
    let kind = DistanceKind::Squared;
    let mut history = Vec::new();
    let mut previous: Option<Vec<usize>> = None;
    let mut iterations = 0;
    loop {
        let nearest_all: Vec<(usize, f64)> = points.iter().map(|x| nearest(x, &centers, &kind)).collect();
        let labels: Vec<usize> = nearest_all.iter().map(|(j, _)| *j).collect();
        history.push(nearest_all.iter().map(|(_, d)| d).sum());
        if previous.as_ref() == Some(&labels) || iterations >= 10_000 {
            previous = Some(labels);
            break;
        }
        let mut sums = vec![vec![0.0; dim]; n];
        let mut counts = vec![0usize; n];
        for (x, &j) in points.iter().zip(&labels) {
            counts[j] += 1;
            for (s, v) in sums[j].iter_mut().zip(x) {
                *s += v;
            }
        }
        let mut dist: Vec<f64> = nearest_all.iter().map(|(_, d)| *d).collect();
        for j in 0..n {
            if counts[j] == 0 {
                let far = (0..points.len())
                    .fold(0, |best, i| if dist[i] > dist[best] { i } else { best });
                centers[j] = points[far].clone();
                dist[far] = 0.0;
            } else {
                centers[j] = sums[j].iter().map(|s| s / counts[j] as f64).collect();
            }
        }
        previous = Some(labels);
        iterations += 1;
    }
    let labels = previous.expect("at least one update ran").into_iter().map(|j| j + 1).collect();
    let criterion = criterion_unchecked(points, &centers, &kind);
    Ok(LloydResult {
        assignment: Assignment { labels },
        model: ClusterModel {
            centers,
            distance: kind,
            criterion,
        },
        history,
        iterations,
    })
}
