use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use svmstl::data::{Image, LabelKind, LabeledDataset, StTrajectory};
use svmstl::features::{BuiltinConfig, BuiltinDescriptor, FeatureExtractor, FeatureVector};
use svmstl::predicates::{
    predicate_value, train_svm, train_svm_points, trajectory_to_signal, LinearSvm, PredicateModel, PredicateSuite,
    SvmConfig, TrainingStats,
};

mod support;
use support::*;

#[test]
fn smo_matches_the_exact_max_margin_on_random_planar_sets() {
    for seed in 0..100 {
        let (pts, lab) = separable(seed);
        let (w, b) = max_margin_2d(&pts, &lab);
        let points: Vec<Vec<f64>> = pts.iter().map(|p| p.to_vec()).collect();
        let labels: Vec<i32> = lab.iter().map(|l| *l as i32).collect();
        let svm = train_svm_points(&points, &labels, &SvmConfig::hard_margin()).unwrap();
        let scale = w[0].hypot(w[1]);
        for d in 0..2 {
            assert!((svm.weights[d] - w[d]).abs() <= 1e-2 * scale, "seed {seed}: {:?} vs {w:?}", svm.weights);
        }
        assert!((svm.bias - b).abs() <= 1e-2 * scale.max(b.abs()), "seed {seed}: {} vs {b}", svm.bias);
        let margin = 1.0 / scale;
        for (p, l) in pts.iter().zip(&lab) {
            let functional = l * (w[0] * p[0] + w[1] * p[1] + b);
            if (functional - 1.0).abs() < 1e-9 {
                let dist = svm.signed_distance(p);
                assert!((dist - l * margin).abs() <= 1e-2 * margin, "seed {seed}");
            }
        }
    }
}

fn features(rows: &[(Vec<f64>, i32)]) -> LabeledDataset<FeatureVector> {
    let items = rows.iter().map(|(v, l)| (FeatureVector::new(v.clone(), "x").unwrap(), *l)).collect();
    LabeledDataset::new(items, LabelKind::Binary).unwrap()
}

#[test]
fn symmetric_pair_gives_the_origin_boundary() {
    let svm = train_svm(&features(&[(vec![-1.0], -1), (vec![1.0], 1)]), &SvmConfig::hard_margin()).unwrap();
    assert!((svm.weights[0] - 1.0).abs() < 1e-2);
    assert!(svm.bias.abs() < 1e-2);
}

#[test]
fn xor_trains_with_hinge_losses() {
    let data = features(&[
        (vec![0.0, 0.1], -1),
        (vec![1.2, 0.9], -1),
        (vec![0.1, 1.0], 1),
        (vec![1.0, -0.3], 1),
        (vec![0.6, 0.4], 1),
    ]);
    let svm = train_svm(&data, &SvmConfig::default()).unwrap();
    assert!(svm.stats.margin_violations > 0);
    assert!(svm.weights.iter().all(|w| w.is_finite()) && svm.bias.is_finite());
}

fn fixed_model(w: Vec<f64>, b: f64, id: &str) -> PredicateModel {
    PredicateModel {
        class: 1,
        extractor_id: id.to_string(),
        svm: LinearSvm {
            weights: w,
            bias: b,
            standardizer: None,
            stats: TrainingStats {
                margin: 0.0,
                margin_violations: 0,
                support_vectors: 0,
                iterations: 0,
            },
        },
    }
}

#[test]
fn signed_distance_by_hand() {
    let m = fixed_model(vec![3.0, 4.0], 0.0, "x");
    assert!((m.value(&FeatureVector::new(vec![1.0, 1.0], "x").unwrap()).unwrap() - 1.4).abs() < 1e-15);
    let on = fixed_model(vec![3.0, 4.0], -7.0, "x");
    assert_eq!(on.value(&FeatureVector::new(vec![1.0, 1.0], "x").unwrap()).unwrap(), 0.0);
    assert!(m.value(&FeatureVector::new(vec![1.0, 1.0], "y").unwrap()).is_err());
}

fn extractor() -> BuiltinDescriptor {
    BuiltinDescriptor::new(BuiltinConfig::default()).unwrap()
}

fn random_trajectory(rng: &mut ChaCha8Rng, frames: usize) -> StTrajectory {
    let frames = (0..frames)
        .map(|_| {
            let a: f64 = rng.gen_range(0.0..1.0);
            let f: f64 = rng.gen_range(0.1..1.0);
            Image::from_fn(16, 16, |r, c| (0.5 + 0.5 * a * ((r as f64 * f).sin() * (c as f64 * f).cos())).clamp(0.0, 1.0))
                .unwrap()
        })
        .collect();
    StTrajectory::new(frames).unwrap()
}

fn random_suite(rng: &mut ChaCha8Rng, ex: &BuiltinDescriptor, n: usize) -> PredicateSuite {
    let models = (1..=n)
        .map(|j| {
            let mut m = fixed_model((0..ex.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect(), rng.gen_range(-1.0..1.0), ex.id());
            m.class = j;
            m
        })
        .collect();
    PredicateSuite::new(ex.id(), SvmConfig::default(), models).unwrap()
}

#[test]
fn signal_entries_are_pointwise_predicate_values() {
    let ex = extractor();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..5 {
        let traj = random_trajectory(&mut rng, 7);
        let suite = random_suite(&mut rng, &ex, 3);
        let s = trajectory_to_signal(&traj, &suite, &ex).unwrap();
        assert_eq!((s.len(), s.dims()), (7, 3));
        for (k, frame) in traj.frames().iter().enumerate() {
            for (j, m) in suite.models().iter().enumerate() {
                assert_eq!(s.at(k, j), predicate_value(m, frame, &ex).unwrap());
            }
        }
        assert_eq!(trajectory_to_signal(&traj.prefix(3), &suite, &ex).unwrap(), s.prefix(3));
    }
    let single = random_trajectory(&mut rng, 1);
    let suite = random_suite(&mut rng, &ex, 2);
    assert_eq!(trajectory_to_signal(&single, &suite, &ex).unwrap().len(), 1);
    let frame = single.frames()[0].clone();
    let constant = StTrajectory::new(vec![frame; 4]).unwrap();
    let s = trajectory_to_signal(&constant, &suite, &ex).unwrap();
    assert!(s.rows().windows(2).all(|w| w[0] == w[1]));
}

proptest! {
    #[test]
    fn predicate_values_ignore_positive_rescaling(
        w in prop::collection::vec(-3.0f64..3.0, 4),
        b in -3.0f64..3.0,
        f in prop::collection::vec(-3.0f64..3.0, 4),
        c in 0.01f64..100.0,
    ) {
        prop_assume!(w.iter().any(|x| x.abs() > 1e-3));
        let fv = FeatureVector::new(f, "x").unwrap();
        let m = fixed_model(w.clone(), b, "x");
        let scaled = fixed_model(w.iter().map(|x| x * c).collect(), b * c, "x");
        let (v, vs) = (m.value(&fv).unwrap(), scaled.value(&fv).unwrap());
        prop_assert!((v - vs).abs() <= 1e-12 * v.abs().max(1.0));
        // sign agrees with the linear classifier
        let raw: f64 = w.iter().zip(fv.values()).map(|(a, b)| a * b).sum::<f64>() + b;
        prop_assert!(raw == 0.0 || (raw > 0.0) == (v > 0.0));
    }

    #[test]
    fn separable_training_points_meet_the_margin(seed in 0u64..1000) {
        let (pts, lab) = separable(seed);
        let points: Vec<Vec<f64>> = pts.iter().map(|p| p.to_vec()).collect();
        let labels: Vec<i32> = lab.iter().map(|l| *l as i32).collect();
        let svm = train_svm_points(&points, &labels, &SvmConfig::hard_margin()).unwrap();
        for (p, l) in points.iter().zip(&lab) {
            let functional = l * (svm.weights[0] * p[0] + svm.weights[1] * p[1] + svm.bias);
            prop_assert!(functional >= 1.0 - 1e-3);
        }
    }
}
