use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use svmstl::data::{LabelKind, LabeledDataset, StSignal};
use svmstl::inference::{
    alpha_for, bdt_to_weighted_formula, boost, boost_traced, mcr, optimize_primitive, tree_to_formula, BdtClassifier,
    BoostConfig, Classifier, PrimitiveChoice, SearchGrids, StlTree, ThresholdGrid,
};
use svmstl::logic::{satisfies, Cmp, Formula, TemporalKind};

mod support;
use support::*;

#[test]
fn planted_two_primitive_concept_is_learned() {
    let cfg = BoostConfig {
        rounds: 3,
        depth: 2,
        ..BoostConfig::default()
    };
    let train = planted(1, 200);
    let test = planted(2, 200);
    let bdt = boost(&train, &cfg).unwrap();
    assert_eq!(mcr(&bdt, &train), 0.0);
    assert!(mcr(&bdt, &test) <= 0.05, "test MCR {}", mcr(&bdt, &test));
}

#[test]
fn reweighting_leaves_the_last_tree_at_chance() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let clean = planted(3, 150);
    // label noise keeps every weak learner imperfect
    let items = clean
        .items()
        .iter()
        .map(|(s, l)| (s.clone(), if rng.gen_bool(0.15) { -l } else { *l }))
        .collect();
    let noisy = LabeledDataset::new(items, LabelKind::Binary).unwrap();
    for depth in [1, 2] {
        let cfg = BoostConfig {
            rounds: 6,
            depth,
            ..BoostConfig::default()
        };
        let trace = boost_traced(&noisy, &cfg).unwrap();
        let labels = noisy.labels();
        for k in 0..cfg.rounds {
            let eps = trace.classifier.errors[k];
            assert!(eps > 1e-10 && eps < 1.0 - 1e-10);
            let next = &trace.distributions[k + 1];
            assert!((next.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let err: f64 = (0..labels.len())
                .filter(|&i| trace.predictions[k][i] != labels[i])
                .map(|i| next[i])
                .sum();
            assert!((err - 0.5).abs() < 1e-9, "round {k}: {err}");
            assert_eq!(trace.classifier.alphas[k], 0.5 * (1.0 / eps - 1.0).ln());
        }
    }
}

#[test]
fn alpha_closed_forms() {
    assert_eq!(alpha_for(0.5, 1e-10), 0.0);
    assert!((alpha_for(0.25, 1e-10) - 0.549_306_144_334_054_9).abs() < 1e-15);
}

#[test]
fn single_class_node_is_degenerate() {
    let signals: Vec<StSignal> = (0..4).map(|i| StSignal::from_scalar(&[i as f64, 0.0]).unwrap()).collect();
    let none = optimize_primitive(&signals, &[1, 1, 1, 1], &[0.25; 4], &SearchGrids::default()).unwrap();
    assert!(none.is_none());
    let (p, impurity) = optimize_primitive(&signals, &[-1, -1, 1, 1], &[0.25; 4], &SearchGrids::default())
        .unwrap()
        .unwrap();
    assert_eq!(impurity, 0.0);
    for (s, l) in signals.iter().zip([-1, -1, 1, 1]) {
        assert_eq!(p.holds(s).unwrap(), l == 1);
    }
}

#[test]
fn weighted_export_keeps_the_tree_weights() {
    let bdt = boost(&planted(5, 60), &BoostConfig::default()).unwrap();
    let w = bdt_to_weighted_formula(&bdt).unwrap();
    let Formula::WAnd { weights, children } = &w else { panic!("expected AND{{..}}") };
    assert_eq!(weights, &bdt.alphas);
    assert_eq!(children.len(), bdt.trees.len());
    let text = w.to_string();
    assert!(text.starts_with(&format!("AND{{{}", bdt.alphas[0])));
    let one = BdtClassifier {
        trees: vec![bdt.trees[0].clone()],
        alphas: vec![bdt.alphas[0]],
        errors: vec![bdt.errors[0]],
    };
    let Formula::WAnd { weights, .. } = bdt_to_weighted_formula(&one).unwrap() else { panic!() };
    assert_eq!(weights, vec![bdt.alphas[0]]);
}

#[test]
fn exported_formula_agrees_with_the_tree_on_the_whole_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let signals = grid_signals(5);
    assert_eq!(signals.len(), 59_049);
    for _ in 0..100 {
        let tree = random_tree(&mut rng, 2, 4);
        let phi = tree_to_formula(&tree);
        for s in &signals {
            assert_eq!(satisfies(s, &phi, 0).unwrap(), tree.classify(s).unwrap() == 1, "{phi}");
        }
    }
}

#[test]
fn tree_without_positive_leaf_exports_falsum() {
    let t = StlTree::Node {
        primitive: PrimitiveChoice {
            kind: TemporalKind::Always,
            class: 1,
            cmp: Cmp::Gt,
            threshold: 0.0,
            a: 0,
            b: 0,
        },
        sat: Box::new(StlTree::Leaf(-1)),
        unsat: Box::new(StlTree::Leaf(-1)),
    };
    assert_eq!(tree_to_formula(&t), Formula::falsum());
}

#[test]
fn threshold_grid_variants_all_fit_the_planted_root() {
    let data = planted(8, 120);
    let signals: Vec<StSignal> = data.items().iter().map(|(s, _)| s.clone()).collect();
    let labels = data.labels();
    let w = vec![1.0 / 120.0; 120];
    for thresholds in [ThresholdGrid::Quantiles { q: 20 }, ThresholdGrid::Midpoints, ThresholdGrid::Values { values: vec![0.0] }] {
        let grids = SearchGrids {
            thresholds,
            ..SearchGrids::default()
        };
        let (_, impurity) = optimize_primitive(&signals, &labels, &w, &grids).unwrap().unwrap();
        let positives = labels.iter().filter(|l| **l == 1).count() as f64 / 120.0;
        assert!(impurity < positives.min(1.0 - positives));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ensemble_vote_is_the_weighted_sum(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.gen_range(1..5);
        let trees: Vec<StlTree> = (0..k).map(|_| random_tree(&mut rng, 2, 4)).collect();
        let alphas: Vec<f64> = (0..k).map(|_| [0.5, 1.0, rng.gen_range(-1.0..2.0)][rng.gen_range(0..3)]).collect();
        let bdt = BdtClassifier { trees: trees.clone(), alphas: alphas.clone(), errors: vec![0.3; k] };
        for _ in 0..50 {
            let rows = (0..5).map(|_| vec![rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)]).collect();
            let s = StSignal::new(rows).unwrap();
            let votes: Vec<i32> = trees.iter().map(|t| t.classify(&s).unwrap()).collect();
            let sum: f64 = votes.iter().zip(&alphas).map(|(v, a)| *v as f64 * a).sum();
            prop_assert_eq!(bdt.predict(&s).unwrap(), if sum >= 0.0 { 1 } else { -1 });
            if votes.iter().all(|v| *v == votes[0]) && alphas.iter().all(|a| *a > 0.0) {
                prop_assert_eq!(bdt.predict(&s).unwrap(), votes[0]);
            }
        }
    }
}
