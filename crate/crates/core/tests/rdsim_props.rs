use proptest::prelude::*;
use svmstl::clustering::{lloyd_kmeans, silhouette};
use svmstl::data::io::load_trajectory;
use svmstl::features::{BuiltinConfig, BuiltinDescriptor, FeatureExtractor};
use svmstl::rdsim::{
    neighbor_mean, render_frame, rhs, simulate, simulate_states, step, sweep, Boundary, Dynamics, RdParams, RdState,
    SeedPolicy, SweepStatus, SWEEP_MANIFEST,
};

fn printed() -> RdParams {
    RdParams {
        dynamics: Dynamics::Printed { transposed: true },
        ..RdParams::default()
    }
}

/// Newton iteration on `x^3 - 15x + 12` from zero, the uniform fixed point of
/// the printed reaction terms with the default constants.
fn cubic_root() -> f64 {
    let mut x = 0.0f64;
    for _ in 0..100 {
        x -= (x.powi(3) - 15.0 * x + 12.0) / (3.0 * x * x - 15.0);
    }
    x
}

#[test]
fn printed_fixed_point_has_tiny_residual() {
    let x1 = cubic_root();
    assert!((x1 - 0.8394).abs() < 1e-4);
    let state = RdState::uniform(6, x1, 16.0 - x1 * x1);
    for transposed in [false, true] {
        let p = RdParams {
            dynamics: Dynamics::Printed { transposed },
            ..RdParams::default()
        };
        let (d1, d2) = rhs(&state, &p);
        assert!(d1.iter().chain(&d2).all(|r| r.abs() < 1e-9));
    }
    let (e1, e2) = printed().equilibrium();
    assert!((e1 - x1).abs() < 1e-12 && (e2 - (16.0 - x1 * x1)).abs() < 1e-10);
}

#[test]
fn turing_equilibrium_is_exactly_stationary() {
    let p = RdParams::default();
    let s = RdState::uniform(8, 4.0, 4.0);
    let mut t = s.clone();
    for _ in 0..100 {
        t = step(&t, &p);
    }
    assert_eq!(t, s);
}

#[test]
fn neighbor_mean_examples() {
    let n = 4;
    let mut f = vec![0.0; 16];
    f[1] = 2.0;
    f[4] = 4.0;
    assert_eq!(neighbor_mean(&f, n, 0, 0, Boundary::Truncated), 3.0);
    let g: Vec<f64> = (0..16).map(|v| (v * v) as f64).collect();
    assert_eq!(neighbor_mean(&g, n, 1, 2, Boundary::Truncated), (g[2] + g[10] + g[5] + g[7]) / 4.0);
    assert_eq!(neighbor_mean(&g, n, 3, 1, Boundary::Truncated), (g[9] + g[12] + g[14]) / 3.0);
}

#[test]
fn render_maps_the_window_monotonically() {
    let p = RdParams {
        quantize: false,
        ..RdParams::default()
    };
    let values = [-30.0, -10.0, -2.5, 0.0, 0.1, 7.0, 10.0, 44.0];
    let shades: Vec<f64> = values
        .iter()
        .map(|v| render_frame(&RdState::uniform(2, *v, 0.0), &p).pixels()[0])
        .collect();
    assert_eq!(shades[1], 0.0);
    assert_eq!(shades[3], 0.5);
    assert_eq!((shades[0], shades[6], shades[7]), (0.0, 1.0, 1.0));
    assert!(shades.windows(2).all(|w| w[0] <= w[1]));
    let q = render_frame(&RdState::uniform(2, 0.1, 0.0), &RdParams::default());
    assert!(q.pixels().iter().all(|v| (v * 255.0).fract() == 0.0));
}

#[test]
fn desk_run_shape_and_reproducibility() {
    let p = RdParams::default().with_diffusion(1.0, 9.0);
    let a = simulate(&p).unwrap();
    assert_eq!(a.len(), 61);
    assert_eq!(a.frame_shape(), (32, 32, 1));
    assert_eq!(simulate(&p).unwrap(), a);
    let other = simulate(&RdParams { seed: 1, ..p }).unwrap();
    assert_ne!(other, a);
}

fn variance(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64
}

#[test]
fn large_pattern_regime_amplifies_the_noise() {
    let p = RdParams::default().with_diffusion(3.9, 30.0);
    let states = simulate_states(&p).unwrap();
    let first = variance(&states[0].x1);
    let last = variance(&states[60].x1);
    assert!(last > 10.0 * first, "{first} -> {last}");
    let flat = simulate_states(&RdParams::default().with_diffusion(9.0, 9.0)).unwrap();
    assert!(variance(&flat[60].x1) < first);
}

/// 2-means on terminal-frame descriptors of the 3x3 desk sweep.
#[test]
fn desk_sweep_separates_pattern_classes() {
    let dir = tempfile::tempdir().unwrap();
    let values = [1.0, 5.0, 9.0];
    let grid: Vec<(f64, f64)> = values.iter().flat_map(|&a| values.iter().map(move |&b| (a, b))).collect();
    let entries = sweep(&grid, &RdParams::default(), SeedPolicy::Fixed { seed: 7 }, 1, dir.path()).unwrap();
    assert_eq!(entries.len(), 9);
    assert!(dir.path().join(SWEEP_MANIFEST).exists());
    let ex = BuiltinDescriptor::new(BuiltinConfig::default()).unwrap();
    let mut points = Vec::new();
    for e in &entries {
        assert_eq!(e.status, SweepStatus::Ok);
        let traj = load_trajectory(&dir.path().join(&e.path)).unwrap();
        assert_eq!(traj.len(), 61);
        points.push(ex.extract(&traj.frames()[60]).unwrap().values().to_vec());
    }
    let km = lloyd_kmeans(&points, 2, 0).unwrap();
    let s = silhouette(&points, &km.assignment.labels);
    assert!(s > 0.5, "silhouette {s}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn uniform_fields_stay_uniform(
        x1 in 0.0f64..20.0, x2 in 0.0f64..20.0, d1 in 0.0f64..40.0, d2 in 0.0f64..40.0,
        kind in 0usize..3, periodic in any::<bool>(),
    ) {
        let dynamics = [Dynamics::Turing, Dynamics::Printed { transposed: false }, Dynamics::Printed { transposed: true }][kind];
        let boundary = if periodic { Boundary::Periodic } else { Boundary::Truncated };
        let p = RdParams { dynamics, boundary, ..RdParams::default().with_diffusion(d1, d2) };
        let s = RdState::uniform(5, x1, x2);
        let next = step(&s, &p);
        prop_assert!(next.x1.iter().all(|v| *v == next.x1[0]));
        prop_assert!(next.x2.iter().all(|v| *v == next.x2[0]));
        // diffusion contributes nothing, so any D gives the same step
        let plain = step(&s, &RdParams { dynamics, boundary, ..RdParams::default().with_diffusion(0.0, 0.0) });
        prop_assert_eq!(next, plain);
    }

    #[test]
    fn zero_step_is_the_identity(seed in any::<u64>(), kind in 0usize..3) {
        let dynamics = [Dynamics::Turing, Dynamics::Printed { transposed: false }, Dynamics::Printed { transposed: true }][kind];
        let base = RdParams { grid_n: 6, seed, ..RdParams::default() };
        let s = RdState::initial(&base);
        prop_assert_eq!(step(&s, &RdParams { dt: 0.0, dynamics, ..base }), s);
    }

    #[test]
    fn transposed_dynamics_keep_symmetric_fields_symmetric(seed in any::<u64>(), d1 in 0.0f64..5.0, d2 in 0.0f64..5.0) {
        let n = 6;
        let base = RdParams { grid_n: n, seed, init_range: 0.1, ..printed().with_diffusion(d1, d2) };
        let mut s = RdState::initial(&base);
        for i in 0..n {
            for j in 0..i {
                s.x1[j * n + i] = s.x1[i * n + j];
                s.x2[j * n + i] = s.x2[i * n + j];
            }
        }
        let mut t = s;
        for _ in 0..5 {
            t = step(&t, &base);
        }
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(t.x1[i * n + j], t.x1[j * n + i]);
                prop_assert_eq!(t.x2[i * n + j], t.x2[j * n + i]);
            }
        }
    }
}
