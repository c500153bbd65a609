//! Every primary acceptance criterion at its stated tolerance and budget,
//! one PASS/FAIL line each. Runs without the libtest harness.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use svmstl::clustering::{dtw_distance, lloyd_kmeans, silhouette};
use svmstl::data::io::{load_signal, load_trajectory};
use svmstl::data::{Image, LabelKind, LabeledDataset, StSignal, StTrajectory};
use svmstl::features::{BuiltinConfig, BuiltinDescriptor, FeatureExtractor};
use svmstl::inference::{alpha_for, boost, boost_traced, mcr, tree_to_formula, BoostConfig};
use svmstl::logic::{parse_formula, robustness, satisfies};
use svmstl::optim::{Bounds, PsoConfig, StopCondition};
use svmstl::predicates::{train_svm_points, SvmConfig};
use svmstl::rdsim::{
    rhs, step, sweep, Boundary, Dynamics, RdParams, RdState, SeedPolicy, SweepStatus,
};
use svmstl::synthesis::{synthesize, BoxError, SignalMap, SynthesisConfig, SystemUnderSynthesis};

use support::*;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(t: Instant, budget: Duration) -> Result<(), String> {
    ensure(t.elapsed() < budget, || {
        format!("over budget: {:.1?} >= {budget:?}", t.elapsed())
    })
}

fn monitor() -> Outcome {
    let t = Instant::now();
    let mut checked = 0;
    for seed in 0..10_000u64 {
        let (f, s) = random_case(seed);
        let r = robustness(&s, &f, 0).map_err(|e| e.to_string())?;
        let q = satisfies(&s, &f, 0).map_err(|e| e.to_string())?;
        ensure(q == sat(&s, &f, 0), || {
            format!("seed {seed}: satisfaction differs for {f}")
        })?;
        ensure((r - rho(&s, &f, 0)).abs() <= 1e-12, || {
            format!("seed {seed}: robustness differs for {f}")
        })?;
        if r.abs() > 1e-9 {
            ensure((r > 0.0) == q, || {
                format!("seed {seed}: sign disagrees for {f}")
            })?;
            checked += 1;
        }
    }
    within(t, Duration::from_secs(30))?;
    Ok(format!("10000 pairs, {checked} sign checks"))
}

fn dtw() -> Outcome {
    let t = Instant::now();
    let words = all_words(6);
    for (i, a) in words.iter().enumerate() {
        for b in &words[i..] {
            let want = dtw_by_paths(a, b);
            for (x, y) in [(a, b), (b, a)] {
                let got = dtw_distance(x, y).map_err(|e| e.to_string())?;
                ensure(got == want, || format!("{x:?} {y:?}: {got} vs {want}"))?;
            }
        }
    }
    within(t, Duration::from_secs(10))?;
    Ok(format!("{} ordered pairs", words.len() * words.len()))
}

fn svm() -> Outcome {
    let mut supports = 0;
    for seed in 0..100 {
        let (pts, lab) = separable(seed);
        let (w, b) = max_margin_2d(&pts, &lab);
        let points: Vec<Vec<f64>> = pts.iter().map(|p| p.to_vec()).collect();
        let labels: Vec<i32> = lab.iter().map(|l| *l as i32).collect();
        let m = train_svm_points(&points, &labels, &SvmConfig::hard_margin())
            .map_err(|e| e.to_string())?;
        let scale = w[0].hypot(w[1]);
        for d in 0..2 {
            ensure((m.weights[d] - w[d]).abs() <= 1e-2 * scale, || {
                format!("seed {seed}: w {:?} vs {w:?}", m.weights)
            })?;
        }
        ensure((m.bias - b).abs() <= 1e-2 * scale.max(b.abs()), || {
            format!("seed {seed}: b {} vs {b}", m.bias)
        })?;
        let margin = 1.0 / scale;
        for (p, l) in pts.iter().zip(&lab) {
            if (l * (w[0] * p[0] + w[1] * p[1] + b) - 1.0).abs() < 1e-9 {
                let dist = m.signed_distance(p);
                ensure((dist - l * margin).abs() <= 1e-2 * margin, || {
                    format!("seed {seed}: support at {dist}")
                })?;
                supports += 1;
            }
        }
    }
    Ok(format!("100 datasets, {supports} support points"))
}

fn adaboost() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let clean = planted(3, 150);
    let items = clean
        .items()
        .iter()
        .map(|(s, l)| (s.clone(), if rng.gen_bool(0.15) { -l } else { *l }))
        .collect();
    let noisy = LabeledDataset::new(items, LabelKind::Binary).map_err(|e| e.to_string())?;
    let labels = noisy.labels();
    let mut worst: f64 = 0.0;
    for depth in [1, 2] {
        let cfg = BoostConfig {
            rounds: 6,
            depth,
            ..BoostConfig::default()
        };
        let trace = boost_traced(&noisy, &cfg).map_err(|e| e.to_string())?;
        for k in 0..cfg.rounds {
            let next = &trace.distributions[k + 1];
            let err: f64 = (0..labels.len())
                .filter(|&i| trace.predictions[k][i] != labels[i])
                .map(|i| next[i])
                .sum();
            worst = worst.max((err - 0.5).abs());
            let eps = trace.classifier.errors[k];
            ensure(
                trace.classifier.alphas[k] == 0.5 * (1.0 / eps - 1.0).ln(),
                || format!("alpha at round {k}"),
            )?;
        }
    }
    ensure(worst <= 1e-9, || {
        format!("reweighted error off by {worst:e}")
    })?;
    ensure(
        (alpha_for(0.25, 1e-10) - 0.5 * 3f64.ln()).abs() < 1e-15,
        || "alpha(0.25)".into(),
    )?;
    let cfg = BoostConfig {
        rounds: 3,
        depth: 2,
        ..BoostConfig::default()
    };
    let (train, test) = (planted(1, 200), planted(2, 200));
    let bdt = boost(&train, &cfg).map_err(|e| e.to_string())?;
    let (tr, te) = (mcr(&bdt, &train), mcr(&bdt, &test));
    ensure(tr == 0.0 && te <= 0.05, || {
        format!("train MCR {tr}, test MCR {te}")
    })?;
    within(t, Duration::from_secs(300))?;
    Ok(format!(
        "max |err - 0.5| {worst:.1e}, train MCR {tr}, test MCR {te}"
    ))
}

fn tree_formula() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let signals = grid_signals(5);
    for n in 0..100 {
        let tree = random_tree(&mut rng, 2, 4);
        let phi = tree_to_formula(&tree);
        for s in &signals {
            let a = satisfies(s, &phi, 0).map_err(|e| e.to_string())?;
            let b = tree.classify(s).map_err(|e| e.to_string())? == 1;
            ensure(a == b, || format!("tree {n}: {phi}"))?;
        }
    }
    Ok(format!("100 trees x {} signals", signals.len()))
}

fn rd_simulator() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let dynamics = [
            Dynamics::Turing,
            Dynamics::Printed { transposed: false },
            Dynamics::Printed { transposed: true },
        ][rng.gen_range(0..3)];
        let boundary = if rng.gen_bool(0.5) {
            Boundary::Periodic
        } else {
            Boundary::Truncated
        };
        let p = RdParams {
            dynamics,
            boundary,
            ..RdParams::default().with_diffusion(rng.gen_range(0.0..40.0), rng.gen_range(0.0..40.0))
        };
        let next = step(
            &RdState::uniform(5, rng.gen_range(0.0..20.0), rng.gen_range(0.0..20.0)),
            &p,
        );
        ensure(
            next.x1.iter().all(|v| *v == next.x1[0]) && next.x2.iter().all(|v| *v == next.x2[0]),
            || format!("uniform field broke under {dynamics:?}"),
        )?;
    }
    let mut x = 0.0f64;
    for _ in 0..100 {
        x -= (x.powi(3) - 15.0 * x + 12.0) / (3.0 * x * x - 15.0);
    }
    let state = RdState::uniform(6, x, 16.0 - x * x);
    let mut residual: f64 = 0.0;
    for transposed in [false, true] {
        let p = RdParams {
            dynamics: Dynamics::Printed { transposed },
            ..RdParams::default()
        };
        let (r1, r2) = rhs(&state, &p);
        residual = r1.iter().chain(&r2).fold(residual, |m, r| m.max(r.abs()));
    }
    ensure(residual < 1e-9, || format!("residual {residual:e}"))?;

    let t = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let values = [1.0, 5.0, 9.0];
    let grid: Vec<(f64, f64)> = values
        .iter()
        .flat_map(|&a| values.iter().map(move |&b| (a, b)))
        .collect();
    let entries = sweep(
        &grid,
        &RdParams::default(),
        SeedPolicy::Fixed { seed: 7 },
        1,
        dir.path(),
    )
    .map_err(|e| e.to_string())?;
    let ex = BuiltinDescriptor::new(BuiltinConfig::default()).map_err(|e| e.to_string())?;
    let mut points = Vec::new();
    for e in &entries {
        ensure(e.status == SweepStatus::Ok, || {
            format!("{} failed", e.path.display())
        })?;
        let traj = load_trajectory(&dir.path().join(&e.path)).map_err(|e| e.to_string())?;
        ensure(traj.len() == 61 && traj.frames()[0].width() == 32, || {
            "shape".into()
        })?;
        points.push(
            ex.extract(&traj.frames()[60])
                .map_err(|e| e.to_string())?
                .values()
                .to_vec(),
        );
    }
    within(t, Duration::from_secs(120))?;
    let km = lloyd_kmeans(&points, 2, 0).map_err(|e| e.to_string())?;
    let s = silhouette(&points, &km.assignment.labels);
    ensure(s > 0.5, || format!("silhouette {s}"))?;
    Ok(format!(
        "residual {residual:.1e}, desk sweep {:.1?}, silhouette {s:.3}",
        t.elapsed()
    ))
}

/// `pi` as a constant one-pixel trajectory.
struct Level(Bounds);

impl SystemUnderSynthesis for Level {
    fn space(&self) -> &Bounds {
        &self.0
    }
    fn horizon(&self) -> usize {
        3
    }
    fn generate(&self, pi: &[f64], _seed: u64) -> Result<StTrajectory, BoxError> {
        Ok(StTrajectory::new(vec![Image::filled(1, 1, 1, pi[0])?; 4])?)
    }
}

struct Pixel;

impl SignalMap for Pixel {
    fn signal(&self, t: &StTrajectory) -> Result<StSignal, BoxError> {
        Ok(StSignal::new(
            t.frames().iter().map(|f| vec![f.pixels()[0]]).collect(),
        )?)
    }
}

fn synthesis_toy() -> Outcome {
    let phi = parse_formula("G[0,3](h1 > 0) & G[0,3](h1 <= 1)").map_err(|e| e.to_string())?;
    let system = Level(Bounds::uniform(1, 0.0, 1.0).map_err(|e| e.to_string())?);
    let mut hits = 0;
    for seed in 0..100 {
        let cfg = SynthesisConfig {
            pso: PsoConfig::default().with_swarm_size(30),
            stop: StopCondition::iterations(100),
            seed,
            ..SynthesisConfig::default()
        };
        let r = synthesize(&system, &phi, &Pixel, &cfg).map_err(|e| e.to_string())?;
        if (r.pi[0] - 0.5).abs() < 1e-2 {
            hits += 1;
        }
    }
    ensure(hits >= 95, || format!("{hits}/100 seeds"))?;
    Ok(format!("{hits}/100 seeds"))
}

fn svmstl(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_svmstl"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!(
            "svmstl {} failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr).trim()
        )
    })?;
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn write_config(dir: &Path, name: &str, body: &str) -> Result<PathBuf, String> {
    let path = dir.join(name);
    fs::write(&path, body).map_err(|e| e.to_string())?;
    Ok(path)
}

const E2E: &str = "seed = 1
[simulate]
regimes = [[9.0, 9.0], [1.0, 9.0], [3.9, 30.0]]
replicates = 20
vary_seeds = true
";

fn end_to_end(work: &Path) -> Outcome {
    let t = Instant::now();
    let run = work.join("e2e");
    let cfg = write_config(work, "e2e.toml", &format!("out = {:?}\n{E2E}", run))?;
    svmstl(&["pipeline", "--config", cfg.to_str().unwrap()])?;
    within(t, Duration::from_secs(1200))?;
    let signals = fs::read_dir(run.join("signals"))
        .map_err(|e| e.to_string())?
        .filter_map(Result::ok)
        .filter(|e| e.file_name().to_string_lossy().starts_with("rd_"))
        .count();
    ensure(signals == 60, || format!("{signals} trajectories"))?;
    let metrics: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(run.join("formula/metrics.json")).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let mut summary = Vec::new();
    for c in metrics["classes"].as_array().ok_or("no classes")? {
        let train: Vec<f64> = c["train"]
            .as_array()
            .ok_or("no train")?
            .iter()
            .filter_map(|v| v.as_f64())
            .collect();
        let mean = train.iter().sum::<f64>() / train.len() as f64;
        ensure(train.len() == 2 && mean >= 0.9, || {
            format!("class {}: train {train:?}", c["class"])
        })?;
        summary.push(format!("class {} {:.3}", c["class"], mean));
    }
    ensure(summary.len() == 3, || format!("{} classes", summary.len()))?;
    Ok(format!("{} in {:.1?}", summary.join(", "), t.elapsed()))
}

/// `F G hA > 0 & G hB <= 0` with the pair fitting the large-pattern regime best.
fn psi_synthesis(work: &Path) -> Outcome {
    let run = work.join("e2e");
    let suite: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(run.join("predicates/suite.json")).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let classes = suite["models"]
        .as_array()
        .map(Vec::len)
        .ok_or("suite has no models")?;
    let mut signals = Vec::new();
    for entry in fs::read_dir(run.join("signals")).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        if path
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.starts_with("rd_D1-3.90_D2-30.00"))
        {
            signals.push(load_signal(&path).map_err(|e| e.to_string())?);
        }
    }
    ensure(!signals.is_empty(), || "no large-pattern signals".into())?;
    let mut scores = BTreeMap::new();
    for a in 1..=classes {
        for b in (1..=classes).filter(|&b| b != a) {
            let phi = parse_formula(&format!("F[0,29](G[0,30](h{a} > 0)) & G[0,60](h{b} <= 0)"))
                .map_err(|e| e.to_string())?;
            let mean = signals
                .iter()
                .map(|s| robustness(s, &phi, 0).unwrap())
                .sum::<f64>()
                / signals.len() as f64;
            scores.insert((a, b), mean);
        }
    }
    let (&(a, b), _) = scores
        .iter()
        .max_by(|x, y| x.1.total_cmp(y.1))
        .ok_or("one class only")?;
    let formula = format!("F[0,29](G[0,30](h{a} > 0)) & G[0,60](h{b} <= 0)");
    let t = Instant::now();
    let cfg = write_config(
        work,
        "psi.toml",
        &format!("out = {:?}\n{E2E}[synthesize]\nformula = {formula:?}\n[synthesize.pso]\nswarm_size = 20\n[synthesize.stop]\nmax_iterations = 20\n", run),
    )?;
    svmstl(&["synthesize", "--config", cfg.to_str().unwrap()])?;
    within(t, Duration::from_secs(600))?;
    let result: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(run.join("synthesis/result.json")).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let rho = result["rho"].as_f64().ok_or("rho is not finite")?;
    ensure(rho > 0.0, || format!("{formula}: rho* {rho}"))?;
    Ok(format!(
        "{formula}: D1 {}, D2 {}, rho* {rho:.4} in {:.1?}",
        result["d1"],
        result["d2"],
        t.elapsed()
    ))
}

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else if !path
                .file_name()
                .unwrap()
                .to_string_lossy()
                .starts_with("runtime")
            {
                out.insert(
                    path.strip_prefix(root).unwrap().to_path_buf(),
                    fs::read(&path).unwrap(),
                );
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

fn determinism(work: &Path) -> Outcome {
    let body = "seed = 3\n[simulate]\nregimes = [[9.0, 9.0], [1.0, 9.0], [3.9, 30.0]]\nreplicates = 4\nvary_seeds = true\n[synthesize]\nformula = \"F[0,29](G[0,30](h1 > 0)) & G[0,60](h2 <= 0)\"\n\
                [synthesize.pso]\nswarm_size = 4\n[synthesize.stop]\nmax_iterations = 2\n";
    let cfg = write_config(work, "desk.toml", body)?;
    let mut trees = Vec::new();
    for run in ["desk_a", "desk_b"] {
        let out = work.join(run);
        svmstl(&[
            "pipeline",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])?;
        trees.push(tree(&out));
    }
    let (a, b) = (&trees[0], &trees[1]);
    ensure(a.keys().eq(b.keys()), || "different file sets".into())?;
    for (path, bytes) in a {
        ensure(&b[path] == bytes, || format!("{} differs", path.display()))?;
    }
    Ok(format!("{} files byte-identical", a.len()))
}

fn main() {
    let work = tempfile::tempdir().expect("temp dir");
    let w = work.path();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("monitor correctness", Box::new(monitor)),
        ("DTW exhaustive agreement", Box::new(dtw)),
        ("SVM max margin", Box::new(svm)),
        (
            "AdaBoost identities and planted concept",
            Box::new(adaboost),
        ),
        ("tree/formula equivalence", Box::new(tree_formula)),
        ("RD simulator", Box::new(rd_simulator)),
        ("end-to-end inference", Box::new(|| end_to_end(w))),
        ("synthesis toy objective", Box::new(synthesis_toy)),
        ("RD synthesis of psi", Box::new(|| psi_synthesis(w))),
        ("determinism", Box::new(|| determinism(w))),
    ];
    let mut failed = 0;
    for (name, run) in &criteria {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or(p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail} ({:.1?})", t.elapsed()),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail} ({:.1?})", t.elapsed());
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
