//! One function per pipeline stage. Every stage reads its inputs from the
//! run directory, skips itself when inputs and config are unchanged, and
//! writes a machine-readable result next to a text report.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use svmstl::clustering::io::save_cluster_model;
use svmstl::clustering::{cluster_points_pso, cluster_trajectories, ClusterResult, DistanceKind};
use svmstl::data::io::{
    load_image, load_signal, load_trajectory, read_manifest, save_image, save_signal,
    save_trajectory, TRAJECTORY_MANIFEST,
};
use svmstl::data::{Image, LabelKind, LabeledDataset, StSignal};
use svmstl::features::{
    load_feature_table, BuiltinDescriptor, ExtractorConfig, FeatureExtractor, FeatureTable,
    FeatureVector,
};
use svmstl::inference::{
    cross_validate, learn_one_vs_rest, metrics_table, save_multiclass, Classifier,
};
use svmstl::logic::{parse_formula, satisfies};
use svmstl::optim::Bounds;
use svmstl::predicates::{learn_predicates as fit_suite, load_suite, save_suite, PredicateSuite};
use svmstl::rdsim::{sweep, SweepStatus, SWEEP_MANIFEST};
use svmstl::synthesis::{synthesize as run_synthesis, RdSystem, SuiteSignal, SynthesisConfig};

use crate::artifacts::StageRun;
use crate::config::PipelineConfig;
use crate::error::CliError;

pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: &Path) -> Self {
        Self {
            root: root.to_path_buf(),
        }
    }
    pub fn corpus(&self) -> PathBuf {
        self.root.join("corpus")
    }
    pub fn features(&self) -> PathBuf {
        self.root.join("features")
    }
    pub fn feature_table(&self) -> PathBuf {
        self.features().join("features.csv")
    }
    pub fn images(&self) -> PathBuf {
        self.root.join("images")
    }
    pub fn image_labels(&self) -> PathBuf {
        self.images().join("labels.csv")
    }
    pub fn predicates(&self) -> PathBuf {
        self.root.join("predicates")
    }
    pub fn suite(&self) -> PathBuf {
        self.predicates().join("suite.json")
    }
    pub fn signals(&self) -> PathBuf {
        self.root.join("signals")
    }
    pub fn trajectories(&self) -> PathBuf {
        self.root.join("trajectories")
    }
    pub fn trajectory_labels(&self) -> PathBuf {
        self.trajectories().join("labels.csv")
    }
    pub fn formula(&self) -> PathBuf {
        self.root.join("formula")
    }
    pub fn synthesis(&self) -> PathBuf {
        self.root.join("synthesis")
    }
}

fn skip(run: &StageRun) -> bool {
    if run.up_to_date() {
        log::info!("{}: up to date, nothing to do", run.name);
        true
    } else {
        log::info!("{}: running", run.name);
        false
    }
}

/// `(id, D1, D2)` of every finished run listed in the sweep manifest.
fn corpus_runs(corpus: &Path) -> Result<Vec<(String, f64, f64)>, CliError> {
    let path = corpus.join(SWEEP_MANIFEST);
    let text = fs::read_to_string(&path).map_err(|_| CliError::missing(&path, "simulate"))?;
    let mut runs = Vec::new();
    for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let cells: Vec<&str> = line.split(',').collect();
        let bad = || CliError::user(format!("malformed row in {}: {line:?}", path.display()));
        if cells.len() != 5 {
            return Err(bad());
        }
        if cells[3] == "ok" {
            let d1 = cells[0].parse().map_err(|_| bad())?;
            let d2 = cells[1].parse().map_err(|_| bad())?;
            runs.push((cells[4].to_string(), d1, d2));
        }
    }
    runs.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(runs)
}

fn builtin(cfg: &PipelineConfig) -> Result<BuiltinDescriptor, CliError> {
    match &cfg.extract {
        ExtractorConfig::BuiltinDescriptor(b) => {
            BuiltinDescriptor::new(b.clone()).map_err(|e| CliError::user(format!("extract: {e}")))
        }
        ExtractorConfig::ExternalTable { .. } => Err(CliError::user(
            "synthesis needs an in-process extractor; an external feature table cannot describe new trajectories",
        )),
    }
}

pub fn simulate(cfg: &PipelineConfig) -> Result<(), CliError> {
    let l = Layout::new(&cfg.out);
    let run = StageRun::new("simulate", l.corpus(), &(&cfg.simulate, cfg.seed), &[])?;
    if skip(&run) {
        return Ok(());
    }
    run.prepare()?;
    let grid: Vec<(f64, f64)> = cfg.simulate.regimes.iter().map(|r| (r[0], r[1])).collect();
    let entries = sweep(
        &grid,
        &cfg.simulate.params,
        cfg.simulate.seed_policy(cfg.seed),
        cfg.simulate.replicates,
        &run.dir,
    )
    .map_err(|e| match e {
        svmstl::rdsim::SimError::InvalidParams(m) => CliError::user(format!("simulate: {m}")),
        other => other.into(),
    })?;
    let mut report = run.report_header();
    let blowups = entries
        .iter()
        .filter(|e| e.status != SweepStatus::Ok)
        .count();
    writeln!(report, "runs {}\ndiverged {blowups}", entries.len()).unwrap();
    for e in &entries {
        let status = match &e.status {
            SweepStatus::Ok => "ok".to_string(),
            SweepStatus::BlowUp(m) => format!("diverged at {m}"),
        };
        writeln!(
            report,
            "D1={} D2={} replicate={} seed={} {status}",
            e.d1, e.d2, e.replicate, e.seed
        )
        .unwrap();
    }
    run.write("report.txt", report)?;
    run.finish(&[SWEEP_MANIFEST, "report.txt"])
}

pub fn extract(cfg: &PipelineConfig) -> Result<(), CliError> {
    let l = Layout::new(&cfg.out);
    let corpus = l.corpus();
    let mut inputs: Vec<(&Path, &str)> = vec![(corpus.as_path(), "simulate")];
    let external = match &cfg.extract {
        ExtractorConfig::ExternalTable { table_path } => Some(table_path.clone()),
        ExtractorConfig::BuiltinDescriptor(_) => None,
    };
    if let Some(p) = &external {
        if !p.exists() {
            return Err(CliError::user(format!(
                "external feature table {} not found",
                p.display()
            )));
        }
        inputs.push((p.as_path(), "extract"));
    }
    let run = StageRun::new("extract", l.features(), &cfg.extract, &inputs)?;
    if skip(&run) {
        return Ok(());
    }
    run.prepare()?;
    let runs = corpus_runs(&corpus)?;
    let table = match &external {
        Some(path) => {
            let table = load_feature_table(path).map_err(|e| CliError::user(e.to_string()))?;
            for (id, _, _) in &runs {
                let meta = read_manifest(&corpus.join(id).join(TRAJECTORY_MANIFEST))?;
                let frames: usize = meta.get("frames").and_then(|v| v.parse().ok()).unwrap_or(0);
                let have = table.trajectory(id).len();
                if have != frames {
                    return Err(CliError::user(format!(
                        "external table has {have} rows for trajectory {id}, the corpus has {frames} frames"
                    )));
                }
            }
            fs::copy(path, l.feature_table())?;
            table
        }
        None => {
            let ex = builtin(cfg)?;
            let mut table = FeatureTable::new(ex.id(), ex.dim());
            for (id, _, _) in &runs {
                let traj = load_trajectory(&corpus.join(id))?;
                let vectors = traj
                    .frames()
                    .par_iter()
                    .map(|f| ex.extract(f))
                    .collect::<Result<Vec<_>, _>>()?;
                for (k, v) in vectors.into_iter().enumerate() {
                    table.insert(id, k, v)?;
                }
            }
            run.write("features.csv", table.to_text())?;
            table
        }
    };
    let mut report = run.report_header();
    writeln!(
        report,
        "extractor {}\nm {}\ntrajectories {}\nrows {}",
        table.extractor_id,
        table.m,
        table.trajectory_ids().len(),
        table.len()
    )
    .unwrap();
    run.write("report.txt", report)?;
    run.finish(&["features.csv", "report.txt"])
}

/// Applies a relabel map; 0 marks a dropped item. The surviving labels must
/// be exactly `1..=n'`.
fn relabel(
    labels: &[usize],
    map: &BTreeMap<String, usize>,
    n: usize,
) -> Result<(Vec<usize>, usize), CliError> {
    let out: Vec<usize> = labels
        .iter()
        .map(|l| map.get(&l.to_string()).copied().unwrap_or(*l))
        .collect();
    let targets: std::collections::BTreeSet<usize> = (1..=n)
        .map(|l| map.get(&l.to_string()).copied().unwrap_or(l))
        .filter(|l| *l != 0)
        .collect();
    let count = targets.len();
    if count == 0 || targets.iter().copied().ne(1..=count) {
        return Err(CliError::user(format!(
            "relabel map must send the {n} clusters onto 1..=n' (got targets {targets:?})"
        )));
    }
    Ok((out, count))
}

fn curve_csv(curve: &[(usize, f64)]) -> String {
    let mut s = String::from("n,criterion\n");
    for (n, c) in curve {
        writeln!(s, "{n},{c}").unwrap();
    }
    s
}

fn history_csv(history: &[f64]) -> String {
    let mut s = String::from("iteration,criterion\n");
    for (i, c) in history.iter().enumerate() {
        writeln!(s, "{i},{c}").unwrap();
    }
    s
}

/// Up to `samples` members tiled left to right with one-pixel white gaps.
fn montage(frames: &[Image]) -> Result<Image, CliError> {
    let (w, h, c) = frames[0].shape();
    let width = frames.len() * (w + 1) - 1;
    let mut px = vec![1.0; width * h * c];
    for (i, f) in frames.iter().enumerate() {
        for r in 0..h {
            for col in 0..w {
                for ch in 0..c {
                    px[(r * width + i * (w + 1) + col) * c + ch] = f.get(r, col, ch);
                }
            }
        }
    }
    Ok(Image::new(width, h, c, px)?)
}

fn load_table(l: &Layout) -> Result<FeatureTable, CliError> {
    let path = l.feature_table();
    if !path.exists() {
        return Err(CliError::missing(&path, "extract"));
    }
    Ok(load_feature_table(&path)?)
}

pub fn cluster_images(cfg: &PipelineConfig) -> Result<(), CliError> {
    let l = Layout::new(&cfg.out);
    let c = &cfg.cluster_images;
    let (table_path, corpus) = (l.feature_table(), l.corpus());
    let run = StageRun::new(
        "cluster-images",
        l.images(),
        &(c, cfg.seed),
        &[(&table_path, "extract"), (&corpus, "simulate")],
    )?;
    if skip(&run) {
        return Ok(());
    }
    run.prepare()?;
    let table = load_table(&l)?;
    let items: Vec<(&(String, usize), &FeatureVector)> = table
        .rows
        .iter()
        .filter(|((_, k), _)| k % c.frame_stride == 0)
        .collect();
    if items.is_empty() {
        return Err(CliError::user("feature table is empty"));
    }
    let points: Vec<Vec<f64>> = items.iter().map(|(_, v)| v.values().to_vec()).collect();
    let fit = |n: usize| -> Result<ClusterResult, CliError> {
        cluster_points_pso(&points, n, DistanceKind::Squared, &c.pso, &c.stop, cfg.seed)
            .map_err(|e| CliError::user(format!("cluster-images: {e}")))
    };
    let mut curve = Vec::new();
    for &n in c.curve.iter().filter(|n| **n != c.n) {
        curve.push((n, fit(n)?.model.criterion));
    }
    let result = fit(c.n)?;
    curve.push((c.n, result.model.criterion));
    curve.sort_by_key(|(n, _)| *n);
    let (labels, n_final) = relabel(&result.assignment.labels, &c.relabel, c.n)?;

    let mut csv = String::from("# item,label\n");
    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, ((traj, k), _)) in items.iter().enumerate() {
        if labels[i] != 0 {
            writeln!(csv, "{traj}:{k},{}", labels[i]).unwrap();
            members.entry(labels[i]).or_default().push(i);
        }
    }
    run.write("labels.csv", csv)?;
    save_cluster_model(&result.model, &run.dir.join("model.txt"))?;
    run.write("criterion.csv", curve_csv(&curve))?;
    run.write("history.csv", history_csv(&result.history))?;

    let mut outputs = vec![
        "labels.csv",
        "model.txt",
        "criterion.csv",
        "history.csv",
        "report.txt",
    ];
    let mut montage_names = Vec::new();
    for (label, idx) in &members {
        let s = c.montage_samples.min(idx.len());
        if s == 0 {
            continue;
        }
        let frames = (0..s)
            .map(|j| {
                let ((traj, k), _) = items[idx[j * idx.len() / s]];
                load_image(&corpus.join(traj).join(format!("frame_{k:04}.pgm")))
                    .or_else(|_| load_image(&corpus.join(traj).join(format!("frame_{k:04}.ppm"))))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let name = format!("montage_class_{label}.png");
        save_image(&montage(&frames)?, &run.dir.join(&name))?;
        montage_names.push(name);
    }
    outputs.extend(montage_names.iter().map(String::as_str));

    let mut report = run.report_header();
    writeln!(
        report,
        "images {}\nclusters {}\nclasses {n_final}\ncriterion {}",
        items.len(),
        c.n,
        result.model.criterion
    )
    .unwrap();
    for (label, idx) in &members {
        writeln!(report, "class {label}: {} images", idx.len()).unwrap();
    }
    for (n, crit) in &curve {
        writeln!(report, "n={n} criterion={crit}").unwrap();
    }
    run.write("report.txt", report)?;
    run.finish(&outputs)
}

/// `id,label` rows of a label file.
fn read_labels(path: &Path, producer: &str) -> Result<Vec<(String, usize)>, CliError> {
    let text = fs::read_to_string(path).map_err(|_| CliError::missing(path, producer))?;
    let mut out = Vec::new();
    for line in text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
    {
        let (id, label) = line.rsplit_once(',').ok_or_else(|| {
            CliError::user(format!("malformed row in {}: {line:?}", path.display()))
        })?;
        let label = label
            .trim()
            .parse()
            .map_err(|_| CliError::user(format!("bad label in {}: {line:?}", path.display())))?;
        out.push((id.to_string(), label));
    }
    Ok(out)
}

pub fn learn_predicates(cfg: &PipelineConfig) -> Result<(), CliError> {
    let l = Layout::new(&cfg.out);
    let (table_path, labels_path) = (l.feature_table(), l.image_labels());
    let run = StageRun::new(
        "learn-predicates",
        l.predicates(),
        &cfg.predicates,
        &[(&table_path, "extract"), (&labels_path, "cluster-images")],
    )?;
    if skip(&run) {
        return Ok(());
    }
    run.prepare()?;
    let table = load_table(&l)?;
    let labels = read_labels(&labels_path, "cluster-images")?;
    let n = labels.iter().map(|(_, c)| *c).max().unwrap_or(0);
    let items = labels
        .iter()
        .map(|(id, c)| {
            let (traj, k) = id
                .rsplit_once(':')
                .and_then(|(t, k)| Some((t, k.parse::<usize>().ok()?)))
                .ok_or_else(|| CliError::user(format!("bad image id {id:?}")))?;
            Ok((table.get(traj, k)?.clone(), *c as i32))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let dataset = LabeledDataset::new(items, LabelKind::ImageClass(n))?;
    let suite = fit_suite(&dataset, &cfg.predicates)?;
    save_suite(&suite, &run.dir.join("suite.json"))?;

    let mut report = run.report_header();
    writeln!(
        report,
        "extractor {}\npredicates {}",
        suite.extractor_id,
        suite.len()
    )
    .unwrap();
    for m in suite.models() {
        let correct = dataset
            .items()
            .iter()
            .filter(|(f, c)| (m.value(f).map_or(false, |v| v > 0.0)) == (*c as usize == m.class))
            .count();
        let s = &m.svm.stats;
        writeln!(
            report,
            "h{}: training accuracy {:.4} margin {:.6} violations {} support vectors {} iterations {}",
            m.class,
            correct as f64 / dataset.len() as f64,
            s.margin,
            s.margin_violations,
            s.support_vectors,
            s.iterations
        )
        .unwrap();
    }
    run.write("report.txt", report)?;
    run.finish(&["suite.json", "report.txt"])
}

fn load_suite_checked(l: &Layout) -> Result<PredicateSuite, CliError> {
    let path = l.suite();
    if !path.exists() {
        return Err(CliError::missing(&path, "learn-predicates"));
    }
    Ok(load_suite(&path)?)
}

pub fn signals(cfg: &PipelineConfig) -> Result<(), CliError> {
    let l = Layout::new(&cfg.out);
    let (table_path, suite_path) = (l.feature_table(), l.suite());
    let run = StageRun::new(
        "signals",
        l.signals(),
        &(),
        &[(&table_path, "extract"), (&suite_path, "learn-predicates")],
    )?;
    if skip(&run) {
        return Ok(());
    }
    if run.dir.exists() {
        fs::remove_dir_all(&run.dir)?;
    }
    run.prepare()?;
    let table = load_table(&l)?;
    let suite = load_suite_checked(&l)?;
    if suite.extractor_id != table.extractor_id {
        return Err(CliError::user(format!(
            "predicates were learned on {} features but the table holds {}; rerun learn-predicates",
            suite.extractor_id, table.extractor_id
        )));
    }
    let ids = table.trajectory_ids();
    let mut index = String::from("# trajectory\n");
    let mut shape = (0, 0);
    for id in &ids {
        let s = suite.signal_from_table(&table, id)?;
        shape = (s.len(), s.dims());
        save_signal(&s, &run.dir.join(format!("{id}.csv")))?;
        writeln!(index, "{id}").unwrap();
    }
    run.write("index.csv", index)?;
    let mut report = run.report_header();
    writeln!(
        report,
        "signals {}\nsamples {}\ndimensions {}",
        ids.len(),
        shape.0,
        shape.1
    )
    .unwrap();
    run.write("report.txt", report)?;
    run.finish(&["index.csv", "report.txt"])
}

fn load_signals(l: &Layout) -> Result<Vec<(String, StSignal)>, CliError> {
    let index = l.signals().join("index.csv");
    let text = fs::read_to_string(&index).map_err(|_| CliError::missing(&index, "signals"))?;
    text.lines()
        .filter(|x| !x.starts_with('#') && !x.trim().is_empty())
        .map(|id| {
            Ok((
                id.to_string(),
                load_signal(&l.signals().join(format!("{id}.csv")))?,
            ))
        })
        .collect()
}

pub fn cluster_trajectories_cmd(cfg: &PipelineConfig) -> Result<(), CliError> {
    let l = Layout::new(&cfg.out);
    let c = &cfg.cluster_trajectories;
    let (signals_dir, sweep_csv) = (l.signals(), l.corpus().join(SWEEP_MANIFEST));
    let run = StageRun::new(
        "cluster-trajectories",
        l.trajectories(),
        &(c, cfg.seed),
        &[(&signals_dir, "signals"), (&sweep_csv, "simulate")],
    )?;
    if skip(&run) {
        return Ok(());
    }
    run.prepare()?;
    let named = load_signals(&l)?;
    let signals: Vec<StSignal> = named.iter().map(|(_, s)| s.clone()).collect();
    let fit = |n: usize| -> Result<ClusterResult, CliError> {
        cluster_trajectories(&signals, n, &c.dtw, &c.pso, &c.stop, cfg.seed)
            .map_err(|e| CliError::user(format!("cluster-trajectories: {e}")))
    };
    let mut curve = Vec::new();
    for &n in c.curve.iter().filter(|n| **n != c.n) {
        curve.push((n, fit(n)?.model.criterion));
    }
    let result = fit(c.n)?;
    curve.push((c.n, result.model.criterion));
    curve.sort_by_key(|(n, _)| *n);
    let (labels, n_final) = relabel(&result.assignment.labels, &c.relabel, c.n)?;

    let mut csv = String::from("# item,label\n");
    for ((id, _), label) in named.iter().zip(&labels) {
        if *label != 0 {
            writeln!(csv, "{id},{label}").unwrap();
        }
    }
    run.write("labels.csv", csv)?;
    save_cluster_model(&result.model, &run.dir.join("model.txt"))?;
    run.write("criterion.csv", curve_csv(&curve))?;
    run.write("history.csv", history_csv(&result.history))?;

    let regimes: BTreeMap<String, (f64, f64)> = corpus_runs(&l.corpus())?
        .into_iter()
        .map(|(id, a, b)| (id, (a, b)))
        .collect();
    let mut table: BTreeMap<(String, usize), usize> = BTreeMap::new();
    for ((id, _), label) in named.iter().zip(&labels) {
        let key = regimes
            .get(id)
            .map_or("external".to_string(), |(a, b)| format!("D1={a} D2={b}"));
        *table.entry((key, *label)).or_default() += 1;
    }
    let mut report = run.report_header();
    writeln!(
        report,
        "trajectories {}\nclusters {}\nclasses {n_final}\ncriterion {}",
        named.len(),
        c.n,
        result.model.criterion
    )
    .unwrap();
    for ((regime, label), count) in &table {
        writeln!(report, "{regime} -> class {label}: {count}").unwrap();
    }
    for (n, crit) in &curve {
        writeln!(report, "n={n} criterion={crit}").unwrap();
    }
    run.write("report.txt", report)?;
    run.finish(&[
        "labels.csv",
        "model.txt",
        "criterion.csv",
        "history.csv",
        "report.txt",
    ])
}

pub fn learn_formula(cfg: &PipelineConfig) -> Result<(), CliError> {
    let l = Layout::new(&cfg.out);
    let f = &cfg.learn_formula;
    let (signals_dir, labels_path) = (l.signals(), l.trajectory_labels());
    let run = StageRun::new(
        "learn-formula",
        l.formula(),
        &(f, cfg.seed),
        &[
            (&signals_dir, "signals"),
            (&labels_path, "cluster-trajectories"),
        ],
    )?;
    if skip(&run) {
        return Ok(());
    }
    run.prepare()?;
    let signals: BTreeMap<String, StSignal> = load_signals(&l)?.into_iter().collect();
    let labels = read_labels(&labels_path, "cluster-trajectories")?;
    let n = labels.iter().map(|(_, c)| *c).max().unwrap_or(0);
    let items = labels
        .iter()
        .map(|(id, c)| {
            let s = signals.get(id).ok_or_else(|| {
                CliError::user(format!("no signal for trajectory {id}; rerun signals"))
            })?;
            Ok((s.clone(), *c as i32))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let dataset = LabeledDataset::new(items, LabelKind::TrajectoryClass(n))?;
    let user = |e: svmstl::inference::InferenceError| match e {
        svmstl::inference::InferenceError::Config(m) => {
            CliError::user(format!("learn-formula: {m}"))
        }
        svmstl::inference::InferenceError::Data(d) => CliError::user(format!("learn-formula: {d}")),
        other => other.into(),
    };

    let t = Instant::now();
    let model = learn_one_vs_rest(&dataset, &f.boost, cfg.seed).map_err(user)?;
    let learn_secs = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let cv = cross_validate(&dataset, &f.boost, f.folds, cfg.seed).map_err(user)?;
    let cv_secs = t.elapsed().as_secs_f64();

    save_multiclass(&model, &run.dir.join("model.json"))?;
    let mut outputs = vec![
        "model.json".to_string(),
        "metrics.txt".into(),
        "metrics.json".into(),
        "report.txt".into(),
    ];
    let mut report = run.report_header();
    writeln!(report, "trajectories {}\nclasses {n}", dataset.len()).unwrap();
    for cm in &model.classes {
        let trees = cm.formulas.join("\n") + "\n";
        let trees_name = format!("class_{}_trees.stl", cm.class);
        run.write(&trees_name, trees)?;
        outputs.push(trees_name);
        if let Some(w) = &cm.weighted {
            let name = format!("class_{}.stl", cm.class);
            run.write(&name, format!("{w}\n"))?;
            outputs.push(name);
        }
        let view = svmstl::inference::binary_view(&dataset, cm.class as i32).map_err(user)?;
        let acc = 1.0 - svmstl::inference::mcr(&cm.bdt, &view);
        // the weighted conjunction is an export; classification uses the vote
        let agreement = cm
            .weighted
            .as_ref()
            .and_then(|w| parse_formula(w).ok())
            .map(|phi| {
                let same = view
                    .items()
                    .iter()
                    .filter(|(s, _)| {
                        let vote = cm.bdt.predict(s).ok();
                        let sat = satisfies(s, &phi, 0).ok();
                        matches!((vote, sat), (Some(v), Some(q)) if (v == 1) == q)
                    })
                    .count();
                same as f64 / view.len() as f64
            });
        writeln!(
            report,
            "class {}: training accuracy {:.4}, trees {}, alphas {:?}, weighted-formula agreement {}",
            cm.class,
            acc,
            cm.bdt.trees.len(),
            cm.bdt.alphas,
            agreement.map_or("n/a".to_string(), |a| format!("{a:.4}"))
        )
        .unwrap();
    }
    let metrics = format!("{}{}", run.report_header(), metrics_table(&cv));
    run.write("metrics.txt", metrics)?;
    run.write(
        "metrics.json",
        serde_json::to_string_pretty(&cv).expect("report serializes") + "\n",
    )?;
    run.write("report.txt", report)?;
    run.write(
        "runtime_detail.txt",
        format!("learn {learn_secs:.3} s\ncross-validation {cv_secs:.3} s\n"),
    )?;
    let outputs: Vec<&str> = outputs.iter().map(String::as_str).collect();
    run.finish(&outputs)
}

pub fn synthesize(cfg: &PipelineConfig) -> Result<(), CliError> {
    let l = Layout::new(&cfg.out);
    let s = &cfg.synthesize;
    let text = s
        .formula
        .as_ref()
        .ok_or_else(|| CliError::user("synthesize.formula is not set"))?;
    let formula =
        parse_formula(text).map_err(|e| CliError::user(format!("synthesize.formula: {e}")))?;
    let suite_path = l.suite();
    let run = StageRun::new(
        "synthesize",
        l.synthesis(),
        &(s, &cfg.simulate.params, &cfg.extract, cfg.seed),
        &[(&suite_path, "learn-predicates")],
    )?;
    if skip(&run) {
        return Ok(());
    }
    if run.dir.exists() {
        fs::remove_dir_all(&run.dir)?;
    }
    run.prepare()?;
    let suite = load_suite_checked(&l)?;
    if formula.max_class() > suite.len() {
        return Err(CliError::user(format!(
            "formula uses h{} but the suite has {} predicates",
            formula.max_class(),
            suite.len()
        )));
    }
    let ex = builtin(cfg)?;
    let bounds = Bounds::new(s.lower.to_vec(), s.upper.to_vec())
        .map_err(|e| CliError::user(format!("synthesize: {e}")))?;
    let system = RdSystem::new(cfg.simulate.params.clone(), bounds)
        .map_err(|e| CliError::user(e.to_string()))?;
    let search = SynthesisConfig {
        pso: s.pso.clone(),
        stop: s.stop.clone(),
        seed: cfg.seed,
        simulation_seed: s.simulation_seed.unwrap_or(cfg.seed),
        seed_mode: s.seed_mode,
        resolution: s.resolution,
    };
    let map = SuiteSignal {
        suite: &suite,
        extractor: &ex,
    };
    let result = run_synthesis(&system, &formula, &map, &search).map_err(|e| match e {
        svmstl::synthesis::SynthesisError::Horizon { .. }
        | svmstl::synthesis::SynthesisError::Config(_) => {
            CliError::user(format!("synthesize: {e}"))
        }
        svmstl::synthesis::SynthesisError::Pso(p) => CliError::user(format!("synthesize: {p}")),
        other => other.into(),
    })?;

    let finite = |v: f64| if v.is_finite() { Some(v) } else { None };
    let json = serde_json::json!({
        "formula": formula.to_string(),
        "d1": result.pi[0],
        "d2": result.pi[1],
        "rho": finite(result.rho),
        "rho_text": result.rho.to_string(),
        "satisfied": result.rho > 0.0,
        "simulation_seed": result.seed,
        "evaluations": result.evaluations,
        "simulations": result.simulations,
        "failures": result.failures,
    });
    run.write(
        "result.json",
        serde_json::to_string_pretty(&json).expect("result serializes") + "\n",
    )?;
    let mut csv = String::from("iteration,rho,d1,d2\n");
    for (i, (r, p)) in result.history.iter().zip(&result.best_points).enumerate() {
        writeln!(csv, "{i},{r},{},{}", p[0], p[1]).unwrap();
    }
    run.write("history.csv", csv)?;
    let mut outputs = vec!["result.json", "history.csv", "report.txt"];
    if let (Some(w), Some(sig)) = (&result.witness, &result.witness_signal) {
        let mut meta = BTreeMap::new();
        meta.insert("D1".to_string(), result.pi[0].to_string());
        meta.insert("D2".to_string(), result.pi[1].to_string());
        meta.insert("seed".to_string(), result.seed.to_string());
        save_trajectory(w, &run.dir.join("witness"), &meta)?;
        save_signal(sig, &run.dir.join("witness_signal.csv"))?;
        outputs.extend(["witness", "witness_signal.csv"]);
    }
    let mut report = run.report_header();
    writeln!(
        report,
        "formula {formula}\nD1 {}\nD2 {}\nrho {}\nsatisfied {}\nevaluations {}\nsimulations {}\nfailures {}",
        result.pi[0],
        result.pi[1],
        result.rho,
        result.rho > 0.0,
        result.evaluations,
        result.simulations,
        result.failures.len()
    )
    .unwrap();
    run.write("report.txt", report)?;
    run.finish(&outputs)
}

pub fn pipeline(cfg: &PipelineConfig) -> Result<(), CliError> {
    simulate(cfg)?;
    extract(cfg)?;
    cluster_images(cfg)?;
    learn_predicates(cfg)?;
    signals(cfg)?;
    cluster_trajectories_cmd(cfg)?;
    learn_formula(cfg)?;
    if cfg.synthesize.formula.is_some() {
        synthesize(cfg)?;
    } else {
        log::info!("synthesize: no formula configured, skipped");
    }
    Ok(())
}
