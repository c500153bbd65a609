mod artifacts;
mod config;
mod error;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use svmstl::data::io::load_signal;
use svmstl::logic::{parse_formula, robustness_weighted, satisfies};

use config::PipelineConfig;
use error::CliError;

#[derive(Parser)]
#[command(
    name = "svmstl",
    version,
    about = "Learn, monitor and synthesize SVM-STL specifications"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Pipeline config (TOML); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the reaction-diffusion parameter sweep.
    Simulate(Common),
    /// Compute (or import) per-frame feature vectors.
    Extract(Common),
    /// Cluster frames into spatial classes.
    ClusterImages(Common),
    /// Train one SVM predicate per spatial class.
    LearnPredicates(Common),
    /// Map every trajectory to its predicate signal.
    Signals(Common),
    /// Cluster signals into spatio-temporal classes.
    ClusterTrajectories(Common),
    /// Learn one-vs-rest boosted trees and their formulas.
    LearnFormula(Common),
    /// Search diffusion coefficients maximizing a formula's robustness.
    Synthesize(Common),
    /// Run every stage in order.
    Pipeline(Common),
    /// Print the default config.
    DefaultConfig,
    /// Check a formula on a stored signal.
    Monitor {
        /// File holding the formula.
        #[arg(long, conflicts_with = "expr", required_unless_present = "expr")]
        formula: Option<PathBuf>,
        /// Formula text.
        #[arg(long)]
        expr: Option<String>,
        #[arg(long)]
        signal: PathBuf,
        /// Time index to evaluate at.
        #[arg(long, default_value_t = 0)]
        at: usize,
    },
}

fn load_config(c: &Common) -> Result<PipelineConfig, CliError> {
    let mut cfg = match &c.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(o) = &c.out {
        cfg.out = o.clone();
    }
    cfg.validate()?;
    if let Some(j) = c.jobs {
        if j == 0 {
            return Err(CliError::user("--jobs must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| CliError::internal(e.to_string()))?;
    }
    Ok(cfg)
}

fn monitor(
    formula: Option<PathBuf>,
    expr: Option<String>,
    signal: PathBuf,
    at: usize,
) -> Result<(), CliError> {
    let text = match (formula, expr) {
        (Some(p), _) => std::fs::read_to_string(&p)
            .map_err(|e| CliError::user(format!("cannot read {}: {e}", p.display())))?,
        (None, Some(t)) => t,
        (None, None) => return Err(CliError::user("give --formula or --expr")),
    };
    let phi = parse_formula(text.trim()).map_err(|e| CliError::user(e.to_string()))?;
    let s = load_signal(&signal).map_err(|e| CliError::user(e.to_string()))?;
    let sat = satisfies(&s, &phi, at).map_err(|e| CliError::user(e.to_string()))?;
    let rho = robustness_weighted(&s, &phi, at).map_err(|e| CliError::user(e.to_string()))?;
    println!("formula {phi}\nsatisfied {sat}\nrobustness {rho}");
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(c) => stages::simulate(&load_config(&c)?),
        Command::Extract(c) => stages::extract(&load_config(&c)?),
        Command::ClusterImages(c) => stages::cluster_images(&load_config(&c)?),
        Command::LearnPredicates(c) => stages::learn_predicates(&load_config(&c)?),
        Command::Signals(c) => stages::signals(&load_config(&c)?),
        Command::ClusterTrajectories(c) => stages::cluster_trajectories_cmd(&load_config(&c)?),
        Command::LearnFormula(c) => stages::learn_formula(&load_config(&c)?),
        Command::Synthesize(c) => stages::synthesize(&load_config(&c)?),
        Command::Pipeline(c) => stages::pipeline(&load_config(&c)?),
        Command::DefaultConfig => {
            print!("{}", PipelineConfig::default().to_toml());
            Ok(())
        }
        Command::Monitor {
            formula,
            expr,
            signal,
            at,
        } => monitor(formula, expr, signal, at),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
