use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use modclust::bench::{self, ExperimentConfig};
use modclust::fuzzy::{load_fis_config, FuzzySystem};
use modclust::mdg::{brute_force_optimum, parse_mdg, ClusterLabels, ModuleGraph};
use modclust::optimizer::{self, Algorithm, SearchConfig};

#[derive(Parser)]
#[command(name = "modclust", version, about = "Cluster module dependency graphs by maximizing MQ")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one search and print the best clustering found.
    Cluster {
        mdg: PathBuf,
        #[arg(long, default_value = "atlbo")]
        algorithm: Algorithm,
        #[arg(long, default_value_t = 40)]
        pop_size: usize,
        #[arg(long, default_value_t = 5000)]
        max_evals: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fuzzy controller config (ATLBO); the shipped default if omitted.
        #[arg(long)]
        fis: Option<PathBuf>,
    },
    /// Run a full experiment described by a TOML config.
    Bench {
        #[arg(long)]
        config: PathBuf,
    },
    /// Exhaustively find the MQ-optimal clustering (at most 12 modules).
    Oracle { mdg: PathBuf },
    /// Evaluate the fuzzy controller for given measure values.
    FuzzyEval {
        #[arg(long)]
        fis: Option<PathBuf>,
        #[arg(long)]
        qm: f64,
        #[arg(long)]
        im: f64,
        #[arg(long)]
        dm: f64,
    },
}

fn load_graph(path: &Path) -> Result<ModuleGraph> {
    let text = bench::read_file(path)?;
    parse_mdg(&text).with_context(|| format!("{}", path.display()))
}

fn load_fis(path: Option<&Path>) -> Result<FuzzySystem> {
    match path {
        Some(path) => {
            let text = bench::read_file(path)?;
            load_fis_config(&text).with_context(|| format!("{}", path.display()))
        }
        None => Ok(FuzzySystem::default_controller()),
    }
}

fn print_assignment(graph: &ModuleGraph, labels: &ClusterLabels) {
    for (name, label) in graph.module_names().iter().zip(labels.as_slice()) {
        println!("{name}\t{label}");
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Cluster {
            mdg,
            algorithm,
            pop_size,
            max_evals,
            seed,
            fis,
        } => {
            let graph = load_graph(&mdg)?;
            let fis = match algorithm {
                Algorithm::Atlbo => Some(load_fis(fis.as_deref())?),
                Algorithm::Tlbo => None,
            };
            let config = SearchConfig {
                pop_size,
                max_evals,
                seed,
                algorithm,
            };
            let result = optimizer::run(&graph, &config, fis.as_ref())?;
            println!("algorithm: {algorithm}");
            println!("seed: {seed}");
            println!("MQ: {:.6}", result.best_mq);
            println!("clusters: {}", result.best_labels.cluster_count());
            println!("evaluations: {}", result.evals_used);
            print_assignment(&graph, &result.best_labels);
        }
        Command::Bench { config } => {
            let experiment = ExperimentConfig::load(&config)?;
            let report = bench::run_experiment(&experiment)?;
            print!("{}", bench::summary_table(&report.summaries));
            println!(
                "{} runs written to {}",
                report.runs.len(),
                experiment.output_dir.display()
            );
        }
        Command::Oracle { mdg } => {
            let graph = load_graph(&mdg)?;
            let (labels, mq) = brute_force_optimum(&graph)?;
            println!("MQ: {mq:.6}");
            println!("clusters: {}", labels.cluster_count());
            print_assignment(&graph, &labels);
        }
        Command::FuzzyEval { fis, qm, im, dm } => {
            let fis = load_fis(fis.as_deref())?;
            match fis.infer(qm, im, dm)? {
                Some(selection) => println!("{selection:.6}"),
                None => println!("undefined"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
