//! Repeated, seeded experiments over several graphs and algorithms.
//!
//! An experiment is described by a TOML file:
//!
//! ```toml
//! runs = 20                 # repetitions per (case, algorithm)
//! base_seed = 1             # run r uses seed base_seed + r
//! algorithms = ["tlbo", "atlbo"]
//! output_dir = "results"    # relative to this file
//! fis = "controller.fis"    # optional, defaults to the shipped controller
//!
//! [search]
//! pop_size = 40
//! max_evals = 5000
//!
//! [[case]]
//! name = "printer_manager"
//! mdg = "printer_manager.mdg"
//! max_evals = 8000          # optional per-case override of any search field
//! ```
//!
//! Outputs under `output_dir`:
//!
//! - `runs.csv`: `case,algorithm,run,seed,best_mq,evals_used,iterations,wall_ms`,
//!   one row per run. Only the trailing `wall_ms` column varies between
//!   identical invocations.
//! - `run_partitions.csv`: `case,algorithm,run,labels`, the canonical cluster
//!   label of every module (space-separated, module order) for each run.
//! - `summary.csv`: `case,algorithm,best,std,mean`.
//! - `summary.txt`: the same numbers as a side-by-side table.
//! - `best_<case>.json`: the best partition found for each case.
//!
//! MQ values are written with 6 decimal places.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fuzzy::{load_fis_config, FuzzyError, FuzzySystem};
use crate::mdg::{parse_mdg, MdgError, ModuleGraph};
use crate::optimizer::{self, Algorithm, OptimizerError, RunResult, SearchConfig};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Graph { path: PathBuf, source: MdgError },
    #[error("{}: {source}", path.display())]
    Fis { path: PathBuf, source: FuzzyError },
    #[error("case {case}: {source}")]
    Search { case: String, source: OptimizerError },
    #[error("cannot summarize an empty list of runs")]
    NoRuns,
    #[error("writing {}: {message}", path.display())]
    Output { path: PathBuf, message: String },
}

pub fn read_file(path: &Path) -> Result<String, BenchError> {
    fs::read_to_string(path).map_err(|source| match source.kind() {
        io::ErrorKind::NotFound => BenchError::FileNotFound(path.to_path_buf()),
        _ => BenchError::Io {
            path: path.to_path_buf(),
            source,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchDefaults {
    #[serde(default = "default_pop_size")]
    pub pop_size: usize,
    #[serde(default = "default_max_evals")]
    pub max_evals: usize,
}

fn default_pop_size() -> usize {
    40
}

fn default_max_evals() -> usize {
    5000
}

fn default_runs() -> usize {
    20
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

fn default_algorithms() -> Vec<Algorithm> {
    vec![Algorithm::Tlbo, Algorithm::Atlbo]
}

impl Default for SearchDefaults {
    fn default() -> Self {
        Self {
            pop_size: default_pop_size(),
            max_evals: default_max_evals(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseSpec {
    pub name: String,
    pub mdg: PathBuf,
    #[serde(default)]
    pub pop_size: Option<usize>,
    #[serde(default)]
    pub max_evals: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(rename = "case", default)]
    pub cases: Vec<CaseSpec>,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub search: SearchDefaults,
    #[serde(rename = "fis", default)]
    pub fis_path: Option<PathBuf>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Parses TOML; relative paths are resolved against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self, BenchError> {
        let mut config: Self = toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        };
        for case in &mut config.cases {
            resolve(&mut case.mdg);
        }
        if let Some(p) = &mut config.fis_path {
            resolve(p);
        }
        resolve(&mut config.output_dir);
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = read_file(path)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_toml_str(&text, base)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let fail = |m: String| Err(BenchError::Config(m));
        if self.runs == 0 {
            return fail("runs must be at least 1".into());
        }
        if self.cases.is_empty() {
            return fail("at least one [[case]] is required".into());
        }
        if self.algorithms.is_empty() {
            return fail("at least one algorithm is required".into());
        }
        for (i, a) in self.algorithms.iter().enumerate() {
            if self.algorithms[..i].contains(a) {
                return fail(format!("algorithm {a} listed twice"));
            }
        }
        for (i, case) in self.cases.iter().enumerate() {
            let valid = !case.name.is_empty()
                && case
                    .name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
            if !valid {
                return fail(format!(
                    "case name {:?} must be non-empty and use only letters, digits, '_', '-' or '.'",
                    case.name
                ));
            }
            if self.cases[..i].iter().any(|c| c.name == case.name) {
                return fail(format!("case {:?} listed twice", case.name));
            }
        }
        Ok(())
    }

    fn search_config(&self, case: &CaseSpec, algorithm: Algorithm, seed: u64) -> SearchConfig {
        SearchConfig {
            pop_size: case.pop_size.unwrap_or(self.search.pop_size),
            max_evals: case.max_evals.unwrap_or(self.search.max_evals),
            seed,
            algorithm,
        }
    }

    pub fn seed_for_run(&self, run: usize) -> u64 {
        self.base_seed.wrapping_add(run as u64)
    }
}

/// Best, mean and sample standard deviation of per-run best MQ values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStats {
    pub best: f64,
    pub mean: f64,
    /// `n - 1` denominator; 0 for a single run.
    pub std: f64,
    pub runs: usize,
}

impl SummaryStats {
    pub fn from_values(values: &[f64]) -> Result<Self, BenchError> {
        if values.is_empty() {
            return Err(BenchError::NoRuns);
        }
        let n = values.len();
        let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n == 1 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Ok(Self {
            best,
            mean,
            std,
            runs: n,
        })
    }
}

pub fn summarize(results: &[RunResult]) -> Result<SummaryStats, BenchError> {
    let values: Vec<f64> = results.iter().map(|r| r.best_mq).collect();
    SummaryStats::from_values(&values)
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub case: String,
    pub algorithm: Algorithm,
    pub run: usize,
    pub seed: u64,
    pub result: RunResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub case: String,
    pub algorithm: Algorithm,
    pub stats: SummaryStats,
}

/// Best partition found for a case across all algorithms and runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestPartition {
    pub case: String,
    pub algorithm: Algorithm,
    pub run: usize,
    pub seed: u64,
    pub mq: f64,
    pub cluster_count: usize,
    pub clusters: BTreeMap<String, usize>,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    /// Ordered by case, then algorithm, then run index.
    pub runs: Vec<RunRecord>,
    pub summaries: Vec<SummaryRow>,
    pub best_partitions: Vec<BestPartition>,
}

struct LoadedCase<'c> {
    spec: &'c CaseSpec,
    graph: ModuleGraph,
}

/// Loads and validates everything an experiment needs, without running it.
fn prepare(config: &ExperimentConfig) -> Result<(Vec<LoadedCase<'_>>, Option<FuzzySystem>), BenchError> {
    config.validate()?;
    let mut cases = Vec::with_capacity(config.cases.len());
    for spec in &config.cases {
        let text = read_file(&spec.mdg)?;
        let graph = parse_mdg(&text).map_err(|source| BenchError::Graph {
            path: spec.mdg.clone(),
            source,
        })?;
        for &algorithm in &config.algorithms {
            let search = config.search_config(spec, algorithm, 0);
            search
                .validate()
                .and_then(|_| optimizer::Problem::new(&graph).map(|_| ()))
                .map_err(|source| BenchError::Search {
                    case: spec.name.clone(),
                    source,
                })?;
        }
        cases.push(LoadedCase { spec, graph });
    }

    let fis = if config.algorithms.contains(&Algorithm::Atlbo) {
        let fis = match &config.fis_path {
            Some(path) => load_fis_config(&read_file(path)?).map_err(|source| BenchError::Fis {
                path: path.clone(),
                source,
            })?,
            None => FuzzySystem::default_controller(),
        };
        optimizer::FuzzyPhaseSelector::new(&fis).map_err(|source| BenchError::Search {
            case: "(controller)".into(),
            source,
        })?;
        Some(fis)
    } else {
        None
    };
    Ok((cases, fis))
}

/// Executes every run (in parallel) and assembles the report in
/// (case, algorithm, run) order. Does not write any files.
pub fn execute(config: &ExperimentConfig) -> Result<ExperimentReport, BenchError> {
    let (cases, fis) = prepare(config)?;

    let jobs: Vec<(usize, Algorithm, usize)> = cases
        .iter()
        .enumerate()
        .flat_map(|(c, _)| {
            config
                .algorithms
                .iter()
                .flat_map(move |&a| (0..config.runs).map(move |r| (c, a, r)))
        })
        .collect();

    let runs = jobs
        .par_iter()
        .map(|&(c, algorithm, run)| {
            let case = &cases[c];
            let seed = config.seed_for_run(run);
            let search = config.search_config(case.spec, algorithm, seed);
            optimizer::run(&case.graph, &search, fis.as_ref())
                .map(|result| RunRecord {
                    case: case.spec.name.clone(),
                    algorithm,
                    run,
                    seed,
                    result,
                })
                .map_err(|source| BenchError::Search {
                    case: case.spec.name.clone(),
                    source,
                })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut summaries = Vec::new();
    let mut best_partitions = Vec::new();
    for case in &cases {
        let mut best: Option<&RunRecord> = None;
        for &algorithm in &config.algorithms {
            let group: Vec<&RunRecord> = runs
                .iter()
                .filter(|r| r.case == case.spec.name && r.algorithm == algorithm)
                .collect();
            let values: Vec<f64> = group.iter().map(|r| r.result.best_mq).collect();
            summaries.push(SummaryRow {
                case: case.spec.name.clone(),
                algorithm,
                stats: SummaryStats::from_values(&values)?,
            });
            for r in group {
                if best.is_none_or(|b| r.result.best_mq > b.result.best_mq) {
                    best = Some(r);
                }
            }
        }
        let best = best.ok_or(BenchError::NoRuns)?;
        let names = case.graph.module_names();
        best_partitions.push(BestPartition {
            case: case.spec.name.clone(),
            algorithm: best.algorithm,
            run: best.run,
            seed: best.seed,
            mq: best.result.best_mq,
            cluster_count: best.result.best_labels.cluster_count(),
            clusters: names
                .iter()
                .cloned()
                .zip(best.result.best_labels.as_slice().iter().copied())
                .collect(),
        });
    }

    Ok(ExperimentReport {
        runs,
        summaries,
        best_partitions,
    })
}

fn csv_error(path: &Path, e: impl std::fmt::Display) -> BenchError {
    BenchError::Output {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

pub fn runs_csv(runs: &[RunRecord]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "case",
        "algorithm",
        "run",
        "seed",
        "best_mq",
        "evals_used",
        "iterations",
        "wall_ms",
    ])?;
    for r in runs {
        w.write_record([
            r.case.clone(),
            r.algorithm.to_string(),
            r.run.to_string(),
            r.seed.to_string(),
            format!("{:.6}", r.result.best_mq),
            r.result.evals_used.to_string(),
            r.result.iterations.to_string(),
            format!("{:.3}", r.result.wall_time.as_secs_f64() * 1e3),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner().expect("in-memory writer")).expect("CSV is UTF-8"))
}

pub fn run_partitions_csv(runs: &[RunRecord]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["case", "algorithm", "run", "labels"])?;
    for r in runs {
        let labels: Vec<String> = r.result.best_labels.as_slice().iter().map(usize::to_string).collect();
        w.write_record([
            r.case.clone(),
            r.algorithm.to_string(),
            r.run.to_string(),
            labels.join(" "),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner().expect("in-memory writer")).expect("CSV is UTF-8"))
}

pub fn summary_csv(rows: &[SummaryRow]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["case", "algorithm", "best", "std", "mean"])?;
    for row in rows {
        w.write_record([
            row.case.clone(),
            row.algorithm.to_string(),
            format!("{:.6}", row.stats.best),
            format!("{:.6}", row.stats.std),
            format!("{:.6}", row.stats.mean),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner().expect("in-memory writer")).expect("CSV is UTF-8"))
}

/// Cases as rows, one `best±std | mean` column pair per algorithm.
pub fn summary_table(rows: &[SummaryRow]) -> String {
    let mut algorithms: Vec<Algorithm> = Vec::new();
    let mut cases: Vec<&str> = Vec::new();
    for row in rows {
        if !algorithms.contains(&row.algorithm) {
            algorithms.push(row.algorithm);
        }
        if !cases.contains(&row.case.as_str()) {
            cases.push(&row.case);
        }
    }
    let case_width = cases.iter().map(|c| c.len()).max().unwrap_or(0).max(4);

    let mut out = String::new();
    let _ = write!(out, "{:case_width$}", "Case");
    for a in &algorithms {
        let _ = write!(out, "  {:<29}", a.as_str().to_uppercase());
    }
    out.push('\n');
    let _ = write!(out, "{:case_width$}", "");
    for _ in &algorithms {
        let _ = write!(out, "  {:<19} {:<9}", "Best", "Mean");
    }
    out.push('\n');
    for case in cases {
        let _ = write!(out, "{case:case_width$}");
        for a in &algorithms {
            match rows.iter().find(|r| r.case == case && r.algorithm == *a) {
                Some(r) => {
                    let cell = format!("{:.6}±{:.6}", r.stats.best, r.stats.std);
                    let _ = write!(out, "  {cell:<19} {:<9.6}", r.stats.mean);
                }
                None => {
                    let _ = write!(out, "  {:<19} {:<9}", "-", "-");
                }
            }
        }
        out.push('\n');
    }
    out
}

fn write_output(path: &Path, contents: &str) -> Result<(), BenchError> {
    fs::write(path, contents).map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes all report files into `dir`, creating it if needed.
pub fn write_report(report: &ExperimentReport, dir: &Path) -> Result<(), BenchError> {
    fs::create_dir_all(dir).map_err(|source| BenchError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = dir.join("runs.csv");
    write_output(&path, &runs_csv(&report.runs).map_err(|e| csv_error(&path, e))?)?;
    let path = dir.join("run_partitions.csv");
    write_output(&path, &run_partitions_csv(&report.runs).map_err(|e| csv_error(&path, e))?)?;
    let path = dir.join("summary.csv");
    write_output(&path, &summary_csv(&report.summaries).map_err(|e| csv_error(&path, e))?)?;
    write_output(&dir.join("summary.txt"), &summary_table(&report.summaries))?;
    for best in &report.best_partitions {
        let path = dir.join(format!("best_{}.json", best.case));
        let json = serde_json::to_string_pretty(best).map_err(|e| csv_error(&path, e))?;
        write_output(&path, &(json + "\n"))?;
    }
    Ok(())
}

/// Validates inputs, runs every repetition and writes the reports to
/// `config.output_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, BenchError> {
    let report = execute(config)?;
    write_report(&report, &config.output_dir)?;
    Ok(report)
}
