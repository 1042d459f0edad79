//! Teaching-learning-based search over cluster labelings.
//!
//! Individuals are continuous positions in `[1, D]^D` decoded to labels by
//! rounding. Every decoded candidate costs one fitness evaluation and the
//! initial population counts toward the budget, so runs of different
//! strategies with the same `max_evals` do the same amount of work.
//!
//! Which phases an individual undergoes each sweep is decided by a
//! [`PhaseSelector`]: [`TlboSchedule`] applies teacher then learner to
//! everyone, [`FuzzyPhaseSelector`] picks one of the two per individual from
//! a fuzzy controller.
//!
//! Randomness comes from a caller-supplied generator; the convenience entry
//! point [`run`] seeds ChaCha8 from `SearchConfig::seed`.

mod measures;
mod phases;
mod population;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fuzzy::{FuzzyError, FuzzySystem};
use crate::mdg::{ClusterLabels, ModuleGraph};

pub use measures::{diversification_measure, intensification_measure, quality_measure};
pub use phases::{
    greedy_accept, learner_phase_update, learner_step, random_peer, teacher_phase_update, teacher_step,
    Acceptance,
};
pub use population::{decode, initialize_population, Budget, Individual, Population, Problem};

/// Crisp controller outputs below this pick the teacher phase.
pub const SELECTION_THRESHOLD: f64 = 50.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizerError {
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
    #[error("graph has no modules")]
    EmptyGraph,
    #[error("budget of {available} evaluations cannot cover a population of {pop_size}")]
    BudgetTooSmall { pop_size: usize, available: usize },
    #[error("learner {0} cannot be its own peer")]
    SamePeer(usize),
    #[error("population of {0} is too small; at least 2 individuals are needed")]
    PopulationTooSmall(usize),
    #[error("fuzzy controller: {0}")]
    Fuzzy(#[from] FuzzyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Tlbo,
    Atlbo,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Tlbo => "tlbo",
            Algorithm::Atlbo => "atlbo",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tlbo" => Ok(Algorithm::Tlbo),
            "atlbo" => Ok(Algorithm::Atlbo),
            other => Err(format!("unknown algorithm {other:?} (expected tlbo or atlbo)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchConfig {
    pub pop_size: usize,
    pub max_evals: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            pop_size: 40,
            max_evals: 5000,
            seed: 0,
            algorithm: Algorithm::Atlbo,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), OptimizerError> {
        if self.pop_size < 2 {
            return Err(OptimizerError::InvalidConfig(format!(
                "pop_size must be at least 2, got {}",
                self.pop_size
            )));
        }
        if self.max_evals < self.pop_size {
            return Err(OptimizerError::BudgetTooSmall {
                pop_size: self.pop_size,
                available: self.max_evals,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Teacher,
    Learner,
}

/// Phases applied to one individual within a sweep, in order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhasePlan {
    TeacherThenLearner,
    Only(Phase),
}

impl PhasePlan {
    pub fn phases(self) -> &'static [Phase] {
        match self {
            PhasePlan::TeacherThenLearner => &[Phase::Teacher, Phase::Learner],
            PhasePlan::Only(Phase::Teacher) => &[Phase::Teacher],
            PhasePlan::Only(Phase::Learner) => &[Phase::Learner],
        }
    }
}

/// Controller inputs and output behind one adaptive decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measures {
    pub quality: f64,
    pub intensification: f64,
    pub diversification: f64,
    /// Crisp controller output; `None` when no rule fired.
    pub selection: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub plan: PhasePlan,
    pub measures: Option<Measures>,
}

/// Decides which phases each individual undergoes.
///
/// `feedback` reports every evaluated proposal, so success-rate driven
/// controllers can be expressed without changing the search loop.
pub trait PhaseSelector {
    fn select(&mut self, population: &Population, index: usize) -> Result<Selection, OptimizerError>;

    fn feedback(&mut self, _phase: Phase, _accepted: bool) {}
}

/// Classic TLBO: teacher phase then learner phase for every individual.
#[derive(Debug, Clone, Copy, Default)]
pub struct TlboSchedule;

impl PhaseSelector for TlboSchedule {
    fn select(&mut self, _population: &Population, _index: usize) -> Result<Selection, OptimizerError> {
        Ok(Selection {
            plan: PhasePlan::TeacherThenLearner,
            measures: None,
        })
    }
}

/// ATLBO controller: one phase per individual, chosen by fuzzy inference over
/// the quality, intensification and diversification measures.
#[derive(Debug, Clone)]
pub struct FuzzyPhaseSelector<'f> {
    fis: &'f FuzzySystem,
    slots: [usize; 3],
}

impl<'f> FuzzyPhaseSelector<'f> {
    /// The system must declare exactly the inputs `Qm`, `Im` and `Dm`.
    pub fn new(fis: &'f FuzzySystem) -> Result<Self, OptimizerError> {
        let slot = |name: &str| {
            fis.input_index(name)
                .ok_or_else(|| FuzzyError::MissingInput(name.to_string()))
        };
        let slots = [slot("Qm")?, slot("Im")?, slot("Dm")?];
        if fis.inputs().len() != 3 {
            return Err(FuzzyError::InputCount {
                expected: 3,
                actual: fis.inputs().len(),
            }
            .into());
        }
        Ok(Self { fis, slots })
    }

    pub fn measures(&self, population: &Population, index: usize) -> Result<Measures, OptimizerError> {
        let quality = quality_measure(population, index);
        let intensification = intensification_measure(population.best(), population.get(index));
        let diversification = diversification_measure(population, index)?;
        let mut values = [0.0; 3];
        values[self.slots[0]] = quality;
        values[self.slots[1]] = intensification;
        values[self.slots[2]] = diversification;
        Ok(Measures {
            quality,
            intensification,
            diversification,
            selection: self.fis.evaluate(&values)?,
        })
    }
}

impl PhaseSelector for FuzzyPhaseSelector<'_> {
    fn select(&mut self, population: &Population, index: usize) -> Result<Selection, OptimizerError> {
        let measures = self.measures(population, index)?;
        let phase = match measures.selection {
            Some(s) if s >= SELECTION_THRESHOLD => Phase::Learner,
            // no rule fired: explore
            _ => Phase::Teacher,
        };
        Ok(Selection {
            plan: PhasePlan::Only(phase),
            measures: Some(measures),
        })
    }
}

/// One evaluated proposal.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRecord {
    /// Zero-based sweep number.
    pub iteration: usize,
    pub individual: usize,
    pub phase: Phase,
    pub accepted: bool,
    pub measures: Option<Measures>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub best_labels: ClusterLabels,
    pub best_mq: f64,
    pub evals_used: usize,
    /// Sweeps that evaluated at least one proposal.
    pub iterations: usize,
    pub phase_trace: Vec<PhaseRecord>,
    pub wall_time: Duration,
}

impl RunResult {
    /// Equality on everything except wall time.
    pub fn same_outcome(&self, other: &RunResult) -> bool {
        self.best_labels == other.best_labels
            && self.best_mq.to_bits() == other.best_mq.to_bits()
            && self.evals_used == other.evals_used
            && self.iterations == other.iterations
            && self.phase_trace == other.phase_trace
    }
}

/// Hook into the search loop, called before each individual's phases run.
pub trait SearchObserver {
    fn on_selection(&mut self, population: &Population, index: usize, selection: &Selection);
}

impl SearchObserver for () {
    fn on_selection(&mut self, _: &Population, _: usize, _: &Selection) {}
}

/// Runs a search until the evaluation budget is spent.
pub fn search<R, S, O>(
    graph: &ModuleGraph,
    config: &SearchConfig,
    selector: &mut S,
    rng: &mut R,
    observer: &mut O,
) -> Result<RunResult, OptimizerError>
where
    R: Rng + ?Sized,
    S: PhaseSelector + ?Sized,
    O: SearchObserver + ?Sized,
{
    let started = Instant::now();
    config.validate()?;
    let problem = Problem::new(graph)?;
    let mut budget = Budget::new(config.max_evals);
    let mut population = initialize_population(&problem, config.pop_size, &mut budget, rng)?;
    let mut trace = Vec::new();
    let mut iterations = 0;

    'sweeps: while !budget.is_exhausted() {
        iterations += 1;
        for index in 0..population.len() {
            if budget.is_exhausted() {
                break 'sweeps;
            }
            let selection = selector.select(&population, index)?;
            observer.on_selection(&population, index, &selection);
            for &phase in selection.plan.phases() {
                if budget.is_exhausted() {
                    break 'sweeps;
                }
                let proposal = match phase {
                    Phase::Teacher => teacher_phase_update(
                        population.get(index),
                        population.best().position(),
                        population.mean(),
                        population.upper(),
                        rng,
                    ),
                    Phase::Learner => {
                        let peer = random_peer(population.len(), index, rng);
                        learner_phase_update(&population, index, peer, rng)?
                    }
                };
                let accepted = greedy_accept(&mut population, index, proposal, &problem, &mut budget)
                    == Acceptance::Accepted;
                selector.feedback(phase, accepted);
                trace.push(PhaseRecord {
                    iteration: iterations - 1,
                    individual: index,
                    phase,
                    accepted,
                    measures: selection.measures,
                });
            }
        }
    }

    let best = population.best();
    Ok(RunResult {
        best_labels: best.canonical_labels().clone(),
        best_mq: best.fitness(),
        evals_used: budget.used(),
        iterations,
        phase_trace: trace,
        wall_time: started.elapsed(),
    })
}

pub fn run_tlbo<R: Rng + ?Sized>(
    graph: &ModuleGraph,
    config: &SearchConfig,
    rng: &mut R,
) -> Result<RunResult, OptimizerError> {
    search(graph, config, &mut TlboSchedule, rng, &mut ())
}

pub fn run_atlbo<R: Rng + ?Sized>(
    graph: &ModuleGraph,
    config: &SearchConfig,
    fis: &FuzzySystem,
    rng: &mut R,
) -> Result<RunResult, OptimizerError> {
    search(graph, config, &mut FuzzyPhaseSelector::new(fis)?, rng, &mut ())
}

/// Runs `config.algorithm` with a ChaCha8 generator seeded from `config.seed`.
/// `fis` is used by ATLBO only; `None` means the shipped default controller.
pub fn run(graph: &ModuleGraph, config: &SearchConfig, fis: Option<&FuzzySystem>) -> Result<RunResult, OptimizerError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    match config.algorithm {
        Algorithm::Tlbo => run_tlbo(graph, config, &mut rng),
        Algorithm::Atlbo => match fis {
            Some(fis) => run_atlbo(graph, config, fis, &mut rng),
            None => run_atlbo(graph, config, &FuzzySystem::default_controller(), &mut rng),
        },
    }
}
