use rand::Rng;

use super::OptimizerError;
use crate::mdg::{canonical_vec, mq_raw, ClusterLabels, ModuleGraph};

/// Rounds each component half-up and clamps it to `1..=upper`.
pub fn decode(position: &[f64], upper: usize) -> ClusterLabels {
    let labels = position
        .iter()
        .map(|&p| {
            let rounded = (p + 0.5).floor();
            if rounded < 1.0 {
                1
            } else if rounded > upper as f64 {
                upper
            } else {
                rounded as usize
            }
        })
        .collect();
    ClusterLabels::from_vec_unchecked(labels)
}

/// Counts fitness evaluations against a hard cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    max: usize,
    used: usize,
}

impl Budget {
    pub fn new(max: usize) -> Self {
        Self { max, used: 0 }
    }

    pub fn used(&self) -> usize {
        self.used
    }

    pub fn max(&self) -> usize {
        self.max
    }

    pub fn remaining(&self) -> usize {
        self.max - self.used
    }

    pub fn is_exhausted(&self) -> bool {
        self.used >= self.max
    }

    /// Takes one evaluation, or returns false if none are left.
    pub fn try_consume(&mut self) -> bool {
        if self.is_exhausted() {
            return false;
        }
        self.used += 1;
        true
    }
}

/// A graph viewed as a search problem over positions in `[1, D]^D`.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'g> {
    graph: &'g ModuleGraph,
}

impl<'g> Problem<'g> {
    pub fn new(graph: &'g ModuleGraph) -> Result<Self, OptimizerError> {
        if graph.module_count() == 0 {
            return Err(OptimizerError::EmptyGraph);
        }
        Ok(Self { graph })
    }

    pub fn graph(&self) -> &'g ModuleGraph {
        self.graph
    }

    pub fn dimension(&self) -> usize {
        self.graph.module_count()
    }

    /// Largest cluster label, `N = D`.
    pub fn upper(&self) -> usize {
        self.graph.module_count()
    }

    /// Decodes and scores a position. Does not touch any budget.
    pub fn evaluate(&self, position: Vec<f64>) -> Individual {
        let labels = decode(&position, self.upper());
        let canonical = canonical_vec(labels.as_slice());
        let fitness = mq_raw(self.graph, &canonical);
        Individual {
            position,
            labels,
            canonical: ClusterLabels::from_vec_unchecked(canonical),
            fitness,
        }
    }
}

/// A position with its decoded labels and MQ.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    position: Vec<f64>,
    labels: ClusterLabels,
    canonical: ClusterLabels,
    fitness: f64,
}

impl Individual {
    pub fn position(&self) -> &[f64] {
        &self.position
    }

    /// Labels decoded from the position.
    pub fn labels(&self) -> &ClusterLabels {
        &self.labels
    }

    /// Decoded labels renumbered by first appearance.
    pub fn canonical_labels(&self) -> &ClusterLabels {
        &self.canonical
    }

    /// MQ of the decoded partition.
    pub fn fitness(&self) -> f64 {
        self.fitness
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    individuals: Vec<Individual>,
    best_index: usize,
    mean: Vec<f64>,
    upper: usize,
}

impl Population {
    pub fn from_individuals(individuals: Vec<Individual>, upper: usize) -> Self {
        assert!(!individuals.is_empty(), "population cannot be empty");
        let mut pop = Self {
            mean: vec![0.0; individuals[0].position.len()],
            individuals,
            best_index: 0,
            upper,
        };
        pop.refresh();
        pop
    }

    fn refresh(&mut self) {
        let mut best = 0;
        for (i, ind) in self.individuals.iter().enumerate() {
            if ind.fitness > self.individuals[best].fitness {
                best = i;
            }
        }
        self.best_index = best;

        let count = self.individuals.len() as f64;
        for (d, m) in self.mean.iter_mut().enumerate() {
            *m = self.individuals.iter().map(|ind| ind.position[d]).sum::<f64>() / count;
        }
    }

    pub fn len(&self) -> usize {
        self.individuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.individuals.is_empty()
    }

    pub fn individuals(&self) -> &[Individual] {
        &self.individuals
    }

    pub fn get(&self, index: usize) -> &Individual {
        &self.individuals[index]
    }

    /// Index of the teacher: maximal fitness, lowest index on ties.
    pub fn best_index(&self) -> usize {
        self.best_index
    }

    pub fn best(&self) -> &Individual {
        &self.individuals[self.best_index]
    }

    /// Component-wise mean position.
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn upper(&self) -> usize {
        self.upper
    }

    pub fn dimension(&self) -> usize {
        self.mean.len()
    }

    pub fn min_fitness(&self) -> f64 {
        self.individuals.iter().map(|i| i.fitness).fold(f64::INFINITY, f64::min)
    }

    pub fn max_fitness(&self) -> f64 {
        self.best().fitness
    }

    pub fn replace(&mut self, index: usize, individual: Individual) {
        self.individuals[index] = individual;
        self.refresh();
    }
}

/// Samples `pop_size` positions uniformly from `[1, N]^D` and evaluates them,
/// charging one evaluation each.
pub fn initialize_population<R: Rng + ?Sized>(
    problem: &Problem<'_>,
    pop_size: usize,
    budget: &mut Budget,
    rng: &mut R,
) -> Result<Population, OptimizerError> {
    if pop_size < 2 {
        return Err(OptimizerError::InvalidConfig(format!(
            "pop_size must be at least 2, got {pop_size}"
        )));
    }
    if budget.remaining() < pop_size {
        return Err(OptimizerError::BudgetTooSmall {
            pop_size,
            available: budget.remaining(),
        });
    }
    let span = (problem.upper() - 1) as f64;
    let individuals = (0..pop_size)
        .map(|_| {
            let position = (0..problem.dimension())
                .map(|_| 1.0 + span * rng.random::<f64>())
                .collect();
            budget.try_consume();
            problem.evaluate(position)
        })
        .collect();
    Ok(Population::from_individuals(individuals, problem.upper()))
}
