//! Inputs of the fuzzy phase controller, each scaled to `[0, 100]`.
//!
//! Distances are Hamming counts over canonical labels, so two individuals
//! encoding the same partition under different label numbers are at
//! distance zero.

use super::population::{Individual, Population};
use super::OptimizerError;

/// Relative fitness of individual `index` within the population's range.
/// A population with no fitness spread scores 100 everywhere.
pub fn quality_measure(population: &Population, index: usize) -> f64 {
    let (min, max) = (population.min_fitness(), population.max_fitness());
    if max <= min {
        return 100.0;
    }
    // ratio first so that the best individual scores exactly 100
    (100.0 * ((population.get(index).fitness() - min) / (max - min))).clamp(0.0, 100.0)
}

/// Share of modules on which `current` disagrees with `best`.
pub fn intensification_measure(best: &Individual, current: &Individual) -> f64 {
    let d = current.canonical_labels().len();
    100.0 * best.canonical_labels().hamming(current.canonical_labels()) as f64 / d as f64
}

/// Mean share of modules on which individual `index` disagrees with each
/// other member of the population.
pub fn diversification_measure(population: &Population, index: usize) -> Result<f64, OptimizerError> {
    let n = population.len();
    if n < 2 {
        return Err(OptimizerError::PopulationTooSmall(n));
    }
    let current = population.get(index).canonical_labels();
    let d = current.len() as f64;
    let total: f64 = population
        .individuals()
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != index)
        .map(|(_, other)| other.canonical_labels().hamming(current) as f64 / d)
        .sum();
    Ok(100.0 * total / (n - 1) as f64)
}
