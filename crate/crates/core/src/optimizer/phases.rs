use rand::Rng;

use super::population::{Budget, Individual, Population, Problem};
use super::OptimizerError;

fn clamp_position(x: f64, upper: usize) -> f64 {
    x.clamp(1.0, upper as f64)
}

/// `x + r * (teacher - tf * mean)` per component, clamped to `[1, upper]`.
pub fn teacher_step(
    position: &[f64],
    teacher: &[f64],
    mean: &[f64],
    teaching_factor: f64,
    r: &[f64],
    upper: usize,
) -> Vec<f64> {
    position
        .iter()
        .zip(teacher)
        .zip(mean)
        .zip(r)
        .map(|(((&x, &t), &m), &r)| clamp_position(x + r * (t - teaching_factor * m), upper))
        .collect()
}

/// Moves `learner` away from a worse peer or toward a better-or-equal one,
/// clamped to `[1, upper]`.
pub fn learner_step(learner: &[f64], peer: &[f64], learner_is_better: bool, r: &[f64], upper: usize) -> Vec<f64> {
    learner
        .iter()
        .zip(peer)
        .zip(r)
        .map(|((&xi, &xj), &r)| {
            let direction = if learner_is_better { xi - xj } else { xj - xi };
            clamp_position(xi + r * direction, upper)
        })
        .collect()
}

/// Proposes a teacher-phase move. The teaching factor is drawn from {1, 2}
/// first, then one `r` in `[0, 1)` per dimension.
pub fn teacher_phase_update<R: Rng + ?Sized>(
    individual: &Individual,
    teacher: &[f64],
    mean: &[f64],
    upper: usize,
    rng: &mut R,
) -> Vec<f64> {
    let teaching_factor = if rng.random::<bool>() { 2.0 } else { 1.0 };
    let r: Vec<f64> = (0..individual.position().len()).map(|_| rng.random()).collect();
    teacher_step(individual.position(), teacher, mean, teaching_factor, &r, upper)
}

/// Proposes a learner-phase move for individual `i` against peer `j`.
pub fn learner_phase_update<R: Rng + ?Sized>(
    population: &Population,
    i: usize,
    j: usize,
    rng: &mut R,
) -> Result<Vec<f64>, OptimizerError> {
    if i == j {
        return Err(OptimizerError::SamePeer(i));
    }
    let (learner, peer) = (population.get(i), population.get(j));
    let r: Vec<f64> = (0..learner.position().len()).map(|_| rng.random()).collect();
    Ok(learner_step(
        learner.position(),
        peer.position(),
        learner.fitness() > peer.fitness(),
        &r,
        population.upper(),
    ))
}

/// Uniform peer index in `0..len` other than `i`.
pub fn random_peer<R: Rng + ?Sized>(len: usize, i: usize, rng: &mut R) -> usize {
    let j = rng.random_range(0..len - 1);
    if j >= i {
        j + 1
    } else {
        j
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Acceptance {
    Accepted,
    Rejected,
    /// No evaluation was left; nothing was evaluated.
    BudgetExhausted,
}

/// Evaluates `position` (one evaluation) and keeps it iff its MQ strictly
/// beats the current individual at `index`.
pub fn greedy_accept(
    population: &mut Population,
    index: usize,
    position: Vec<f64>,
    problem: &Problem<'_>,
    budget: &mut Budget,
) -> Acceptance {
    if !budget.try_consume() {
        return Acceptance::BudgetExhausted;
    }
    let candidate = problem.evaluate(position);
    if candidate.fitness() > population.get(index).fitness() {
        population.replace(index, candidate);
        Acceptance::Accepted
    } else {
        Acceptance::Rejected
    }
}
