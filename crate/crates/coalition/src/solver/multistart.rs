//! Start-point generation and the multi-start wrapper around the local
//! solver. Start k draws from RNG stream (seed, k), so results are
//! reproducible for any num_starts.

use ndarray::Array2;
use rand::Rng;

use crate::error::Result;
use crate::model::{ProblemInstance, RelaxedAllocation};
use crate::solver::local::local_solve_inner;
use crate::solver::objective::{DeficiencyObjective, Objective};
use crate::solver::rounding::round_allocation;
use crate::solver::SolverConfig;
use crate::streams::stream_rng;

/// Each species spread evenly over the tasks.
pub(crate) fn proportional_split(problem: &ProblemInstance) -> Array2<f64> {
    let m = problem.num_tasks();
    let mut x = Array2::zeros((m, problem.num_species()));
    for (s, &count) in problem.team().counts().iter().enumerate() {
        let share = f64::from(count) / m as f64;
        x.column_mut(s).fill(share);
    }
    x
}

/// Risk-neutral warm start: deficiency descent from the proportional split,
/// rounded to integers under the deficiency score and relaxed back to reals.
pub(crate) fn neutral_warm_start(problem: &ProblemInstance, cfg: &SolverConfig) -> Result<Array2<f64>> {
    let neutral = DeficiencyObjective::new(problem, 0.0);
    let (xc, _) = local_solve_inner(&proportional_split(problem), problem, cfg, &neutral);
    let relaxed = RelaxedAllocation::new(xc, problem.team())?;
    let rounded = round_allocation(&relaxed, problem, cfg.hill_climb_max_moves, &|x| {
        neutral.true_score(x)
    })?;
    Ok(rounded.to_f64())
}

/// Per species: random convex weights over tasks scaled by a random fraction
/// of the cap, giving a feasible interior point.
fn random_start(problem: &ProblemInstance, rng: &mut impl Rng) -> Array2<f64> {
    let m = problem.num_tasks();
    let mut x = Array2::zeros((m, problem.num_species()));
    for (s, &count) in problem.team().counts().iter().enumerate() {
        let fraction: f64 = rng.random();
        let mut weights: Vec<f64> = (0..m).map(|_| rng.random()).collect();
        let total: f64 = weights.iter().sum();
        if total < 1e-12 {
            weights.iter_mut().for_each(|w| *w = 1.0 / m as f64);
        } else {
            weights.iter_mut().for_each(|w| *w /= total);
        }
        for (mi, w) in weights.iter().enumerate() {
            x[[mi, s]] = fraction * f64::from(count) * w;
        }
    }
    x
}

pub(crate) fn multi_start_inner(
    problem: &ProblemInstance,
    cfg: &SolverConfig,
    objective: &dyn Objective,
) -> Result<(Array2<f64>, u64, u64)> {
    let mut best_x: Option<Array2<f64>> = None;
    let mut best_score = f64::NEG_INFINITY;
    let mut total_iters: u64 = 0;
    for k in 0..cfg.num_starts {
        let x0 = match k {
            0 => neutral_warm_start(problem, cfg)?,
            1 => proportional_split(problem),
            _ => random_start(problem, &mut stream_rng(cfg.seed, k as u64)),
        };
        let (x, iters) = local_solve_inner(&x0, problem, cfg, objective);
        total_iters += iters;
        let score = objective.true_score(&x);
        if score > best_score || best_x.is_none() {
            best_score = score;
            best_x = Some(x);
        }
    }
    Ok((best_x.expect("num_starts >= 1"), total_iters, cfg.num_starts as u64))
}

/// Runs the local solver from the risk-neutral warm start, the proportional
/// split, and seeded random feasible points, returning the best endpoint by
/// the true (unsmoothed) objective.
pub fn multi_start_solve(
    problem: &ProblemInstance,
    cfg: &SolverConfig,
    objective: &dyn Objective,
) -> Result<RelaxedAllocation> {
    cfg.validate()?;
    let (x, _, _) = multi_start_inner(problem, cfg, objective)?;
    RelaxedAllocation::new(x, problem.team())
}
