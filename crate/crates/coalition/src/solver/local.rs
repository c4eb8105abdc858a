//! Projected gradient ascent with Armijo backtracking.

use ndarray::Array2;

use crate::error::Result;
use crate::model::{ProblemInstance, RelaxedAllocation};
use crate::solver::objective::Objective;
use crate::solver::projection::project_capped_simplex;
use crate::solver::SolverConfig;

/// Smallest backtracking step before the line search gives up.
const MIN_STEP: f64 = 1e-18;

fn project_columns(x: &Array2<f64>, caps: &[f64]) -> Array2<f64> {
    let mut out = x.clone();
    for (s, &cap) in caps.iter().enumerate() {
        let col = project_capped_simplex(x.column(s), cap);
        out.column_mut(s).assign(&col);
    }
    out
}

/// One ascent run from `x0`. Annealed objectives pass through their stages
/// sequentially, warm-starting each from the previous stage's endpoint; a
/// shared iteration budget of `cfg.max_iters_per_start` spans all stages.
/// Returns the best point seen as ranked by the true (unsmoothed) score,
/// which is never worse than the score at `x0`.
pub(crate) fn local_solve_inner(
    x0: &Array2<f64>,
    problem: &ProblemInstance,
    cfg: &SolverConfig,
    objective: &dyn Objective,
) -> (Array2<f64>, u64) {
    let caps: Vec<f64> = problem.team().counts().iter().map(|&c| f64::from(c)).collect();
    let mut x = x0.clone();
    let mut best_x = x0.clone();
    let mut best_score = objective.true_score(x0);
    let mut iters: u64 = 0;

    for stage in 0..objective.num_stages() {
        let mut f = objective.value(&x, stage);
        while (iters as usize) < cfg.max_iters_per_start {
            iters += 1;
            let g = objective.gradient(&x, stage);
            let mut step = cfg.step_init;
            let mut accepted: Option<(Array2<f64>, f64, f64)> = None;
            while step >= MIN_STEP {
                let cand = project_columns(&(&x + &(step * &g)), &caps);
                let dir = &cand - &x;
                let predicted: f64 = g.iter().zip(dir.iter()).map(|(a, b)| a * b).sum();
                if predicted <= 0.0 {
                    // Projection did not move us along the gradient: stationary.
                    break;
                }
                let fc = objective.value(&cand, stage);
                if fc >= f + cfg.armijo_c * predicted {
                    let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
                    accepted = Some((cand, fc, norm));
                    break;
                }
                step *= cfg.step_shrink;
            }
            match accepted {
                Some((cand, fc, norm)) => {
                    x = cand;
                    f = fc;
                    if norm < cfg.convergence_tol {
                        break;
                    }
                }
                None => break,
            }
        }
        let score = objective.true_score(&x);
        if score > best_score {
            best_score = score;
            best_x = x.clone();
        }
    }
    (best_x, iters)
}

/// Projected gradient ascent on `objective` starting from a feasible point.
pub fn local_solve(
    x0: &RelaxedAllocation,
    problem: &ProblemInstance,
    cfg: &SolverConfig,
    objective: &dyn Objective,
) -> Result<RelaxedAllocation> {
    cfg.validate()?;
    let (x, _) = local_solve_inner(x0.matrix(), problem, cfg, objective);
    RelaxedAllocation::new(x, problem.team())
}
