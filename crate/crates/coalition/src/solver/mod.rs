//! Allocation solvers: the risk-adaptive max-min method plus the three
//! baselines, all sharing the same feasibility contract (integer entries,
//! per-species column sums within the team budget).

mod local;
mod multistart;
mod objective;
mod projection;
mod rounding;
mod softmin;

pub use local::local_solve;
pub use multistart::multi_start_solve;
pub use objective::{AdaptiveObjective, DeficiencyObjective, Objective};
pub use projection::project_capped_simplex;
pub use rounding::round_allocation;
pub use softmin::softmin;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use ndarray::Array1;
use rand::Rng;

use crate::error::{Error, Result};
use crate::gauss::success_log_probs;
use crate::model::{Allocation, ProblemInstance, RelaxedAllocation};
use crate::streams::stream_rng;

/// Task log-probabilities are clamped below at this value before entering
/// objectives, keeping the max-min finite when a task is hopeless.
pub const LOG_PROB_FLOOR: f64 = -1e6;

/// Knobs of the relax-ascend-round pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Initial points for the multi-start search.
    pub num_starts: usize,
    /// Gradient-iteration budget per start, shared across annealing stages.
    pub max_iters_per_start: usize,
    /// Initial step size for the Armijo line search.
    pub step_init: f64,
    /// Armijo sufficient-increase coefficient.
    pub armijo_c: f64,
    /// Multiplicative backtracking factor.
    pub step_shrink: f64,
    /// Stop a stage when the accepted step's Frobenius norm drops below this.
    pub convergence_tol: f64,
    /// Softmin annealing schedule, strictly increasing.
    pub beta_schedule: Vec<f64>,
    /// Variance-penalty weight of the risk-averse baseline.
    pub lambda: f64,
    /// Cap on hill-climbing repair moves after rounding.
    pub hill_climb_max_moves: usize,
    /// Root seed for all randomized starts.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            num_starts: 16,
            max_iters_per_start: 10_000,
            step_init: 1.0,
            armijo_c: 1e-4,
            step_shrink: 0.5,
            convergence_tol: 1e-6,
            beta_schedule: vec![1.0, 10.0, 100.0],
            lambda: 0.1,
            hill_climb_max_moves: 1_000,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.num_starts == 0 {
            return bad("num_starts must be at least 1");
        }
        if self.max_iters_per_start == 0 {
            return bad("max_iters_per_start must be at least 1");
        }
        if self.step_init <= 0.0 || self.step_init.is_nan() {
            return bad("step_init must be positive");
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return bad("armijo_c must lie in (0, 1)");
        }
        if !(self.step_shrink > 0.0 && self.step_shrink < 1.0) {
            return bad("step_shrink must lie in (0, 1)");
        }
        if self.convergence_tol <= 0.0 || self.convergence_tol.is_nan() {
            return bad("convergence_tol must be positive");
        }
        if self.beta_schedule.is_empty()
            || self.beta_schedule.iter().any(|&b| b <= 0.0 || b.is_nan())
            || self.beta_schedule.windows(2).any(|w| w[1] <= w[0])
        {
            return bad("beta_schedule must be strictly increasing and positive");
        }
        if self.lambda < 0.0 || self.lambda.is_nan() {
            return bad("lambda must be nonnegative");
        }
        if self.hill_climb_max_moves == 0 {
            return bad("hill_climb_max_moves must be at least 1");
        }
        Ok(())
    }
}

/// Which solver produced a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Adaptive,
    Neutral,
    Averse,
    Random,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Adaptive, Method::Neutral, Method::Averse, Method::Random];

    pub fn name(self) -> &'static str {
        match self {
            Method::Adaptive => "adaptive",
            Method::Neutral => "neutral",
            Method::Averse => "averse",
            Method::Random => "random",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adaptive" => Ok(Method::Adaptive),
            "neutral" => Ok(Method::Neutral),
            "averse" => Ok(Method::Averse),
            "random" => Ok(Method::Random),
            other => Err(Error::InvalidValue {
                context: "method",
                detail: format!("unknown method '{other}' (expected adaptive|neutral|averse|random)"),
            }),
        }
    }
}

/// Bookkeeping from a solver run.
#[derive(Debug, Clone)]
pub struct SolveStats {
    pub iterations: u64,
    pub starts: u64,
    pub seconds: f64,
}

/// A feasible integer allocation with its exact task success
/// log-probabilities (raw, unclamped) and provenance.
#[derive(Debug, Clone)]
pub struct Solution {
    pub allocation: Allocation,
    pub relaxed: RelaxedAllocation,
    pub task_log_probs: Array1<f64>,
    pub min_log_prob: f64,
    pub method: Method,
    pub stats: SolveStats,
}

impl Solution {
    /// Per-task success probabilities.
    pub fn task_probs(&self) -> Vec<f64> {
        self.task_log_probs.iter().map(|&lp| lp.exp()).collect()
    }

    /// Success probability of the worst task.
    pub fn min_prob(&self) -> f64 {
        self.min_log_prob.exp()
    }
}

fn finish(
    allocation: Allocation,
    relaxed: RelaxedAllocation,
    problem: &ProblemInstance,
    method: Method,
    iterations: u64,
    starts: u64,
    t0: Instant,
) -> Result<Solution> {
    let task_log_probs = success_log_probs(&allocation.to_f64(), problem)?;
    let min_log_prob = task_log_probs.iter().fold(f64::INFINITY, |a, &v| a.min(v));
    Ok(Solution {
        allocation,
        relaxed,
        task_log_probs,
        min_log_prob,
        method,
        stats: SolveStats { iterations, starts, seconds: t0.elapsed().as_secs_f64() },
    })
}

fn solve_deficiency(problem: &ProblemInstance, cfg: &SolverConfig, lambda: f64, method: Method) -> Result<Solution> {
    let t0 = Instant::now();
    cfg.validate()?;
    let objective = DeficiencyObjective::new(problem, lambda);
    let (xc, iters, starts) = multistart::multi_start_inner(problem, cfg, &objective)?;
    let relaxed = RelaxedAllocation::new(xc, problem.team())?;
    let allocation = round_allocation(&relaxed, problem, cfg.hill_climb_max_moves, &|x| {
        objective.true_score(x)
    })?;
    finish(allocation, relaxed, problem, method, iters, starts, t0)
}

/// Max-min solver: maximizes the worst task's log success probability via
/// annealed softmin ascent, then returns the better (by min task
/// log-probability) of the rounded adaptive candidate and the full
/// risk-neutral solution, so it never scores below that baseline.
pub fn solve_risk_adaptive(problem: &ProblemInstance, cfg: &SolverConfig) -> Result<Solution> {
    let t0 = Instant::now();
    cfg.validate()?;
    let objective = AdaptiveObjective::new(problem, &cfg.beta_schedule);
    let (xc, iters, starts) = multistart::multi_start_inner(problem, cfg, &objective)?;
    let relaxed = RelaxedAllocation::new(xc, problem.team())?;
    let candidate = round_allocation(&relaxed, problem, cfg.hill_climb_max_moves, &|x| {
        objective.true_score(x)
    })?;
    let neutral = solve_risk_neutral(problem, cfg)?;

    let cand_log_probs = success_log_probs(&candidate.to_f64(), problem)?;
    let cand_min = cand_log_probs.iter().fold(f64::INFINITY, |a, &v| a.min(v));
    let iterations = iters + neutral.stats.iterations;
    let total_starts = starts + neutral.stats.starts;
    if cand_min >= neutral.min_log_prob {
        finish(candidate, relaxed, problem, Method::Adaptive, iterations, total_starts, t0)
    } else {
        finish(
            neutral.allocation,
            neutral.relaxed,
            problem,
            Method::Adaptive,
            iterations,
            total_starts,
            t0,
        )
    }
}

/// Risk-neutral baseline: minimizes expected trait deficiency
/// ||max(Y* - X mu_Q, 0)||_F^2.
pub fn solve_risk_neutral(problem: &ProblemInstance, cfg: &SolverConfig) -> Result<Solution> {
    solve_deficiency(problem, cfg, 0.0, Method::Neutral)
}

/// Risk-averse baseline: deficiency plus the variance penalty
/// lambda ||(X (.) X) Var_Q||_F^2.
pub fn solve_risk_averse(problem: &ProblemInstance, cfg: &SolverConfig) -> Result<Solution> {
    solve_deficiency(problem, cfg, cfg.lambda, Method::Averse)
}

/// Random baseline: every agent independently lands on a uniformly random
/// task, so every agent is assigned and feasibility holds by construction.
pub fn solve_random(problem: &ProblemInstance, seed: u64) -> Result<Solution> {
    let t0 = Instant::now();
    let m = problem.num_tasks();
    let mut rng = stream_rng(seed, 0);
    let mut x = ndarray::Array2::<u32>::zeros((m, problem.num_species()));
    for (s, &count) in problem.team().counts().iter().enumerate() {
        for _ in 0..count {
            let task = rng.random_range(0..m);
            x[[task, s]] += 1;
        }
    }
    let allocation = Allocation::new(x);
    let relaxed = RelaxedAllocation::new(allocation.to_f64(), problem.team())?;
    finish(allocation, relaxed, problem, Method::Random, 0, 1, t0)
}
