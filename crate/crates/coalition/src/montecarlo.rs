//! Monte Carlo replay: sample trait realizations from the species
//! distributions and measure empirical task success rates for a fixed
//! allocation, cross-checking the closed-form probabilities.
//!
//! Traits are group-modeled: one draw of the species-trait matrix Q per
//! trial, shared by every robot of that species (the aggregation Y = XQ
//! scales a single realization, which is where the x^2 variance growth
//! comes from). Robots of one species are therefore identical within a
//! trial while still being Normal(mu, var) marginally.

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{validate_allocation, Allocation, ProblemInstance};

/// Sampling behavior for robot traits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplingMode {
    /// Raw Gaussian draws; matches the closed-form model exactly.
    #[default]
    Raw,
    /// Draws clamped at zero for physical plausibility; diverges from the
    /// closed form and is excluded from consistency checks.
    ClampNonnegative,
}

/// One sampled team: per species, an N_A[s] x U matrix of robot traits
/// (rows repeat the species' trial draw).
#[derive(Debug, Clone, PartialEq)]
pub struct SampledTeam {
    pub traits: Vec<Array2<f64>>,
}

/// Success flags of a single trial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialOutcome {
    pub per_task_success: Vec<bool>,
    pub combined_success: bool,
}

/// Per-task and combined empirical success rates over a trial batch.
#[derive(Debug, Clone, PartialEq)]
pub struct McEvaluation {
    pub task_rates: Vec<f64>,
    pub combined_rate: f64,
    pub trials: u64,
}

/// One realization of the species-trait matrix Q (S x U).
fn sample_species_traits(
    problem: &ProblemInstance,
    mode: SamplingMode,
    rng: &mut impl Rng,
) -> Array2<f64> {
    let species = problem.species();
    let (s_n, u_n) = (problem.num_species(), problem.num_traits());
    let mut q = Array2::zeros((s_n, u_n));
    for s in 0..s_n {
        for u in 0..u_n {
            let noise: f64 = rng.sample(StandardNormal);
            let mut v = species.means()[[s, u]] + species.variances()[[s, u]].sqrt() * noise;
            if mode == SamplingMode::ClampNonnegative {
                v = v.max(0.0);
            }
            q[[s, u]] = v;
        }
    }
    q
}

/// Draws one trial's trait realization and lays it out per robot.
pub fn sample_team(problem: &ProblemInstance, mode: SamplingMode, rng: &mut impl Rng) -> SampledTeam {
    let q = sample_species_traits(problem, mode, rng);
    let traits = problem
        .team()
        .counts()
        .iter()
        .enumerate()
        .map(|(s, &count)| {
            let mut robots = Array2::zeros((count as usize, problem.num_traits()));
            for mut row in robots.rows_mut() {
                row.assign(&q.row(s));
            }
            robots
        })
        .collect();
    SampledTeam { traits }
}

/// Scores one trial: the first x_ms sampled robots of species s join task m
/// (within a trial robots of a species are interchangeable), coalition trait
/// vectors are summed, and a task succeeds iff every required trait meets
/// its threshold.
pub fn run_trial(x: &Allocation, problem: &ProblemInstance, team: &SampledTeam) -> TrialOutcome {
    let m_tasks = problem.num_tasks();
    let u_traits = problem.num_traits();
    let req = problem.tasks().matrix();
    let mut sums = Array2::<f64>::zeros((m_tasks, u_traits));
    for (s, robots) in team.traits.iter().enumerate() {
        let mut next = 0usize;
        for m in 0..m_tasks {
            for _ in 0..x.matrix()[[m, s]] {
                for u in 0..u_traits {
                    sums[[m, u]] += robots[[next, u]];
                }
                next += 1;
            }
        }
    }
    let per_task_success: Vec<bool> = (0..m_tasks)
        .map(|m| (0..u_traits).all(|u| req[[m, u]] <= 0.0 || sums[[m, u]] >= req[[m, u]]))
        .collect();
    let combined_success = per_task_success.iter().all(|&b| b);
    TrialOutcome { per_task_success, combined_success }
}

/// Empirical success rates of `x` over independently resampled trials.
pub fn evaluate_allocation_mc(
    x: &Allocation,
    problem: &ProblemInstance,
    trials: u64,
    mode: SamplingMode,
    rng: &mut impl Rng,
) -> Result<McEvaluation> {
    if trials == 0 {
        return Err(Error::InvalidValue {
            context: "evaluate_allocation_mc",
            detail: "trials must be at least 1".to_string(),
        });
    }
    let report = validate_allocation(x, problem.team())?;
    if !report.feasible {
        return Err(Error::Infeasible {
            detail: format!("allocation exceeds team budget, slack {:?}", report.slack),
        });
    }
    let m_tasks = problem.num_tasks();
    let u_traits = problem.num_traits();
    let req = problem.tasks().matrix();
    let xf = x.to_f64();
    let mut task_hits = vec![0u64; m_tasks];
    let mut combined_hits = 0u64;
    for _ in 0..trials {
        let q = sample_species_traits(problem, mode, rng);
        let sums = xf.dot(&q);
        let mut all = true;
        for m in 0..m_tasks {
            let ok = (0..u_traits).all(|u| req[[m, u]] <= 0.0 || sums[[m, u]] >= req[[m, u]]);
            if ok {
                task_hits[m] += 1;
            } else {
                all = false;
            }
        }
        if all {
            combined_hits += 1;
        }
    }
    Ok(McEvaluation {
        task_rates: task_hits.iter().map(|&h| h as f64 / trials as f64).collect(),
        combined_rate: combined_hits as f64 / trials as f64,
        trials,
    })
}
