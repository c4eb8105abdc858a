//! File formats: JSON problem/result/allocation documents and the benchmark
//! record CSV. Probabilities are rounded to 12 significant digits before
//! serialization so reruns are byte-identical.

use std::fs;
use std::path::Path;

use coalition::solver::{Method, SolveStats, SolverConfig};
use coalition::{Allocation, Labels, ProblemInstance, SpeciesTraitModel, TaskRequirements, TeamComposition};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpeciesEntry {
    pub name: String,
    pub mu: Vec<f64>,
    pub var: Vec<f64>,
    pub count: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskEntry {
    pub name: String,
    pub requirements: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemFile {
    pub species: Vec<SpeciesEntry>,
    pub tasks: Vec<TaskEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trait_names: Option<Vec<String>>,
}

impl ProblemFile {
    pub fn to_problem(&self) -> Result<ProblemInstance, CliError> {
        let s = self.species.len();
        let u = self.species.first().map_or(0, |e| e.mu.len());
        let m = self.tasks.len();
        let runtime = |msg: String| CliError::Runtime(msg);
        let mut means = Array2::zeros((s, u));
        let mut vars = Array2::zeros((s, u));
        for (i, entry) in self.species.iter().enumerate() {
            if entry.mu.len() != u || entry.var.len() != u {
                return Err(runtime(format!(
                    "species '{}': expected {} mu/var entries, found {}/{}",
                    entry.name,
                    u,
                    entry.mu.len(),
                    entry.var.len()
                )));
            }
            for j in 0..u {
                means[[i, j]] = entry.mu[j];
                vars[[i, j]] = entry.var[j];
            }
        }
        let mut req = Array2::zeros((m, u));
        for (i, entry) in self.tasks.iter().enumerate() {
            if entry.requirements.len() != u {
                return Err(runtime(format!(
                    "task '{}': expected {} requirements, found {}",
                    entry.name,
                    u,
                    entry.requirements.len()
                )));
            }
            for j in 0..u {
                req[[i, j]] = entry.requirements[j];
            }
        }
        let traits = match &self.trait_names {
            Some(names) => names.clone(),
            None => (1..=u).map(|j| format!("trait_{j}")).collect(),
        };
        let problem = ProblemInstance::new(
            SpeciesTraitModel::new(means, vars).map_err(|e| runtime(e.to_string()))?,
            TeamComposition::new(self.species.iter().map(|e| e.count).collect()),
            TaskRequirements::new(req).map_err(|e| runtime(e.to_string()))?,
        )
        .map_err(|e| runtime(e.to_string()))?
        .with_labels(Labels {
            species: self.species.iter().map(|e| e.name.clone()).collect(),
            tasks: self.tasks.iter().map(|e| e.name.clone()).collect(),
            traits,
        })
        .map_err(|e| runtime(e.to_string()))?;
        Ok(problem)
    }

    pub fn from_problem(problem: &ProblemInstance) -> Self {
        let labels = problem.labels();
        let name = |set: Option<&Vec<String>>, prefix: &str, i: usize| {
            set.and_then(|v| v.get(i).cloned()).unwrap_or_else(|| format!("{prefix}_{}", i + 1))
        };
        let species = (0..problem.num_species())
            .map(|i| SpeciesEntry {
                name: name(labels.map(|l| &l.species), "species", i),
                mu: problem.species().means().row(i).to_vec(),
                var: problem.species().variances().row(i).to_vec(),
                count: problem.team().counts()[i],
            })
            .collect();
        let tasks = (0..problem.num_tasks())
            .map(|i| TaskEntry {
                name: name(labels.map(|l| &l.tasks), "task", i),
                requirements: problem.tasks().matrix().row(i).to_vec(),
            })
            .collect();
        ProblemFile {
            species,
            tasks,
            trait_names: labels.map(|l| l.traits.clone()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NamedAllocationEntry {
    pub name: String,
    pub assignment: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AllocationsFile {
    pub allocations: Vec<NamedAllocationEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveStatsFile {
    pub iterations: u64,
    pub starts: u64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub method: String,
    pub seed: u64,
    pub num_starts: usize,
    pub max_iters_per_start: usize,
    pub step_init: f64,
    pub armijo_c: f64,
    pub step_shrink: f64,
    pub convergence_tol: f64,
    pub beta_schedule: Vec<f64>,
    pub lambda: f64,
    pub hill_climb_max_moves: usize,
}

impl ConfigEcho {
    pub fn new(method: Method, cfg: &SolverConfig) -> Self {
        ConfigEcho {
            method: method.name().to_string(),
            seed: cfg.seed,
            num_starts: cfg.num_starts,
            max_iters_per_start: cfg.max_iters_per_start,
            step_init: cfg.step_init,
            armijo_c: cfg.armijo_c,
            step_shrink: cfg.step_shrink,
            convergence_tol: cfg.convergence_tol,
            beta_schedule: cfg.beta_schedule.clone(),
            lambda: cfg.lambda,
            hill_climb_max_moves: cfg.hill_climb_max_moves,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultFile {
    pub method: String,
    pub allocation: Vec<Vec<u32>>,
    pub task_probs: Vec<f64>,
    pub min_task_prob: f64,
    pub solve_stats: SolveStatsFile,
    pub config_echo: ConfigEcho,
}

impl ResultFile {
    pub fn new(
        method: Method,
        allocation: &Allocation,
        task_probs: &[f64],
        min_task_prob: f64,
        stats: &SolveStats,
        cfg: &SolverConfig,
        timing: bool,
    ) -> Self {
        ResultFile {
            method: method.name().to_string(),
            allocation: allocation_rows(allocation),
            task_probs: task_probs.iter().map(|&p| round_sig(p)).collect(),
            min_task_prob: round_sig(min_task_prob),
            solve_stats: SolveStatsFile {
                iterations: stats.iterations,
                starts: stats.starts,
                seconds: if timing { stats.seconds } else { 0.0 },
            },
            config_echo: ConfigEcho::new(method, cfg),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalEntry {
    pub name: String,
    pub allocation: Vec<Vec<u32>>,
    pub task_probs: Vec<f64>,
    pub mc_task_rates: Vec<f64>,
    pub combined_prob: f64,
    pub mc_combined_rate: f64,
    pub max_abs_gap: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub trials: u64,
    pub sampling: String,
    pub seed: u64,
    pub allocations: Vec<EvalEntry>,
}

pub fn allocation_rows(x: &Allocation) -> Vec<Vec<u32>> {
    x.matrix().rows().into_iter().map(|r| r.to_vec()).collect()
}

pub fn allocation_from_rows(rows: &[Vec<u32>]) -> Result<Allocation, CliError> {
    let m = rows.len();
    let s = rows.first().map_or(0, Vec::len);
    if m == 0 || s == 0 || rows.iter().any(|r| r.len() != s) {
        return Err(CliError::Runtime("allocation must be a rectangular, nonempty integer matrix".into()));
    }
    let flat: Vec<u32> = rows.iter().flatten().copied().collect();
    Ok(Allocation::new(
        Array2::from_shape_vec((m, s), flat).expect("rectangularity checked above"),
    ))
}

/// Rounds to 12 significant decimal digits so emitted values are stable.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("scientific notation round-trips")
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
    parse_json(&text).map_err(|msg| CliError::Usage(format!("{}: {msg}", path.display())))
}

/// Parses JSON, reporting the failing field path and line/column.
pub fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, String> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let inner = e.inner();
        format!("at {} (line {}, column {}): {inner}", e.path(), inner.line(), inner.column())
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Runtime(format!("serialization failed: {e}")))?;
    text.push('\n');
    fs::write(path, text)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}
