//! Benchmark-instance generation, the fixed two-species demo scenario, and
//! the experiment runner that scores every method on every instance with
//! exact (closed-form) task probabilities.

use ndarray::Array2;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{
    Allocation, Labels, ProblemInstance, SpeciesTraitModel, TaskRequirements, TeamComposition,
};
use crate::solver::{
    solve_random, solve_risk_adaptive, solve_risk_averse, solve_risk_neutral, Method, SolverConfig,
};
use crate::streams::{mix_seed, stream_rng};

/// Sampling ranges for random benchmark instances. Every species has a
/// dominant trait (its own index, hence the S = U requirement) drawn from a
/// higher mean range and a tighter variance range than the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub num_species: usize,
    pub num_traits: usize,
    pub num_tasks: usize,
    pub dominant_mu_range: (f64, f64),
    pub nondominant_mu_range: (f64, f64),
    pub dominant_var_range: (f64, f64),
    pub nondominant_var_range: (f64, f64),
    pub count_range: (u32, u32),
    pub requirement_fraction_range: (f64, f64),
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            num_species: 3,
            num_traits: 3,
            num_tasks: 3,
            dominant_mu_range: (4.0, 5.0),
            nondominant_mu_range: (0.0, 1.0),
            dominant_var_range: (0.0, 0.5),
            nondominant_var_range: (0.0, 1.0),
            count_range: (5, 15),
            requirement_fraction_range: (0.2, 0.6),
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.num_species == 0 || self.num_traits == 0 || self.num_tasks == 0 {
            return bad("dimensions must all be at least 1".to_string());
        }
        if self.num_species != self.num_traits {
            return bad(format!(
                "dominant-trait assignment needs num_species == num_traits, got {} vs {}",
                self.num_species, self.num_traits
            ));
        }
        for (name, (lo, hi)) in [
            ("dominant_mu_range", self.dominant_mu_range),
            ("nondominant_mu_range", self.nondominant_mu_range),
            ("dominant_var_range", self.dominant_var_range),
            ("nondominant_var_range", self.nondominant_var_range),
            ("requirement_fraction_range", self.requirement_fraction_range),
        ] {
            if !(lo.is_finite() && hi.is_finite()) || lo > hi || lo < 0.0 {
                return bad(format!("{name} must be a well-ordered nonnegative range"));
            }
        }
        if self.count_range.0 > self.count_range.1 {
            return bad("count_range must be well-ordered".to_string());
        }
        if self.requirement_fraction_range.0 <= 0.0 {
            return bad("requirement fractions must be positive".to_string());
        }
        Ok(())
    }
}

fn draw(rng: &mut impl Rng, range: (f64, f64)) -> f64 {
    if range.0 == range.1 {
        range.0
    } else {
        rng.random_range(range.0..range.1)
    }
}

/// Samples one problem: species s's dominant trait is trait s; counts are
/// uniform on the count range; requirement (m, u) is an independent fraction
/// of the full team's expected capability on trait u, split across tasks.
pub fn generate_instance(cfg: &GeneratorConfig, rng: &mut impl Rng) -> Result<ProblemInstance> {
    cfg.validate()?;
    let (s_n, u_n, m_n) = (cfg.num_species, cfg.num_traits, cfg.num_tasks);
    let mut mu = Array2::zeros((s_n, u_n));
    for s in 0..s_n {
        for u in 0..u_n {
            mu[[s, u]] =
                draw(rng, if u == s { cfg.dominant_mu_range } else { cfg.nondominant_mu_range });
        }
    }
    let mut var = Array2::zeros((s_n, u_n));
    for s in 0..s_n {
        for u in 0..u_n {
            var[[s, u]] =
                draw(rng, if u == s { cfg.dominant_var_range } else { cfg.nondominant_var_range });
        }
    }
    let counts: Vec<u32> =
        (0..s_n).map(|_| rng.random_range(cfg.count_range.0..=cfg.count_range.1)).collect();

    let mut req = Array2::zeros((m_n, u_n));
    for m in 0..m_n {
        for u in 0..u_n {
            let capability: f64 = (0..s_n).map(|s| f64::from(counts[s]) * mu[[s, u]]).sum();
            let fraction = draw(rng, cfg.requirement_fraction_range);
            req[[m, u]] = fraction * capability / m_n as f64;
        }
    }

    ProblemInstance::new(
        SpeciesTraitModel::new(mu, var)?,
        TeamComposition::new(counts),
        TaskRequirements::new(req)?,
    )
}

/// A reference allocation with a display name.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedAllocation {
    pub name: String,
    pub allocation: Allocation,
}

/// The fixed two-species demo scenario: a strength-dominant and a
/// water-capacity-dominant species, a debris-removal task needing 11 units
/// of strength, and a fire-fighting task needing 14 units of water capacity,
/// plus the three reference allocations discussed alongside it.
pub fn robotarium_preset() -> (ProblemInstance, Vec<NamedAllocation>) {
    let species = SpeciesTraitModel::new(
        ndarray::array![[2.0, 1.0], [1.0, 2.0]],
        ndarray::array![[0.5, 1.0], [1.0, 0.5]],
    )
    .expect("static matrices are valid");
    let team = TeamComposition::new(vec![6, 9]);
    let tasks = TaskRequirements::new(ndarray::array![[11.0, 0.0], [0.0, 14.0]])
        .expect("static matrices are valid");
    let problem = ProblemInstance::new(species, team, tasks)
        .expect("static dimensions are consistent")
        .with_labels(Labels {
            species: vec!["species_1".into(), "species_2".into()],
            tasks: vec!["debris_removal".into(), "fire_fighting".into()],
            traits: vec!["strength".into(), "water_capacity".into()],
        })
        .expect("label lengths match");
    let named = vec![
        NamedAllocation {
            name: "ours".to_string(),
            allocation: Allocation::new(ndarray::array![[6, 1], [0, 8]]),
        },
        NamedAllocation {
            name: "risk_averse".to_string(),
            allocation: Allocation::new(ndarray::array![[4, 3], [2, 6]]),
        },
        NamedAllocation {
            name: "risk_neutral".to_string(),
            allocation: Allocation::new(ndarray::array![[5, 3], [1, 6]]),
        },
    ];
    (problem, named)
}

/// One (instance, method) result with exact task probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRecord {
    pub instance_id: u64,
    pub method: Method,
    pub allocation: Allocation,
    pub task_probs: Vec<f64>,
    pub min_task_prob: f64,
    pub solve_seconds: f64,
}

/// Generates `n_instances` problems and solves each with every requested
/// method. Instance i comes from RNG stream (cfg.seed, i) and each solver
/// gets seed mix(solver_cfg.seed, i), so all methods see identical problems
/// and reruns reproduce records exactly (timings aside).
pub fn run_benchmark(
    n_instances: u64,
    methods: &[Method],
    cfg: &GeneratorConfig,
    solver_cfg: &SolverConfig,
) -> Result<Vec<BenchmarkRecord>> {
    if n_instances == 0 {
        return Err(Error::InvalidValue {
            context: "run_benchmark",
            detail: "n_instances must be at least 1".to_string(),
        });
    }
    if methods.is_empty() {
        return Err(Error::EmptyInput("run_benchmark methods"));
    }
    cfg.validate()?;
    solver_cfg.validate()?;
    let mut records = Vec::with_capacity(n_instances as usize * methods.len());
    for i in 0..n_instances {
        let problem = generate_instance(cfg, &mut stream_rng(cfg.seed, i))?;
        let instance_seed = mix_seed(solver_cfg.seed, i);
        let per_instance = SolverConfig { seed: instance_seed, ..solver_cfg.clone() };
        for &method in methods {
            let solution = match method {
                Method::Adaptive => solve_risk_adaptive(&problem, &per_instance)?,
                Method::Neutral => solve_risk_neutral(&problem, &per_instance)?,
                Method::Averse => solve_risk_averse(&problem, &per_instance)?,
                Method::Random => solve_random(&problem, instance_seed)?,
            };
            records.push(BenchmarkRecord {
                instance_id: i,
                method,
                task_probs: solution.task_probs(),
                min_task_prob: solution.min_prob(),
                solve_seconds: solution.stats.seconds,
                allocation: solution.allocation,
            });
        }
    }
    Ok(records)
}

/// Five-number summary (linear-interpolation quartiles).
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl SummaryStats {
    fn from_values(values: &mut [f64]) -> Self {
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let q = |p: f64| -> f64 {
            let h = (values.len() - 1) as f64 * p;
            let lo = h.floor() as usize;
            let frac = h - lo as f64;
            if lo + 1 < values.len() {
                values[lo] + frac * (values[lo + 1] - values[lo])
            } else {
                values[lo]
            }
        };
        Self { min: values[0], q1: q(0.25), median: q(0.5), q3: q(0.75), max: values[values.len() - 1] }
    }

    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

/// Per-method distribution summary over benchmark records.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: Method,
    pub records: usize,
    /// Statistics of all task probabilities pooled across instances.
    pub pooled_task_probs: SummaryStats,
    /// Statistics of the per-instance minimum task probability.
    pub min_task_probs: SummaryStats,
}

/// Aggregates records per method, in the fixed method order.
pub fn summarize(records: &[BenchmarkRecord]) -> Result<Vec<MethodSummary>> {
    if records.is_empty() {
        return Err(Error::EmptyInput("summarize records"));
    }
    let mut out = Vec::new();
    for method in Method::ALL {
        let subset: Vec<&BenchmarkRecord> =
            records.iter().filter(|r| r.method == method).collect();
        if subset.is_empty() {
            continue;
        }
        let mut pooled: Vec<f64> =
            subset.iter().flat_map(|r| r.task_probs.iter().copied()).collect();
        let mut mins: Vec<f64> = subset.iter().map(|r| r.min_task_prob).collect();
        out.push(MethodSummary {
            method,
            records: subset.len(),
            pooled_task_probs: SummaryStats::from_values(&mut pooled),
            min_task_probs: SummaryStats::from_values(&mut mins),
        });
    }
    Ok(out)
}
