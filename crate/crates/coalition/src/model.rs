//! Domain types for species, traits, tasks, and allocations, plus the
//! trait-aggregation algebra: a coalition's collective traits are Gaussian
//! with mean `X · mu_Q` and per-trait variance `(X ⊙ X) · Var_Q`.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Variances below this are clamped before entering probability or gradient
/// computations. Keeps near-deterministic traits from dividing by zero.
pub const VARIANCE_FLOOR: f64 = 1e-9;

/// Slack allowed on relaxed column sums before an allocation counts as
/// infeasible.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Per-species trait distributions: an S×U matrix of means and an S×U matrix
/// of variances. Traits are independent Gaussians per species, so a full
/// covariance is never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesTraitModel {
    mean_traits: Array2<f64>,
    trait_variances: Array2<f64>,
}

impl SpeciesTraitModel {
    pub fn new(mean_traits: Array2<f64>, trait_variances: Array2<f64>) -> Result<Self> {
        if mean_traits.dim() != trait_variances.dim() {
            return Err(Error::dim(
                "species trait matrices",
                format!("{:?}", mean_traits.dim()),
                format!("{:?}", trait_variances.dim()),
            ));
        }
        for (name, m) in [("mean_traits", &mean_traits), ("trait_variances", &trait_variances)] {
            for &v in m.iter() {
                if !v.is_finite() {
                    return Err(Error::NonFinite { context: "species trait matrix", value: v });
                }
                if v < 0.0 {
                    return Err(Error::InvalidValue {
                        context: "species trait matrix",
                        detail: format!("{name} entry {v} is negative"),
                    });
                }
            }
        }
        Ok(Self { mean_traits, trait_variances })
    }

    pub fn num_species(&self) -> usize {
        self.mean_traits.nrows()
    }

    pub fn num_traits(&self) -> usize {
        self.mean_traits.ncols()
    }

    /// Expected trait value per species per trait (`mu_Q`, S×U).
    pub fn means(&self) -> &Array2<f64> {
        &self.mean_traits
    }

    /// Per-trait variance per species (`Var_Q`, S×U).
    pub fn variances(&self) -> &Array2<f64> {
        &self.trait_variances
    }
}

/// Minimum collective trait per task (`Y*`, M×U). A zero entry marks the
/// trait as not required by that task; such traits are excluded from
/// success-probability computations.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskRequirements {
    requirements: Array2<f64>,
}

impl TaskRequirements {
    pub fn new(requirements: Array2<f64>) -> Result<Self> {
        for &v in requirements.iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite { context: "task requirements", value: v });
            }
            if v < 0.0 {
                return Err(Error::InvalidValue {
                    context: "task requirements",
                    detail: format!("entry {v} is negative"),
                });
            }
        }
        Ok(Self { requirements })
    }

    pub fn num_tasks(&self) -> usize {
        self.requirements.nrows()
    }

    pub fn num_traits(&self) -> usize {
        self.requirements.ncols()
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.requirements
    }
}

/// Robots available per species (`N_A`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TeamComposition {
    counts: Vec<u32>,
}

impl TeamComposition {
    pub fn new(counts: Vec<u32>) -> Self {
        Self { counts }
    }

    pub fn num_species(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn total_agents(&self) -> u64 {
        self.counts.iter().map(|&c| u64::from(c)).sum()
    }
}

/// Optional display labels for species, tasks, and traits.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Labels {
    pub species: Vec<String>,
    pub tasks: Vec<String>,
    pub traits: Vec<String>,
}

/// A complete coalition-formation problem: S species with Gaussian traits,
/// a team of robots per species, and M tasks with minimum trait requirements.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    species: SpeciesTraitModel,
    team: TeamComposition,
    tasks: TaskRequirements,
    labels: Option<Labels>,
}

impl ProblemInstance {
    pub fn new(
        species: SpeciesTraitModel,
        team: TeamComposition,
        tasks: TaskRequirements,
    ) -> Result<Self> {
        if species.num_species() == 0 || species.num_traits() == 0 || tasks.num_tasks() == 0 {
            return Err(Error::InvalidValue {
                context: "problem instance",
                detail: "S, U, and M must all be at least 1".to_string(),
            });
        }
        if team.num_species() != species.num_species() {
            return Err(Error::dim("team counts", species.num_species(), team.num_species()));
        }
        if tasks.num_traits() != species.num_traits() {
            return Err(Error::dim(
                "task requirement columns",
                species.num_traits(),
                tasks.num_traits(),
            ));
        }
        Ok(Self { species, team, tasks, labels: None })
    }

    pub fn with_labels(mut self, labels: Labels) -> Result<Self> {
        if labels.species.len() != self.num_species()
            || labels.tasks.len() != self.num_tasks()
            || labels.traits.len() != self.num_traits()
        {
            return Err(Error::dim(
                "labels",
                format!("{}/{}/{}", self.num_species(), self.num_tasks(), self.num_traits()),
                format!("{}/{}/{}", labels.species.len(), labels.tasks.len(), labels.traits.len()),
            ));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn num_species(&self) -> usize {
        self.species.num_species()
    }

    pub fn num_traits(&self) -> usize {
        self.species.num_traits()
    }

    pub fn num_tasks(&self) -> usize {
        self.tasks.num_tasks()
    }

    pub fn species(&self) -> &SpeciesTraitModel {
        &self.species
    }

    pub fn team(&self) -> &TeamComposition {
        &self.team
    }

    pub fn tasks(&self) -> &TaskRequirements {
        &self.tasks
    }

    pub fn labels(&self) -> Option<&Labels> {
        self.labels.as_ref()
    }
}

/// Integer assignment matrix `X` (M×S): robots of species s on task m.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocation {
    assignment: Array2<u32>,
}

impl Allocation {
    pub fn new(assignment: Array2<u32>) -> Self {
        Self { assignment }
    }

    pub fn from_rows(rows: &[Vec<u32>]) -> Result<Self> {
        let m = rows.len();
        let s = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != s) {
            return Err(Error::InvalidValue {
                context: "allocation rows",
                detail: "rows have unequal lengths".to_string(),
            });
        }
        let flat: Vec<u32> = rows.iter().flatten().copied().collect();
        let assignment = Array2::from_shape_vec((m, s), flat).map_err(|e| Error::InvalidValue {
            context: "allocation rows",
            detail: e.to_string(),
        })?;
        Ok(Self { assignment })
    }

    pub fn num_tasks(&self) -> usize {
        self.assignment.nrows()
    }

    pub fn num_species(&self) -> usize {
        self.assignment.ncols()
    }

    pub fn matrix(&self) -> &Array2<u32> {
        &self.assignment
    }

    pub fn to_f64(&self) -> Array2<f64> {
        self.assignment.mapv(f64::from)
    }
}

/// Real-valued assignment matrix used while the integer constraint is
/// relaxed. Feasibility (column sums within the team budget, nonnegative
/// entries) is checked at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedAllocation {
    assignment: Array2<f64>,
}

impl RelaxedAllocation {
    pub fn new(assignment: Array2<f64>, team: &TeamComposition) -> Result<Self> {
        if assignment.ncols() != team.num_species() {
            return Err(Error::dim("relaxed allocation columns", team.num_species(), assignment.ncols()));
        }
        for &v in assignment.iter() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidValue {
                    context: "relaxed allocation",
                    detail: format!("entry {v} is negative or non-finite"),
                });
            }
        }
        for (s, &cap) in team.counts().iter().enumerate() {
            let col_sum: f64 = assignment.column(s).sum();
            if col_sum > f64::from(cap) + FEASIBILITY_TOL {
                return Err(Error::Infeasible {
                    detail: format!("species {s} column sum {col_sum} exceeds budget {cap}"),
                });
            }
        }
        Ok(Self { assignment })
    }

    pub fn num_tasks(&self) -> usize {
        self.assignment.nrows()
    }

    pub fn num_species(&self) -> usize {
        self.assignment.ncols()
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.assignment
    }
}

/// Per-task Gaussian parameters of the aggregated collective traits
/// (`mu_Y` and `Var_Y`, both M×U).
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatedTraits {
    pub means: Array2<f64>,
    pub variances: Array2<f64>,
}

impl AggregatedTraits {
    /// Aggregates both moments for an assignment matrix.
    pub fn compute(x: &Array2<f64>, species: &SpeciesTraitModel) -> Result<Self> {
        Ok(Self {
            means: aggregate_means(x, species)?,
            variances: aggregate_variances(x, species)?,
        })
    }
}

/// Expected collective traits per task: `X · mu_Q` (M×U).
pub fn aggregate_means(x: &Array2<f64>, species: &SpeciesTraitModel) -> Result<Array2<f64>> {
    if x.ncols() != species.num_species() {
        return Err(Error::dim("aggregate_means", species.num_species(), x.ncols()));
    }
    Ok(x.dot(species.means()))
}

/// Per-trait variance of collective traits per task: `(X ⊙ X) · Var_Q` (M×U).
pub fn aggregate_variances(x: &Array2<f64>, species: &SpeciesTraitModel) -> Result<Array2<f64>> {
    if x.ncols() != species.num_species() {
        return Err(Error::dim("aggregate_variances", species.num_species(), x.ncols()));
    }
    Ok((x * x).dot(species.variances()))
}

/// Outcome of checking an integer allocation against the team budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeasibilityReport {
    pub feasible: bool,
    /// Per-species `count - column sum`; negative entries mark violations.
    pub slack: Vec<i64>,
}

/// Checks the per-species budget `X^T · 1 ≤ N_A` and reports slack.
pub fn validate_allocation(x: &Allocation, team: &TeamComposition) -> Result<FeasibilityReport> {
    if x.num_species() != team.num_species() {
        return Err(Error::dim("validate_allocation", team.num_species(), x.num_species()));
    }
    let slack: Vec<i64> = team
        .counts()
        .iter()
        .enumerate()
        .map(|(s, &cap)| {
            let used: i64 = x.matrix().column(s).iter().map(|&v| i64::from(v)).sum();
            i64::from(cap) - used
        })
        .collect();
    let feasible = slack.iter().all(|&v| v >= 0);
    Ok(FeasibilityReport { feasible, slack })
}
