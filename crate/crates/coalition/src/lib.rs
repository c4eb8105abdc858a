//! Risk-adaptive coalition formation for heterogeneous multi-robot teams.
//!
//! Robots come in species; each species' capabilities (traits) are
//! independent Gaussians. A coalition assigned to a task aggregates traits
//! additively, so its collective capability is Gaussian too, and the task's
//! success probability has a closed form. This crate finds integer
//! assignments of robots to tasks that maximize the worst task's success
//! probability, alongside risk-neutral, risk-averse, and random baselines,
//! a Monte Carlo replay harness, and a benchmark-instance generator.

pub mod error;
pub mod experiments;
pub mod gauss;
pub mod model;
pub mod montecarlo;
pub mod solver;
pub mod streams;

pub use error::{Error, Result};
pub use model::{
    aggregate_means, aggregate_variances, validate_allocation, AggregatedTraits, Allocation,
    FeasibilityReport, Labels, ProblemInstance, RelaxedAllocation, SpeciesTraitModel,
    TaskRequirements, TeamComposition, VARIANCE_FLOOR,
};
