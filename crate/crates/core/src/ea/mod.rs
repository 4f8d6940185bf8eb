//! Generational evolutionary algorithm engine run by every island.
//!
//! The engine is representation-agnostic: it only needs an
//! [`Objective`](crate::objective::Objective). One generation is binary
//! tournament selection, crossover with probability `crossover_rate`,
//! per-gene mutation, and a single elite slot (index 0) holding the best
//! individual seen so far.

mod island;
pub mod operators;
mod population;

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use island::{
    init_island, run_island, step_generation, EmitOutcome, EvolutionRecord, ExchangeContext, HookError, IslandOutcome,
    IslandResult, IslandState, MigrationHooks,
};
pub use population::{best_of, insert_migrant, worst_of, Individual, Population};

use crate::error::{invalid, Result};
use crate::objective::{Direction, ProblemDef};

/// Migration interval used when none is configured.
pub const DEFAULT_MIGRATION_INTERVAL: u64 = 100;

/// Default bit-flip rate, in expected flips per chromosome.
pub const DEFAULT_BIT_FLIPS_PER_CHROMOSOME: f64 = 0.75;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IslandConfig {
    pub population_size: usize,
    /// When set, each incarnation draws its population size uniformly from
    /// this inclusive range instead of using `population_size`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pop_size_range: Option<(usize, usize)>,
    pub migration_interval: u64,
    pub tournament_size: usize,
    pub crossover_rate: f64,
    /// Per-gene probability; `None` means `1 / genome length`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mutation_rate: Option<f64>,
    pub max_evaluations: u64,
    pub target_fitness: f64,
    pub direction: Direction,
}

impl IslandConfig {
    pub fn for_problem(problem: &ProblemDef) -> Self {
        IslandConfig {
            population_size: 512,
            pop_size_range: None,
            migration_interval: DEFAULT_MIGRATION_INTERVAL,
            tournament_size: 2,
            crossover_rate: 1.0,
            mutation_rate: match problem {
                ProblemDef::Trap(p) => Some(DEFAULT_BIT_FLIPS_PER_CHROMOSOME / p.length() as f64),
                ProblemDef::F15 { .. } => None,
            },
            max_evaluations: 5_000_000,
            target_fitness: problem.default_target(),
            direction: problem.default_direction(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let min_pop = match self.pop_size_range {
            Some((lo, hi)) if lo > hi => return invalid(format!("population range ({lo}, {hi}) is empty")),
            Some((lo, _)) => lo,
            None => self.population_size,
        };
        if min_pop < 2 {
            return invalid("population size must be at least 2");
        }
        if self.tournament_size < 2 || self.tournament_size > min_pop {
            return invalid(format!(
                "tournament size {} must lie in [2, {min_pop}]",
                self.tournament_size
            ));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return invalid("crossover rate must be a probability");
        }
        if let Some(r) = self.mutation_rate {
            if !(0.0..=1.0).contains(&r) {
                return invalid("mutation rate must be a probability");
            }
        }
        if self.migration_interval == 0 {
            return invalid("migration interval must be at least one generation");
        }
        if !self.target_fitness.is_finite() {
            return invalid("target fitness must be finite");
        }
        Ok(())
    }
}

/// Cooperative cancellation flag shared between an island and its owner.
#[derive(Debug, Clone, Default)]
pub struct StopSignal(Arc<AtomicBool>);

impl StopSignal {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn stop(&self) {
        self.0.store(true, Ordering::SeqCst);
    }

    pub fn is_stopped(&self) -> bool {
        self.0.load(Ordering::SeqCst)
    }
}
