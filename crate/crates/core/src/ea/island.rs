use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use uuid::Uuid;

use super::operators::{crossover, mutate, tournament};
use super::population::{best_of, insert_migrant, Individual, Population};
use super::{IslandConfig, StopSignal};
use crate::error::Result;
use crate::genome::Genome;
use crate::objective::Objective;
use crate::rng::Mt64;

#[derive(Debug, Clone)]
pub struct IslandState {
    pub uuid: Uuid,
    pub population: Population,
    pub generation: u64,
    pub evaluations: u64,
    pub best_ever: Individual,
}

impl IslandState {
    pub fn best_fitness(&self) -> f64 {
        self.best_ever.fitness.expect("best_ever is always evaluated")
    }
}

/// Creates a fresh island.
///
/// Draw order: two words for the UUID, one bounded draw for the population
/// size when a range is configured, then the genomes in order.
pub fn init_island(config: &IslandConfig, objective: &dyn Objective, rng: &mut Mt64) -> Result<IslandState> {
    config.validate()?;
    let uuid = uuid::Builder::from_random_bytes(rng.bytes16()).into_uuid();
    let size = match config.pop_size_range {
        Some((lo, hi)) => lo + rng.below_usize(hi - lo + 1),
        None => config.population_size,
    };
    let domain = objective.domain();
    let members: Vec<Individual> = (0..size)
        .map(|_| {
            let genome = domain.random_genome(rng);
            let fitness = objective.evaluate_unchecked(&genome);
            Individual::evaluated(genome, fitness)
        })
        .collect();
    let population = Population::from_vec_unchecked(members);
    let best_ever = best_of(&population, config.direction)?.1.clone();
    Ok(IslandState { uuid, population, generation: 0, evaluations: size as u64, best_ever })
}

/// Runs one generation in place.
pub fn step_generation(state: &mut IslandState, config: &IslandConfig, objective: &dyn Objective, rng: &mut Mt64) {
    let domain = objective.domain();
    let rate = config.mutation_rate.unwrap_or(1.0 / domain.len().max(1) as f64);
    let size = state.population.len();
    let parents = state.population.members();

    let mut next = Vec::with_capacity(size);
    next.push(state.best_ever.clone());
    let mut evaluated = 0u64;
    while next.len() < size {
        let i = tournament(parents, config.tournament_size, config.direction, rng);
        let j = tournament(parents, config.tournament_size, config.direction, rng);
        let mut a = parents[i].genome.clone();
        let mut b = parents[j].genome.clone();
        if rng.bernoulli(config.crossover_rate) {
            crossover(&mut a, &mut b, rng);
        }
        for mut child in [a, b] {
            if next.len() == size {
                break;
            }
            mutate(&mut child, rate, &domain, rng);
            let fitness = objective.evaluate_unchecked(&child);
            evaluated += 1;
            next.push(Individual::evaluated(child, fitness));
        }
    }

    state.population = Population::from_vec_unchecked(next);
    state.generation += 1;
    state.evaluations += evaluated;
    let (_, best) = best_of(&state.population, config.direction).expect("offspring are evaluated");
    if config.direction.better(best.fitness.unwrap(), state.best_fitness()) {
        state.best_ever = best.clone();
    }
}

#[derive(Debug, Error)]
pub enum HookError {
    #[error("server unavailable: {0}")]
    Unavailable(String),
    #[error("waiting for retry backoff")]
    Backoff,
    #[error("protocol error: {0}")]
    Protocol(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmitOutcome {
    Continue,
    /// The server accepted this island's chromosome as a solution.
    Solved,
    /// The experiment this island belonged to has ended.
    Restart,
}

/// What an island reports at a migration boundary.
#[derive(Debug, Clone, Copy)]
pub struct ExchangeContext<'a> {
    pub uuid: Uuid,
    pub generation: u64,
    pub evaluations: u64,
    pub best: &'a Individual,
    /// Set on the single report sent when the island meets its target.
    pub solution: bool,
}

/// Exits from an island to the outside world. Failures never abort the run.
pub trait MigrationHooks {
    fn emit_best(&mut self, ctx: &ExchangeContext<'_>) -> Result<EmitOutcome, HookError>;
    fn request_migrant(&mut self) -> Result<Option<Individual>, HookError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IslandOutcome {
    Solved,
    BudgetExhausted,
    Stopped,
    ExperimentChanged,
}

/// Everything about a run that is a deterministic function of
/// (config, seed, migrant sequence).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EvolutionRecord {
    pub outcome: IslandOutcome,
    pub solved: bool,
    pub uuid: Uuid,
    pub population_size: usize,
    pub generations: u64,
    pub evaluations: u64,
    pub best_fitness: f64,
    pub best_genome: Genome,
    pub migrants_received: u64,
    /// Best fitness in the population after each generation (index 0 is the
    /// initial population).
    #[serde(default, skip_serializing)]
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IslandResult {
    #[serde(flatten)]
    pub record: EvolutionRecord,
    pub wall_time_seconds: f64,
}

impl IslandResult {
    pub fn solved(&self) -> bool {
        self.record.solved
    }
}

/// Evolves one island until it meets the target, exhausts its evaluation
/// budget, is stopped, or learns that its experiment is over.
///
/// Every `migration_interval` generations the best individual goes out
/// through `hooks` and a returned migrant replaces the worst member (after
/// local re-evaluation, which counts as one evaluation). A solving island
/// reports once more with `solution` set and does not exchange in that
/// generation. Hook errors are logged and otherwise ignored.
pub fn run_island(
    config: &IslandConfig,
    objective: &dyn Objective,
    mut hooks: Option<&mut dyn MigrationHooks>,
    stop: &StopSignal,
    rng: &mut Mt64,
) -> Result<IslandResult> {
    let started = Instant::now();
    let mut state = init_island(config, objective, rng)?;
    let mut history = vec![state.best_fitness()];
    let mut migrants_received = 0u64;
    let direction = config.direction;

    let outcome = loop {
        if direction.meets(state.best_fitness(), config.target_fitness) {
            if let Some(h) = hooks.as_deref_mut() {
                let ctx = context(&state, true);
                if let Err(e) = h.emit_best(&ctx) {
                    tracing::warn!(island = %state.uuid, error = %e, "could not report solution");
                }
            }
            break IslandOutcome::Solved;
        }
        if state.evaluations >= config.max_evaluations {
            break IslandOutcome::BudgetExhausted;
        }
        if stop.is_stopped() {
            break IslandOutcome::Stopped;
        }

        step_generation(&mut state, config, objective, rng);
        let (_, gen_best) = best_of(&state.population, direction)?;
        history.push(gen_best.fitness.unwrap());

        let at_boundary = state.generation % config.migration_interval == 0;
        if !at_boundary || direction.meets(state.best_fitness(), config.target_fitness) {
            continue;
        }
        let Some(h) = hooks.as_deref_mut() else { continue };

        match h.emit_best(&context(&state, false)) {
            Ok(EmitOutcome::Restart) => break IslandOutcome::ExperimentChanged,
            Ok(EmitOutcome::Solved) => break IslandOutcome::Solved,
            Ok(EmitOutcome::Continue) => {}
            Err(HookError::Backoff) => continue,
            Err(e) => tracing::warn!(island = %state.uuid, error = %e, "emit best failed"),
        }
        match h.request_migrant() {
            Ok(Some(migrant)) => match objective.evaluate(&migrant.genome) {
                Ok(fitness) => {
                    state.evaluations += 1;
                    let migrant = Individual::evaluated(migrant.genome, fitness);
                    if direction.better(fitness, state.best_fitness()) {
                        state.best_ever = migrant.clone();
                    }
                    insert_migrant(&mut state.population, migrant, direction)?;
                    migrants_received += 1;
                }
                Err(e) => tracing::warn!(island = %state.uuid, error = %e, "discarding incompatible migrant"),
            },
            Ok(None) => {}
            Err(HookError::Backoff) => {}
            Err(e) => tracing::warn!(island = %state.uuid, error = %e, "migrant request failed"),
        }
    };

    let record = EvolutionRecord {
        outcome,
        solved: outcome == IslandOutcome::Solved,
        uuid: state.uuid,
        population_size: state.population.len(),
        generations: state.generation,
        evaluations: state.evaluations,
        best_fitness: state.best_fitness(),
        best_genome: state.best_ever.genome.clone(),
        migrants_received,
        history,
    };
    Ok(IslandResult { record, wall_time_seconds: started.elapsed().as_secs_f64() })
}

fn context(state: &IslandState, solution: bool) -> ExchangeContext<'_> {
    ExchangeContext {
        uuid: state.uuid,
        generation: state.generation,
        evaluations: state.evaluations,
        best: &state.best_ever,
        solution,
    }
}
