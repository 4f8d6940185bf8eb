use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ea::{run_island, IslandConfig, StopSignal};
use crate::error::{invalid, Result};
use crate::objective::ProblemDef;
use crate::rng::{derive_seed, Mt64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BaselineParams {
    pub problem: ProblemDef,
    pub population_size: usize,
    pub runs: u64,
    pub max_evaluations: u64,
    pub seed: u64,
}

impl BaselineParams {
    /// Island settings for each run: the problem defaults with the given
    /// population and budget, and no migration.
    pub fn island_config(&self) -> IslandConfig {
        let mut c = IslandConfig::for_problem(&self.problem);
        c.population_size = self.population_size;
        c.max_evaluations = self.max_evaluations;
        c
    }
}

/// Seed of run `run`; experiments that share `seed` share the whole list.
pub fn run_seed(seed: u64, run: u64) -> u64 {
    derive_seed(seed, &[run])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunRecord {
    pub run: u64,
    pub seed: u64,
    pub population_size: usize,
    pub solved: bool,
    pub generations: u64,
    pub evaluations: u64,
    pub best_fitness: f64,
    pub wall_time_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BaselineReport {
    pub params: BaselineParams,
    pub island: IslandConfig,
    pub problem: ProblemDef,
    pub population_size: usize,
    pub runs: u64,
    pub successes: u64,
    pub success_rate: f64,
    /// Over successful runs only; `None` when nothing was solved.
    pub mean_time_to_solution_seconds: Option<f64>,
    pub mean_evaluations: Option<f64>,
    pub per_run_records: Vec<RunRecord>,
}

impl BaselineReport {
    pub fn from_records(params: BaselineParams, records: Vec<RunRecord>) -> Self {
        let solved: Vec<&RunRecord> = records.iter().filter(|r| r.solved).collect();
        let mean = |f: &dyn Fn(&RunRecord) -> f64| {
            (!solved.is_empty()).then(|| solved.iter().map(|r| f(r)).sum::<f64>() / solved.len() as f64)
        };
        let successes = solved.len() as u64;
        let runs = records.len() as u64;
        BaselineReport {
            island: params.island_config(),
            problem: params.problem.clone(),
            population_size: params.population_size,
            runs,
            successes,
            success_rate: if runs == 0 { 0.0 } else { successes as f64 / runs as f64 },
            mean_time_to_solution_seconds: mean(&|r| r.wall_time_seconds),
            mean_evaluations: mean(&|r| r.evaluations as f64),
            params,
            per_run_records: records,
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_records_csv(path, &self.per_run_records)
    }
}

pub fn write_records_csv(path: &Path, records: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs `params.runs` independent islands without migration, one after the
/// other so wall times are not skewed by sharing cores.
pub fn run_baseline(params: &BaselineParams) -> Result<BaselineReport> {
    run_baseline_with(params, |_| {})
}

pub fn run_baseline_with(params: &BaselineParams, mut progress: impl FnMut(&RunRecord)) -> Result<BaselineReport> {
    if params.runs == 0 {
        return invalid("a baseline needs at least one run");
    }
    let config = params.island_config();
    config.validate()?;
    let objective = params.problem.build()?;
    let stop = StopSignal::new();
    let mut records = Vec::with_capacity(params.runs as usize);
    for run in 0..params.runs {
        let seed = run_seed(params.seed, run);
        let result = run_island(&config, &objective, None, &stop, &mut Mt64::new(seed))?;
        let record = RunRecord {
            run,
            seed,
            population_size: result.record.population_size,
            solved: result.solved(),
            generations: result.record.generations,
            evaluations: result.record.evaluations,
            best_fitness: result.record.best_fitness,
            wall_time_seconds: result.wall_time_seconds,
        };
        progress(&record);
        records.push(record);
    }
    Ok(BaselineReport::from_records(params.clone(), records))
}
