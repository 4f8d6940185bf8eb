//! Headless volunteer client: `k` islands in threads, each trading migrants
//! with a pool server and starting over with a fresh UUID when its
//! incarnation ends.

mod exchange;

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use exchange::{http_agent, ExchangeCounters, ExchangeResult, ExchangeStats, HttpExchanger, RetryPolicy};

use crate::ea::{run_island, ExchangeContext, IslandConfig, IslandOutcome, IslandResult, MigrationHooks, StopSignal};
use crate::error::{invalid, Result};
use crate::objective::{Objective, ProblemDef};
use crate::rng::{derive_seed, Mt64};

pub const DEFAULT_ISLAND_COUNT: usize = 2;
pub const DEFAULT_POP_SIZE_RANGE: (usize, usize) = (128, 256);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClientConfig {
    /// Base URL of the pool server; `None` runs the islands purely locally.
    pub server_url: Option<String>,
    pub island_count: usize,
    pub island: IslandConfig,
    pub retry: RetryPolicy,
    pub restart_on_solution: bool,
    /// Upper bound on incarnations per island, mostly for tests.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_incarnations: Option<u64>,
    pub seed: u64,
}

impl ClientConfig {
    pub fn new(server_url: Option<String>, problem: &ProblemDef, seed: u64) -> Self {
        let mut island = IslandConfig::for_problem(problem);
        island.pop_size_range = Some(DEFAULT_POP_SIZE_RANGE);
        ClientConfig {
            server_url,
            island_count: DEFAULT_ISLAND_COUNT,
            island,
            retry: RetryPolicy::default(),
            restart_on_solution: true,
            max_incarnations: None,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.island_count == 0 {
            return invalid("a client needs at least one island");
        }
        if self.max_incarnations == Some(0) {
            return invalid("max incarnations must be at least 1");
        }
        self.retry.validate()?;
        self.island.validate()
    }
}

/// RNG seed for one incarnation of one island.
pub fn island_seed(client_seed: u64, island: usize, incarnation: u64) -> u64 {
    derive_seed(client_seed, &[island as u64, incarnation])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IslandReport {
    pub index: usize,
    pub incarnations: Vec<IslandResult>,
}

impl IslandReport {
    pub fn solutions(&self) -> usize {
        self.incarnations.iter().filter(|r| r.solved()).count()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClientReport {
    pub config: ClientConfig,
    pub islands: Vec<IslandReport>,
    pub solutions_found: usize,
    pub requests_sent: u64,
    pub request_failures: u64,
    pub exchange: ExchangeStats,
    pub wall_time_seconds: f64,
}

/// One exchange at a migration boundary: PUT the best individual, and unless
/// the experiment has moved on, GET a random migrant.
pub fn exchange_migrants(exchanger: &mut HttpExchanger, ctx: &ExchangeContext<'_>) -> ExchangeResult {
    exchanger.exchange(ctx)
}

/// Runs the client until `stop` is raised or every island has gone idle.
///
/// An island goes idle after its first incarnation when `restart_on_solution`
/// is off, or after `max_incarnations`. An unreachable server is never fatal.
pub fn run_client(config: &ClientConfig, objective: Arc<dyn Objective>, stop: &StopSignal) -> Result<ClientReport> {
    config.validate()?;
    let started = Instant::now();
    let counters = Arc::new(ExchangeCounters::default());
    let agent = config.server_url.as_ref().map(|_| http_agent(&config.retry));

    let islands = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..config.island_count)
            .map(|index| {
                let objective = objective.clone();
                let counters = counters.clone();
                let agent = agent.clone();
                std::thread::Builder::new()
                    .name(format!("island-{index}"))
                    .spawn_scoped(scope, move || -> Result<IslandReport> {
                        let mut incarnations = Vec::new();
                        for incarnation in 0.. {
                            if stop.is_stopped() || config.max_incarnations.is_some_and(|m| incarnation >= m) {
                                break;
                            }
                            let mut rng = Mt64::new(island_seed(config.seed, index, incarnation));
                            let mut exchanger = match (&agent, &config.server_url) {
                                (Some(agent), Some(url)) => {
                                    Some(HttpExchanger::new(agent.clone(), url, config.retry.clone(), counters.clone()))
                                }
                                _ => None,
                            };
                            let hooks = exchanger.as_mut().map(|e| e as &mut dyn MigrationHooks);
                            let result = run_island(&config.island, objective.as_ref(), hooks, stop, &mut rng)?;
                            let outcome = result.record.outcome;
                            tracing::info!(
                                island = index,
                                incarnation,
                                uuid = %result.record.uuid,
                                ?outcome,
                                best = result.record.best_fitness,
                                "incarnation finished"
                            );
                            incarnations.push(result);
                            if outcome == IslandOutcome::Stopped || !config.restart_on_solution {
                                break;
                            }
                        }
                        Ok(IslandReport { index, incarnations })
                    })
                    .expect("spawn island thread")
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("island thread panicked"))
            .collect::<Result<Vec<_>>>()
    })?;

    let exchange = counters.snapshot();
    Ok(ClientReport {
        config: config.clone(),
        solutions_found: islands.iter().map(IslandReport::solutions).sum(),
        islands,
        requests_sent: exchange.requests_sent,
        request_failures: exchange.request_failures,
        exchange,
        wall_time_seconds: started.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::TrapParams;

    fn local(islands: usize) -> ClientConfig {
        let def = ProblemDef::Trap(TrapParams::classic(2));
        let mut c = ClientConfig::new(None, &def, 11);
        c.island_count = islands;
        c.island.pop_size_range = Some((16, 24));
        c.max_incarnations = Some(3);
        c
    }

    #[test]
    fn config_validation() {
        let mut c = local(1);
        assert!(c.validate().is_ok());
        c.island_count = 0;
        assert!(c.validate().is_err());
        let mut c = local(1);
        c.retry.initial_backoff_ms = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn restarts_give_fresh_uuids() {
        let c = local(2);
        let problem = Arc::new(ProblemDef::Trap(TrapParams::classic(2)).build().unwrap());
        let report = run_client(&c, problem, &StopSignal::new()).unwrap();
        assert_eq!(report.islands.len(), 2);
        let mut uuids: Vec<_> = report.islands.iter().flat_map(|i| i.incarnations.iter().map(|r| r.record.uuid)).collect();
        assert_eq!(uuids.len(), 6);
        uuids.sort();
        uuids.dedup();
        assert_eq!(uuids.len(), 6);
        assert_eq!(report.solutions_found, 6);
        assert_eq!(report.requests_sent, 0);
    }

    #[test]
    fn islands_are_independent_of_count() {
        let problem: Arc<dyn Objective> = Arc::new(ProblemDef::Trap(TrapParams::classic(2)).build().unwrap());
        let one = run_client(&local(1), problem.clone(), &StopSignal::new()).unwrap();
        let three = run_client(&local(3), problem, &StopSignal::new()).unwrap();
        let a: Vec<_> = one.islands[0].incarnations.iter().map(|r| r.record.clone()).collect();
        let b: Vec<_> = three.islands[0].incarnations.iter().map(|r| r.record.clone()).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn preset_stop_runs_nothing() {
        let stop = StopSignal::new();
        stop.stop();
        let problem = Arc::new(ProblemDef::Trap(TrapParams::classic(2)).build().unwrap());
        let report = run_client(&local(2), problem, &stop).unwrap();
        assert!(report.islands.iter().all(|i| i.incarnations.is_empty()));
    }
}
