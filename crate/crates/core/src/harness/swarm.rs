use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::client::{run_client, ClientConfig, ClientReport};
use crate::ea::StopSignal;
use crate::error::{invalid, Result};
use crate::objective::{Objective, ProblemDef};
use crate::rng::{derive_seed, Mt64};
use crate::server::{spawn_server, ServerConfig, DEFAULT_POOL_CAPACITY};
use crate::wire::Stats;

const POLL: Duration = Duration::from_millis(5);
const CHURN_STREAM: u64 = 0xC4;
const SERVER_STREAM: u64 = 0x5E;

/// Seeded client churn: uniform join jitter, exponential session lengths and
/// a rejoin coin after every churn kill.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ChurnModel {
    /// Clients (re)join after a uniform delay in `[0, join_jitter_ms]`.
    pub join_jitter_ms: u64,
    /// Mean session length; `None` keeps every client for the whole run.
    pub mean_session_ms: Option<f64>,
    pub rejoin_probability: f64,
    /// Ends every client's first session at this point of the run; those
    /// clients always rejoin.
    #[serde(default)]
    pub kill_all_after_ms: Option<u64>,
}

impl ChurnModel {
    pub fn none() -> Self {
        ChurnModel { join_jitter_ms: 0, mean_session_ms: None, rejoin_probability: 0.0, kill_all_after_ms: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SwarmScenario {
    pub problem: ProblemDef,
    pub client_count: usize,
    /// Template for every client; the server URL and seed are filled in.
    pub client: ClientConfig,
    pub churn: ChurnModel,
    pub duration_limit_ms: u64,
    /// Stop once the server has recorded this many solutions.
    pub solution_target: u64,
    /// Shut the embedded server down abruptly this long into the run.
    #[serde(default)]
    pub server_kill_after_ms: Option<u64>,
    pub pool_capacity: usize,
    pub seed: u64,
}

impl SwarmScenario {
    pub fn new(problem: ProblemDef, client_count: usize, seed: u64) -> Self {
        SwarmScenario {
            client: ClientConfig::new(None, &problem, seed),
            problem,
            client_count,
            churn: ChurnModel::none(),
            duration_limit_ms: 60_000,
            solution_target: 1,
            server_kill_after_ms: None,
            pool_capacity: DEFAULT_POOL_CAPACITY,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.client_count == 0 {
            return invalid("a swarm needs at least one client");
        }
        if self.duration_limit_ms == 0 {
            return invalid("duration limit must be positive");
        }
        if !(0.0..=1.0).contains(&self.churn.rejoin_probability) {
            return invalid("rejoin probability must be a probability");
        }
        if let Some(m) = self.churn.mean_session_ms {
            if !(m > 0.0 && m.is_finite()) {
                return invalid("mean session length must be positive");
            }
        }
        self.client.validate()
    }

    /// Seed of one client session.
    pub fn session_seed(&self, client: usize, session: u64) -> u64 {
        derive_seed(self.seed, &[client as u64, session])
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClientSession {
    pub client: usize,
    pub session: u64,
    pub seed: u64,
    pub joined_at_seconds: f64,
    pub left_at_seconds: f64,
    pub killed_by_churn: bool,
    pub report: ClientReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SwarmReport {
    pub scenario: SwarmScenario,
    pub server_url: String,
    /// Solutions recorded by the server.
    pub solutions: u64,
    pub solution_times_seconds: Vec<f64>,
    pub time_to_first_solution_seconds: Option<f64>,
    /// Solved incarnations as reported by the clients themselves, including
    /// any found while the server was down.
    pub client_solutions: usize,
    pub per_client: Vec<ClientSession>,
    pub server_stats: Stats,
    pub server_killed_at_seconds: Option<f64>,
    pub wall_time_seconds: f64,
}

fn sleep_until(deadline: Instant, stop: &StopSignal) -> bool {
    while Instant::now() < deadline {
        if stop.is_stopped() {
            return false;
        }
        thread::sleep(POLL.min(deadline - Instant::now()));
    }
    !stop.is_stopped()
}

fn exponential_ms(rng: &mut Mt64, mean: f64) -> u64 {
    (-mean * (1.0 - rng.uniform()).ln()).round() as u64
}

fn client_slot(
    scenario: &SwarmScenario,
    index: usize,
    url: &str,
    objective: Arc<dyn Objective>,
    start: Instant,
    global: &StopSignal,
) -> Result<Vec<ClientSession>> {
    let churn = &scenario.churn;
    let mut rng = Mt64::new(derive_seed(scenario.seed, &[CHURN_STREAM, index as u64]));
    let jitter = |rng: &mut Mt64| Duration::from_millis(rng.below(churn.join_jitter_ms + 1));
    let mut sessions = Vec::new();
    let mut delay = jitter(&mut rng);
    for session in 0.. {
        if !sleep_until(Instant::now() + delay, global) {
            break;
        }
        let mut length = churn.mean_session_ms.map(|m| Duration::from_millis(exponential_ms(&mut rng, m)));
        let mass_kill = session == 0 && churn.kill_all_after_ms.is_some();
        if let (true, Some(at)) = (mass_kill, churn.kill_all_after_ms) {
            length = Some(Duration::from_millis(at).saturating_sub(start.elapsed()));
        }
        let mut config = scenario.client.clone();
        config.server_url = Some(url.to_string());
        config.seed = scenario.session_seed(index, session);

        let joined = Instant::now();
        let local = StopSignal::new();
        let (report, killed) = thread::scope(|s| {
            let handle = s.spawn(|| run_client(&config, objective.clone(), &local));
            let mut killed = false;
            while !handle.is_finished() {
                if global.is_stopped() {
                    break;
                }
                if length.is_some_and(|l| joined.elapsed() >= l) {
                    killed = true;
                    break;
                }
                thread::sleep(POLL);
            }
            local.stop();
            (handle.join().expect("client thread panicked"), killed)
        });
        let report = report?;
        if killed {
            tracing::info!(client = index, session, "churn: client left");
        }
        sessions.push(ClientSession {
            client: index,
            session,
            seed: config.seed,
            joined_at_seconds: joined.duration_since(start).as_secs_f64(),
            left_at_seconds: start.elapsed().as_secs_f64(),
            killed_by_churn: killed,
            report,
        });
        let rejoin = rng.bernoulli(churn.rejoin_probability) || mass_kill;
        if !killed || !rejoin {
            break;
        }
        delay = jitter(&mut rng);
    }
    Ok(sessions)
}

/// Starts an embedded pool server on a free local port, runs the scenario's
/// clients against it and collects their reports.
pub fn run_swarm(scenario: &SwarmScenario) -> Result<SwarmReport> {
    scenario.validate()?;
    let objective: Arc<dyn Objective> = Arc::new(scenario.problem.build()?);
    let server_config = ServerConfig {
        problem: scenario.problem.clone(),
        target_fitness: Some(scenario.client.island.target_fitness),
        direction: Some(scenario.client.island.direction),
        pool_capacity: scenario.pool_capacity,
        bind: "127.0.0.1:0".into(),
        rng_seed: derive_seed(scenario.seed, &[SERVER_STREAM]),
        ..ServerConfig::default()
    };
    let mut server = Some(spawn_server(&server_config)?);
    let pool = server.as_ref().unwrap().pool().clone();
    let url = server.as_ref().unwrap().url();
    let global = StopSignal::new();
    let start = Instant::now();
    let deadline = start + Duration::from_millis(scenario.duration_limit_ms);
    let mut killed_at = None;

    let slots = thread::scope(|s| {
        let handles: Vec<_> = (0..scenario.client_count)
            .map(|i| {
                let objective = objective.clone();
                let (url, global) = (&url, &global);
                s.spawn(move || client_slot(scenario, i, url, objective, start, global))
            })
            .collect();
        loop {
            let solved = pool.solution_instants().len() as u64 >= scenario.solution_target;
            if solved || Instant::now() >= deadline || handles.iter().all(|h| h.is_finished()) {
                break;
            }
            if let Some(after) = scenario.server_kill_after_ms {
                if killed_at.is_none() && start.elapsed() >= Duration::from_millis(after) {
                    if let Some(handle) = server.take() {
                        handle.shutdown();
                    }
                    killed_at = Some(start.elapsed().as_secs_f64());
                    tracing::info!("embedded server killed");
                }
            }
            thread::sleep(POLL);
        }
        global.stop();
        handles
            .into_iter()
            .map(|h| h.join().expect("client slot panicked"))
            .collect::<Result<Vec<_>>>()
    })?;
    let wall_time_seconds = start.elapsed().as_secs_f64();
    drop(server);

    let solution_times: Vec<f64> =
        pool.solution_instants().iter().map(|t| t.saturating_duration_since(start).as_secs_f64()).collect();
    let per_client: Vec<ClientSession> = slots.into_iter().flatten().collect();
    Ok(SwarmReport {
        scenario: scenario.clone(),
        server_url: url,
        solutions: solution_times.len() as u64,
        time_to_first_solution_seconds: solution_times.first().copied(),
        solution_times_seconds: solution_times,
        client_solutions: per_client.iter().map(|c| c.report.solutions_found).sum(),
        per_client,
        server_stats: pool.stats(),
        server_killed_at_seconds: killed_at,
        wall_time_seconds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_draws_have_the_right_mean() {
        let mut rng = Mt64::new(4);
        let n = 20_000;
        let mean = (0..n).map(|_| exponential_ms(&mut rng, 200.0) as f64).sum::<f64>() / n as f64;
        assert!((mean - 200.0).abs() < 6.0, "{mean}");
    }

    #[test]
    fn scenario_validation() {
        let problem = ProblemDef::Trap(crate::objective::TrapParams::classic(2));
        let mut s = SwarmScenario::new(problem, 1, 1);
        assert!(s.validate().is_ok());
        s.client_count = 0;
        assert!(s.validate().is_err());
        s.client_count = 1;
        s.churn.mean_session_ms = Some(0.0);
        assert!(s.validate().is_err());
    }
}
