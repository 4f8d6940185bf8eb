use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use ureq::Agent;
use uuid::Uuid;

use crate::ea::{EmitOutcome, ExchangeContext, HookError, Individual, MigrationHooks};
use crate::wire::{self, PutAck, PutRequest, RandomMigrant};

/// Exponential backoff after a failed request. Exchanges that fall inside
/// the backoff window are skipped without touching the network; the solution
/// report is always attempted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RetryPolicy {
    pub initial_backoff_ms: u64,
    pub factor: f64,
    pub max_backoff_ms: u64,
    /// Consecutive failures after which the island stops trying for the rest
    /// of its incarnation. `None` retries forever.
    #[serde(default)]
    pub max_attempts: Option<u32>,
    pub request_timeout_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            initial_backoff_ms: 500,
            factor: 2.0,
            max_backoff_ms: 30_000,
            max_attempts: None,
            request_timeout_ms: 5_000,
        }
    }
}

impl RetryPolicy {
    pub fn validate(&self) -> crate::Result<()> {
        if self.initial_backoff_ms == 0 || self.factor < 1.0 || self.max_backoff_ms < self.initial_backoff_ms {
            return Err(crate::Error::InvalidArgument(
                "retry backoff must be positive and non-decreasing".into(),
            ));
        }
        Ok(())
    }
}

/// Request accounting shared by all islands of a client.
#[derive(Debug, Default)]
pub struct ExchangeCounters {
    pub requests_sent: AtomicU64,
    pub request_failures: AtomicU64,
    pub puts: AtomicU64,
    pub gets: AtomicU64,
    pub migrants: AtomicU64,
    pub skipped: AtomicU64,
    pub solutions_acked: AtomicU64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExchangeStats {
    pub requests_sent: u64,
    pub request_failures: u64,
    pub puts: u64,
    pub gets: u64,
    pub migrants: u64,
    pub skipped: u64,
    pub solutions_acked: u64,
}

impl ExchangeCounters {
    pub fn snapshot(&self) -> ExchangeStats {
        let l = |a: &AtomicU64| a.load(Ordering::Relaxed);
        ExchangeStats {
            requests_sent: l(&self.requests_sent),
            request_failures: l(&self.request_failures),
            puts: l(&self.puts),
            gets: l(&self.gets),
            migrants: l(&self.migrants),
            skipped: l(&self.skipped),
            solutions_acked: l(&self.solutions_acked),
        }
    }
}

fn bump(a: &AtomicU64) {
    a.fetch_add(1, Ordering::Relaxed);
}

pub fn http_agent(policy: &RetryPolicy) -> Agent {
    Agent::config_builder()
        .timeout_global(Some(Duration::from_millis(policy.request_timeout_ms)))
        .http_status_as_error(false)
        .build()
        .into()
}

/// Result of one migration exchange.
#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeResult {
    pub restart: bool,
    pub solved: bool,
    pub migrant: Option<Individual>,
}

/// Migration hooks for one island incarnation, talking to the pool server
/// over HTTP. Remembers the experiment id from its first acknowledgement and
/// asks for a restart when a later one differs.
pub struct HttpExchanger {
    agent: Agent,
    base_url: String,
    policy: RetryPolicy,
    counters: Arc<ExchangeCounters>,
    experiment_id: Option<u64>,
    backoff: Duration,
    retry_at: Option<Instant>,
    consecutive_failures: u32,
    last_ack: Option<PutAck>,
}

impl HttpExchanger {
    pub fn new(agent: Agent, base_url: &str, policy: RetryPolicy, counters: Arc<ExchangeCounters>) -> Self {
        let backoff = Duration::from_millis(policy.initial_backoff_ms);
        HttpExchanger {
            agent,
            base_url: base_url.trim_end_matches('/').to_string(),
            policy,
            counters,
            experiment_id: None,
            backoff,
            retry_at: None,
            consecutive_failures: 0,
            last_ack: None,
        }
    }

    pub fn experiment_id(&self) -> Option<u64> {
        self.experiment_id
    }

    pub fn last_ack(&self) -> Option<PutAck> {
        self.last_ack
    }

    /// PUT the best individual, then GET a random migrant unless a restart
    /// is due. Network failures yield an empty result, never an error.
    pub fn exchange(&mut self, ctx: &ExchangeContext<'_>) -> ExchangeResult {
        let mut result = ExchangeResult { restart: false, solved: false, migrant: None };
        match self.emit_best(ctx) {
            Ok(EmitOutcome::Restart) => {
                result.restart = true;
                return result;
            }
            Ok(EmitOutcome::Solved) => {
                result.solved = true;
                return result;
            }
            Ok(EmitOutcome::Continue) => {}
            Err(_) => return result,
        }
        result.migrant = self.request_migrant().ok().flatten();
        result
    }

    fn gave_up(&self) -> bool {
        self.policy.max_attempts.is_some_and(|max| self.consecutive_failures >= max)
    }

    fn in_backoff(&self) -> bool {
        self.gave_up() || self.retry_at.is_some_and(|t| Instant::now() < t)
    }

    fn succeeded(&mut self) {
        self.consecutive_failures = 0;
        self.backoff = Duration::from_millis(self.policy.initial_backoff_ms);
        self.retry_at = None;
    }

    fn failed(&mut self, what: &str, err: String) -> HookError {
        bump(&self.counters.request_failures);
        self.consecutive_failures = self.consecutive_failures.saturating_add(1);
        self.retry_at = Some(Instant::now() + self.backoff);
        let next = self.backoff.as_secs_f64() * self.policy.factor;
        self.backoff = Duration::from_secs_f64(next.min(self.policy.max_backoff_ms as f64 / 1000.0));
        tracing::warn!(request = what, error = %err, retry_in_ms = self.backoff.as_millis() as u64, "pool request failed");
        HookError::Unavailable(err)
    }

    fn put(&mut self, uuid: Uuid, best: &Individual, generation: u64) -> Result<PutAck, HookError> {
        let fitness = best.fitness.ok_or_else(|| HookError::Protocol("best individual is unevaluated".into()))?;
        let body = serde_json::to_string(&PutRequest { uuid, genome: best.genome.clone(), fitness, generation })
            .map_err(|e| HookError::Protocol(e.to_string()))?;
        bump(&self.counters.requests_sent);
        let url = format!("{}{}", self.base_url, wire::PUT_POOL);
        let response = self.agent.put(&url).header("Content-Type", "application/json").send(body);
        let mut response = match response {
            Ok(r) => r,
            Err(e) => return Err(self.failed("put", e.to_string())),
        };
        let status = response.status().as_u16();
        let text = match response.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e) => return Err(self.failed("put", e.to_string())),
        };
        if status != 200 {
            return Err(self.failed("put", format!("status {status}: {text}")));
        }
        let ack: PutAck = serde_json::from_str(&text).map_err(|e| self.failed("put", e.to_string()))?;
        self.succeeded();
        bump(&self.counters.puts);
        self.last_ack = Some(ack);
        Ok(ack)
    }

    fn get(&mut self) -> Result<Option<Individual>, HookError> {
        bump(&self.counters.requests_sent);
        let url = format!("{}{}", self.base_url, wire::GET_RANDOM);
        let mut response = match self.agent.get(&url).call() {
            Ok(r) => r,
            Err(e) => return Err(self.failed("get", e.to_string())),
        };
        let status = response.status().as_u16();
        let text = match response.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e) => return Err(self.failed("get", e.to_string())),
        };
        match status {
            200 => {
                let m: RandomMigrant = serde_json::from_str(&text).map_err(|e| self.failed("get", e.to_string()))?;
                self.succeeded();
                bump(&self.counters.gets);
                bump(&self.counters.migrants);
                Ok(Some(Individual::evaluated(m.genome, m.fitness)))
            }
            404 => {
                self.succeeded();
                bump(&self.counters.gets);
                Ok(None)
            }
            other => Err(self.failed("get", format!("status {other}: {text}"))),
        }
    }
}

impl MigrationHooks for HttpExchanger {
    fn emit_best(&mut self, ctx: &ExchangeContext<'_>) -> Result<EmitOutcome, HookError> {
        if !ctx.solution && self.in_backoff() {
            bump(&self.counters.skipped);
            return Err(HookError::Backoff);
        }
        let ack = self.put(ctx.uuid, ctx.best, ctx.generation)?;
        if !ack.accepted {
            return Err(HookError::Protocol("server rejected the chromosome".into()));
        }
        if ctx.solution {
            if ack.solved {
                bump(&self.counters.solutions_acked);
            }
            return Ok(EmitOutcome::Continue);
        }
        if ack.solved {
            bump(&self.counters.solutions_acked);
            return Ok(EmitOutcome::Solved);
        }
        let known = *self.experiment_id.get_or_insert(ack.experiment_id);
        if ack.experiment_id != known {
            tracing::info!(island = %ctx.uuid, from = known, to = ack.experiment_id, "experiment changed, restarting");
            return Ok(EmitOutcome::Restart);
        }
        Ok(EmitOutcome::Continue)
    }

    fn request_migrant(&mut self) -> Result<Option<Individual>, HookError> {
        if self.in_backoff() {
            bump(&self.counters.skipped);
            return Err(HookError::Backoff);
        }
        self.get()
    }
}
