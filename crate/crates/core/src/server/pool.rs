use std::collections::VecDeque;
use std::sync::{Mutex, MutexGuard};
use std::time::Instant;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use super::log::{LogEvent, LogRecord, LogSink};
use crate::genome::Genome;
use crate::objective::{Direction, Objective, Problem};
use crate::rng::Mt64;
use crate::wire::{PutAck, PutRequest, Stats};

/// Default bound on pool length; the oldest entry is evicted beyond it.
pub const DEFAULT_POOL_CAPACITY: usize = 2048;

pub fn timestamp(t: DateTime<Utc>) -> String {
    t.format("%Y-%m-%dT%H:%M:%S%.3fZ").to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PoolEntry {
    pub id: u64,
    pub uuid: Uuid,
    pub genome: Genome,
    pub fitness: f64,
    pub generation: u64,
    pub received_at: String,
}

#[derive(Debug, Clone)]
pub struct PoolSettings {
    pub capacity: usize,
    pub target_fitness: f64,
    pub direction: Direction,
    /// Re-evaluate every submitted genome and reject mismatched fitness.
    pub verify_fitness: bool,
    pub rng_seed: u64,
}

struct Experiment {
    id: u64,
    pool: VecDeque<PoolEntry>,
    started_at: DateTime<Utc>,
}

impl Experiment {
    fn new(id: u64) -> Self {
        Experiment { id, pool: VecDeque::new(), started_at: Utc::now() }
    }
}

struct Inner {
    experiment: Experiment,
    next_entry_id: u64,
    seq: u64,
    puts: u64,
    gets: u64,
    solutions: u64,
    rejected: u64,
    rng: Mt64,
    log: LogSink,
    solution_instants: Vec<Instant>,
}

impl Inner {
    fn log(&mut self, event: LogEvent) {
        self.seq += 1;
        let record = LogRecord {
            seq: self.seq,
            timestamp: timestamp(Utc::now()),
            experiment_id: self.experiment.id,
            event,
        };
        self.log.append(record);
    }

    fn reject(&mut self, reason: String) {
        self.rejected += 1;
        self.log(LogEvent::ClientError { reason });
    }

    fn next_experiment(&mut self) -> u64 {
        let id = self.experiment.id + 1;
        self.experiment = Experiment::new(id);
        id
    }
}

/// The single-experiment chromosome pool. Every mutation happens under one
/// lock, together with its log record, so the log is a serial history.
pub struct PoolServer {
    problem: Problem,
    settings: PoolSettings,
    booted: Instant,
    inner: Mutex<Inner>,
}

impl PoolServer {
    pub fn new(problem: Problem, settings: PoolSettings, log: LogSink) -> Self {
        let inner = Inner {
            experiment: Experiment::new(1),
            next_entry_id: 1,
            seq: 0,
            puts: 0,
            gets: 0,
            solutions: 0,
            rejected: 0,
            rng: Mt64::new(settings.rng_seed),
            log,
            solution_instants: Vec::new(),
        };
        PoolServer { problem, settings, booted: Instant::now(), inner: Mutex::new(inner) }
    }

    pub fn settings(&self) -> &PoolSettings {
        &self.settings
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
    }

    /// Handles a raw `PUT /v1/pool` body. `Err` carries the 400 message for
    /// a body that does not parse.
    pub fn put_json(&self, body: &[u8]) -> Result<PutAck, String> {
        match serde_json::from_slice::<PutRequest>(body) {
            Ok(req) => Ok(self.put(req)),
            Err(e) => {
                let reason = format!("malformed body: {e}");
                self.lock().reject(reason.clone());
                Err(reason)
            }
        }
    }

    pub fn put(&self, req: PutRequest) -> PutAck {
        let verdict = self.validate(&req);
        let mut inner = self.lock();
        if let Err(reason) = verdict {
            inner.reject(reason);
            return PutAck { accepted: false, solved: false, experiment_id: inner.experiment.id };
        }

        let entry_id = inner.next_entry_id;
        inner.next_entry_id += 1;
        let evicted = if inner.experiment.pool.len() >= self.settings.capacity {
            inner.experiment.pool.pop_front().map(|e| e.id)
        } else {
            None
        };
        let entry = PoolEntry {
            id: entry_id,
            uuid: req.uuid,
            genome: req.genome,
            fitness: req.fitness,
            generation: req.generation,
            received_at: timestamp(Utc::now()),
        };
        inner.log(LogEvent::Put {
            entry_id,
            uuid: entry.uuid,
            genome: entry.genome.clone(),
            fitness: entry.fitness,
            generation: entry.generation,
            evicted,
        });
        inner.puts += 1;

        let solved = self.settings.direction.meets(entry.fitness, self.settings.target_fitness);
        if solved {
            let new_id = inner.experiment.id + 1;
            inner.log(LogEvent::Solved {
                entry_id,
                uuid: entry.uuid,
                genome: entry.genome,
                fitness: entry.fitness,
                new_experiment_id: new_id,
            });
            inner.solutions += 1;
            inner.solution_instants.push(Instant::now());
            inner.next_experiment();
            tracing::info!(experiment = new_id - 1, island = %req.uuid, "solution received");
        } else {
            inner.experiment.pool.push_back(entry);
        }
        PutAck { accepted: true, solved, experiment_id: inner.experiment.id }
    }

    fn validate(&self, req: &PutRequest) -> Result<(), String> {
        if !req.fitness.is_finite() {
            return Err("fitness is not finite".into());
        }
        self.problem.domain().check(&req.genome).map_err(|e| e.to_string())?;
        if self.settings.verify_fitness {
            let actual = self.problem.evaluate_unchecked(&req.genome);
            if (actual - req.fitness).abs() > 1e-9 * (1.0 + actual.abs()) {
                return Err(format!("claimed fitness {} but genome evaluates to {actual}", req.fitness));
            }
        }
        Ok(())
    }

    /// A uniformly chosen entry, left in the pool; `None` when empty.
    pub fn get_random(&self) -> Option<PoolEntry> {
        let mut inner = self.lock();
        let len = inner.experiment.pool.len();
        let picked = (len > 0).then(|| {
            let i = inner.rng.below_usize(len);
            inner.experiment.pool[i].clone()
        });
        inner.gets += 1;
        inner.log(LogEvent::Get { entry_id: picked.as_ref().map(|e| e.id) });
        picked
    }

    pub fn stats(&self) -> Stats {
        let inner = self.lock();
        let direction = self.settings.direction;
        let best_fitness = inner
            .experiment
            .pool
            .iter()
            .map(|e| e.fitness)
            .reduce(|a, b| if direction.better(b, a) { b } else { a });
        Stats {
            experiment_id: inner.experiment.id,
            pool_size: inner.experiment.pool.len(),
            best_fitness,
            puts: inner.puts,
            gets: inner.gets,
            solutions: inner.solutions,
            rejected: inner.rejected,
            started_at: timestamp(inner.experiment.started_at),
            uptime: self.booted.elapsed().as_secs_f64(),
        }
    }

    /// Administrative end of the current experiment.
    pub fn reset(&self) -> u64 {
        let mut inner = self.lock();
        let new_id = inner.experiment.id + 1;
        inner.log(LogEvent::Reset { administrative: true, new_experiment_id: new_id });
        inner.next_experiment()
    }

    /// Monotonic instants at which solutions arrived.
    pub fn solution_instants(&self) -> Vec<Instant> {
        self.lock().solution_instants.clone()
    }

    /// Copy of the in-memory log, when the sink keeps one.
    pub fn log_records(&self) -> Option<Vec<LogRecord>> {
        self.lock().log.records().map(<[LogRecord]>::to_vec)
    }

    /// Current pool contents, oldest first.
    pub fn entries(&self) -> Vec<PoolEntry> {
        self.lock().experiment.pool.iter().cloned().collect()
    }
}
