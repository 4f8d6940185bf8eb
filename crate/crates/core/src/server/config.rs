use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::log::LogSink;
use super::pool::{PoolServer, PoolSettings, DEFAULT_POOL_CAPACITY};
use crate::error::{Error, Result};
use crate::objective::{Direction, ProblemDef, TrapParams};

/// Server configuration, loadable from TOML:
///
/// ```toml
/// bind = "0.0.0.0:8080"
/// pool_capacity = 2048
/// log_path = "pool.log"
///
/// [problem]
/// kind = "trap"
/// l = 4
/// a = 1.0
/// b = 2.0
/// z = 3
/// numBlocks = 40
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub problem: ProblemDef,
    /// Defaults to the problem's optimum.
    pub target_fitness: Option<f64>,
    pub direction: Option<Direction>,
    pub pool_capacity: usize,
    pub bind: String,
    pub log_path: Option<PathBuf>,
    pub verify_fitness: bool,
    pub rng_seed: u64,
    pub static_dir: Option<PathBuf>,
    /// Keep a copy of the log in memory (used by the harness audits).
    pub memory_log: bool,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            problem: ProblemDef::Trap(TrapParams::classic(40)),
            target_fitness: None,
            direction: None,
            pool_capacity: DEFAULT_POOL_CAPACITY,
            bind: "127.0.0.1:8080".into(),
            log_path: None,
            verify_fitness: false,
            rng_seed: 0,
            static_dir: None,
            memory_log: false,
        }
    }
}

impl ServerConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn target(&self) -> f64 {
        self.target_fitness.unwrap_or_else(|| self.problem.default_target())
    }

    pub fn resolved_direction(&self) -> Direction {
        self.direction.unwrap_or_else(|| self.problem.default_direction())
    }

    pub fn build_pool(&self) -> Result<PoolServer> {
        if self.pool_capacity == 0 {
            return Err(Error::Config("pool capacity must be positive".into()));
        }
        let problem = self.problem.build()?;
        let mut sink = match &self.log_path {
            Some(path) => LogSink::to_file(path)?,
            None => LogSink::discard(),
        };
        if self.memory_log {
            sink = sink.with_memory();
        }
        let settings = PoolSettings {
            capacity: self.pool_capacity,
            target_fitness: self.target(),
            direction: self.resolved_direction(),
            verify_fitness: self.verify_fitness,
            rng_seed: self.rng_seed,
        };
        Ok(PoolServer::new(problem, settings, sink))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_toml() {
        let cfg: ServerConfig = toml::from_str(
            r#"
            bind = "0.0.0.0:9000"
            pool_capacity = 16
            [problem]
            kind = "f15"
            dimension = 100
            groupSize = 10
            seed = 3
            "#,
        )
        .unwrap();
        assert_eq!(cfg.pool_capacity, 16);
        assert_eq!(cfg.resolved_direction(), Direction::Minimize);
        assert!(matches!(cfg.problem, ProblemDef::F15 { dimension: 100, .. }));
    }

    #[test]
    fn trap_defaults() {
        let cfg = ServerConfig::default();
        assert_eq!(cfg.target(), 80.0);
        assert_eq!(cfg.resolved_direction(), Direction::Maximize);
        assert!(toml::from_str::<ServerConfig>("bogus = 1").is_err());
    }
}
