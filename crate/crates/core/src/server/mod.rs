//! The single-experiment REST pool server.
//!
//! Islands `PUT` their best individual and `GET` a random one back. A put
//! that meets the target ends the experiment: the counter advances and the
//! pool empties in the same critical section.

mod config;
mod http;
pub mod log;
mod pool;

pub use config::ServerConfig;
pub use http::{router, spawn_server, spawn_with_pool, ServerHandle};
pub use pool::{timestamp, PoolEntry, PoolServer, PoolSettings, DEFAULT_POOL_CAPACITY};
