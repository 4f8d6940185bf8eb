//! Pool-based island-model evolutionary computation.
//!
//! Autonomous islands evolve locally and trade individuals through a central
//! chromosome pool served over HTTP. The crate contains the benchmark
//! objectives, the EA engine, the pool server, a headless volunteer client
//! and the experiment harness behind the `poolevo` binary.

pub mod client;
pub mod ea;
pub mod error;
pub mod genome;
pub mod harness;
pub mod objective;
pub mod rng;
pub mod server;
pub mod wire;

pub use error::{Error, Result};
