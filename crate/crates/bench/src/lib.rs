//! Experiment runner for the `alspg` solvers: versioned TOML problem configs,
//! JSONL result records, suites with mean ± std summaries, and the
//! websocket service behind the reactive-IK playground.

pub mod config;
pub mod error;
pub mod layouts;
pub mod playground;
pub mod record;
pub mod scenario;
pub mod server;
pub mod suite;

pub use config::{ProblemConfig, ProblemKind, SolverKind};
pub use error::{BenchError, ExitStatus, ValidationError};
