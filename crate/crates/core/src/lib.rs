pub mod agents;
pub mod cli;
pub mod config;
pub mod error;
pub mod hanoi;
pub mod metrics;
pub mod orchestrator;
pub mod parser;
pub mod prompts;
pub mod puzzle;
pub mod river;
pub mod solvers;

pub use error::{ConfigError, MoveError};
