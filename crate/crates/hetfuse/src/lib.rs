//! Scenario files, Monte-Carlo harness and result writers for `hetfuse-core`.
//!
//! The `hetfuse` binary wraps [`commands`]; everything is also usable as a
//! library, which the acceptance tests do.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod pipeline;
pub mod rng;
pub mod sim;

pub use config::Config;
pub use error::HarnessError;
pub use pipeline::Pipeline;
pub use sim::{Experiment, MonteCarloResult, PipelineSummary};
