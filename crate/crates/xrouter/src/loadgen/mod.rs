//! Closed-loop concurrent user simulator.
//!
//! Each simulated user runs send-wait-receive sessions against a target
//! endpoint and records per-token receive timestamps. The resulting
//! [`TokenEventLog`] is the sole input to the metrics pipeline.

pub mod log;
pub mod runner;
pub mod workload;

pub use log::{RunMeta, SessionRecord, TokenEventLog};
pub use runner::{run_load, LoadConfig};
pub use workload::{
    build_prompt, sample_category, sample_input_length, CategoryDistribution,
    InputLengthDistribution, WorkloadSpec,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("invalid workload spec: {0}")]
    InvalidSpec(String),
    #[error("category {0} has no corpus words")]
    EmptyCategory(usize),
    #[error("more than half of all sessions failed ({failed}/{total})")]
    TooManyFailures { failed: usize, total: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
