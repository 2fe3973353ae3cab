//! Mock inference backend: deterministic in-flight batching engine plus a
//! streaming TCP server.

pub mod engine;
pub mod profile;
pub mod server;

pub use engine::{
    sample_output_length, ActiveRequest, BatchEngineState, EndReason, EngineEvent, EngineRequest,
};
pub use profile::ModelProfile;
pub use server::{serve, token_text, BackendConfig, BackendServer};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("duplicate request id {0:?}")]
    DuplicateId(String),
    #[error("engine has no running or queued requests")]
    EmptyEngine,
    #[error("invalid model profile: {0}")]
    InvalidProfile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
