//! Experiment orchestration: corpus ingestion, classifier training, topology
//! simulation, experiment runs and parameter sweeps.

pub mod config;
pub mod corpus;
pub mod experiment;
pub mod sim;
pub mod sweep;
pub mod train;

pub use config::{ExperimentConfig, SweepConfig, Topology};
pub use corpus::{ingest_corpus, CorpusBundle, Document};
pub use experiment::run_experiment;
pub use sim::{simulate, SimBackend, SimConfig, SimOutcome};
pub use sweep::run_sweep;
pub use train::{train, train_to_file, TrainReport};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("corpus has no documents for category {0}")]
    MissingCategory(usize),
    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Cluster(#[from] crate::clusterkit::ClusterError),
    #[error(transparent)]
    Engine(#[from] crate::simbackend::EngineError),
    #[error(transparent)]
    Metrics(#[from] crate::metricspipe::MetricsError),
    #[error(transparent)]
    Load(#[from] crate::loadgen::LoadError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
