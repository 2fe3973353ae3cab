//! Prompt classification pipeline: preprocess → TF-IDF → truncated SVD →
//! standardize → k-means.
//!
//! Training is deterministic for a fixed (corpus, k, seed) triple and the
//! trained [`ClusterPipeline`] is immutable, so it can be shared freely
//! between any number of concurrent classify calls.

mod artifact;
mod kmeans;
mod pipeline;
mod preprocess;
mod stopwords;
mod svd;
mod tfidf;

pub use artifact::{pipeline_load, pipeline_save, ARTIFACT_MAGIC, ARTIFACT_VERSION};
pub use kmeans::{assign, kmeans_fit, KmeansFit};
pub use pipeline::{ClusterPipeline, Scaler, TrainParams};
pub use preprocess::{preprocess, NUM_TOKEN};
pub use stopwords::STOPWORDS;
pub use svd::{svd_fit, Projection};
pub use tfidf::{tfidf_fit, tfidf_transform, Vectorizer};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("corpus contains no documents")]
    EmptyCorpus,
    #[error("k-means needs at least k points, got {n} points for k={k}")]
    TooFewPoints { n: usize, k: usize },
    #[error("artifact version {found} does not match expected {expected}")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("artifact corrupt: {0}")]
    CorruptFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
