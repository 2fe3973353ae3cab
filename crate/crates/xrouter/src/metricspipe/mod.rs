//! Offline metrics: turns token event logs into user-centric (TTFT, TPOT,
//! per-user throughput) and system-centric (p99 response time, windowed
//! throughput) statistics, plus JSON/CSV summaries and SVG charts.

pub mod session;
pub mod summary;
pub mod svg;
pub mod window;

pub use session::{mean_std, percentile, tpot, ttft, user_throughput, SessionMetrics};
pub use summary::{summarize, summarize_log, MetricsSummary, QuantileSet, RunSummary};
pub use window::{windowed_throughput, WindowSeries};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("session has no token stamps")]
    NoTokens,
    #[error("tpot needs at least two token stamps")]
    TooFewTokens,
    #[error("session duration is zero")]
    ZeroDuration,
    #[error("empty input")]
    EmptyInput,
    #[error("log contains no token events")]
    EmptyLog,
    #[error("no usable runs")]
    NoRuns,
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
