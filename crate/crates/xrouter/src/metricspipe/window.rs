//! System throughput over fixed time windows.

use serde::{Deserialize, Serialize};

use crate::loadgen::TokenEventLog;

use super::MetricsError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSeries {
    pub window_s: f64,
    /// tokens counted per window, all sessions pooled
    pub counts: Vec<u64>,
    /// counts divided by the window length, tokens/s
    pub series: Vec<f64>,
    pub mean: f64,
}

/// Count all token events into K = ceil(span/window) windows anchored at the
/// earliest send stamp. The span ends at the last token stamp; a token landing
/// exactly on the span end (only possible when the span divides evenly) is
/// kept in the last window so no token is ever dropped.
pub fn windowed_throughput(
    log: &TokenEventLog,
    window_s: f64,
) -> Result<WindowSeries, MetricsError> {
    assert!(window_s > 0.0, "window must be positive");
    let t0 = log.records.iter().map(|r| r.t_send_ns).min().ok_or(MetricsError::EmptyLog)?;
    let t_last = log
        .records
        .iter()
        .filter_map(|r| r.token_stamps_ns.last().copied())
        .max()
        .ok_or(MetricsError::EmptyLog)?;

    let window_ns = (window_s * 1e9).round() as u64;
    let span_ns = t_last.saturating_sub(t0);
    let k = (span_ns.div_ceil(window_ns)).max(1) as usize;

    let mut counts = vec![0u64; k];
    for r in &log.records {
        for &t in &r.token_stamps_ns {
            let idx = ((t.saturating_sub(t0)) / window_ns) as usize;
            counts[idx.min(k - 1)] += 1;
        }
    }
    let series: Vec<f64> = counts.iter().map(|&c| c as f64 / window_s).collect();
    let mean = series.iter().sum::<f64>() / k as f64;
    Ok(WindowSeries { window_s, counts, series, mean })
}
