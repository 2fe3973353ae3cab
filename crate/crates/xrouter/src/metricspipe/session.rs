//! Per-session metrics and order statistics.

use crate::loadgen::SessionRecord;

use super::MetricsError;

#[derive(Debug, Clone, PartialEq)]
pub struct SessionMetrics {
    pub request_id: String,
    pub ttft_s: f64,
    /// absent for single-token responses
    pub tpot_s: Option<f64>,
    pub response_time_s: f64,
    pub n_tokens: u64,
}

impl SessionMetrics {
    /// Compute all metrics of one completed session. Error sessions and
    /// sessions without tokens are not representable here; filter first.
    pub fn from_record(r: &SessionRecord) -> Result<SessionMetrics, MetricsError> {
        Ok(SessionMetrics {
            request_id: r.request_id.clone(),
            ttft_s: ttft(r)?,
            tpot_s: tpot(r).ok(),
            response_time_s: (r.t_end_ns.saturating_sub(r.t_send_ns)) as f64 / 1e9,
            n_tokens: r.token_stamps_ns.len() as u64,
        })
    }
}

/// Seconds from request send to the first received token.
pub fn ttft(r: &SessionRecord) -> Result<f64, MetricsError> {
    let first = *r.token_stamps_ns.first().ok_or(MetricsError::NoTokens)?;
    Ok((first.saturating_sub(r.t_send_ns)) as f64 / 1e9)
}

/// Mean gap between consecutive tokens, in seconds. Algebraically
/// (last - first)/(n - 1).
pub fn tpot(r: &SessionRecord) -> Result<f64, MetricsError> {
    let n = r.token_stamps_ns.len();
    if n < 2 {
        return Err(MetricsError::TooFewTokens);
    }
    let first = r.token_stamps_ns[0];
    let last = r.token_stamps_ns[n - 1];
    Ok((last - first) as f64 / (n as f64 - 1.0) / 1e9)
}

/// Response tokens per second over the whole session.
pub fn user_throughput(r: &SessionRecord) -> Result<f64, MetricsError> {
    if r.t_end_ns <= r.t_send_ns {
        return Err(MetricsError::ZeroDuration);
    }
    Ok(r.token_stamps_ns.len() as f64 / ((r.t_end_ns - r.t_send_ns) as f64 / 1e9))
}

/// Nearest-rank percentile: sort ascending, take index ceil(p/100 * n) - 1.
pub fn percentile(values: &[f64], p: f64) -> Result<f64, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    assert!(p > 0.0 && p <= 100.0, "percentile out of range: {p}");
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite metric value"));
    let rank = (p / 100.0 * sorted.len() as f64).ceil() as usize;
    Ok(sorted[rank - 1])
}

/// Two-pass mean and population standard deviation. Values are sorted before
/// summation so the result is independent of input order.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite metric value"));
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let var = sorted.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(send: u64, stamps: Vec<u64>, end: u64) -> SessionRecord {
        SessionRecord {
            user_id: 0,
            request_id: "r".into(),
            category: 0,
            input_tokens: 1,
            t_send_ns: send,
            token_stamps_ns: stamps,
            t_end_ns: end,
            end_reason: "eos".into(),
            rx_crc32: 0,
            rx_frames: 0,
        }
    }

    #[test]
    fn ttft_subtraction() {
        let r = record(1_000_000_000, vec![1_450_000_000], 1_450_000_000);
        assert_eq!(ttft(&r).unwrap(), 0.45);
    }

    #[test]
    fn ttft_degenerate_zero() {
        let r = record(5, vec![5], 5);
        assert_eq!(ttft(&r).unwrap(), 0.0);
    }

    #[test]
    fn ttft_requires_tokens() {
        let r = record(5, vec![], 9);
        assert!(matches!(ttft(&r), Err(MetricsError::NoTokens)));
    }

    #[test]
    fn tpot_mean_gap() {
        // stamps at 1.0, 1.1, 1.3 s
        let r = record(0, vec![1_000_000_000, 1_100_000_000, 1_300_000_000], 1_300_000_000);
        assert!((tpot(&r).unwrap() - 0.15).abs() < 1e-12);
    }

    #[test]
    fn tpot_constant_gap_exact() {
        let g = 7_000_000u64;
        let stamps: Vec<u64> = (0..50).map(|i| 100 + i * g).collect();
        let r = record(0, stamps, 100 + 49 * g);
        assert!((tpot(&r).unwrap() - g as f64 / 1e9).abs() < 1e-15);
    }

    #[test]
    fn tpot_needs_two() {
        let r = record(0, vec![10], 10);
        assert!(matches!(tpot(&r), Err(MetricsError::TooFewTokens)));
    }

    #[test]
    fn tpot_matches_pairwise_diff_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(6);
        for _ in 0..200 {
            let n = rng.gen_range(2..200);
            let mut stamps = vec![0u64; n];
            let mut t = rng.gen_range(0..1_000_000u64);
            for s in stamps.iter_mut() {
                t += rng.gen_range(1..5_000_000);
                *s = t;
            }
            let r = record(0, stamps.clone(), t);
            let diffs: f64 = stamps.windows(2).map(|w| (w[1] - w[0]) as f64 / 1e9).sum();
            let oracle = diffs / (n as f64 - 1.0);
            assert!((tpot(&r).unwrap() - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn throughput_division() {
        let r = record(0, (1..=200).map(|i| i * 100_000_000).collect(), 20_000_000_000);
        assert_eq!(user_throughput(&r).unwrap(), 10.0);
    }

    #[test]
    fn throughput_zero_duration() {
        let r = record(10, vec![10], 10);
        assert!(matches!(user_throughput(&r), Err(MetricsError::ZeroDuration)));
    }

    #[test]
    fn percentile_nearest_rank() {
        let values: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert_eq!(percentile(&values, 99.0).unwrap(), 99.0);
        assert_eq!(percentile(&values, 100.0).unwrap(), 100.0);
        assert_eq!(percentile(&values, 50.0).unwrap(), 50.0);
        assert_eq!(percentile(&[7.5], 1.0).unwrap(), 7.5);
        assert!(matches!(percentile(&[], 50.0), Err(MetricsError::EmptyInput)));
    }

    #[test]
    fn percentile_matches_sort_index_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(7);
        for _ in 0..100 {
            let n = rng.gen_range(1..500);
            let values: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 100.0).collect();
            let p = rng.gen_range(1..=100) as f64;
            let mut sorted = values.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let idx = ((p / 100.0 * n as f64).ceil() as usize) - 1;
            assert_eq!(percentile(&values, p).unwrap(), sorted[idx]);
        }
    }

    #[test]
    fn mean_std_two_pass() {
        let (m, s) = mean_std(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert_eq!(m, 5.0);
        assert_eq!(s, 2.0);
        assert_eq!(mean_std(&[]), (0.0, 0.0));
    }
}
