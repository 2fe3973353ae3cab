//! Run-level aggregation and report files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::loadgen::{SessionRecord, TokenEventLog};

use super::session::{mean_std, percentile, tpot, ttft, user_throughput};
use super::svg::{self, ChartSeries};
use super::window::{windowed_throughput, WindowSeries};
use super::MetricsError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileSet {
    pub min: f64,
    pub p25: f64,
    pub median: f64,
    pub p75: f64,
    pub max: f64,
}

impl QuantileSet {
    pub fn from_values(values: &[f64]) -> Result<QuantileSet, MetricsError> {
        if values.is_empty() {
            return Err(MetricsError::EmptyInput);
        }
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Ok(QuantileSet {
            min,
            p25: percentile(values, 25.0)?,
            median: percentile(values, 50.0)?,
            p75: percentile(values, 75.0)?,
            max,
        })
    }

    pub fn ordered(&self) -> bool {
        self.min <= self.p25 && self.p25 <= self.median && self.median <= self.p75 && self.p75 <= self.max
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemThroughput {
    pub window_s: f64,
    pub series: Vec<f64>,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub concurrency: usize,
    pub scenario: String,
    pub ttft: QuantileSet,
    pub tpot: QuantileSet,
    pub user_throughput: MeanStd,
    pub p99_response_s: f64,
    pub system_throughput: SystemThroughput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub runs: Vec<RunSummary>,
}

fn usable(r: &SessionRecord) -> bool {
    r.end_reason != "error" && !r.token_stamps_ns.is_empty() && r.t_end_ns > r.t_send_ns
}

/// Aggregate one run. Error sessions are excluded from user metrics; token
/// counting for system throughput still pools every received token.
pub fn summarize_log(log: &TokenEventLog, window_s: f64) -> Result<RunSummary, MetricsError> {
    let sessions: Vec<&SessionRecord> = log.records.iter().filter(|r| usable(r)).collect();
    if sessions.is_empty() {
        return Err(MetricsError::EmptyLog);
    }

    let ttfts: Vec<f64> = sessions.iter().map(|r| ttft(r)).collect::<Result<_, _>>()?;
    let tpots: Vec<f64> = sessions.iter().filter_map(|r| tpot(r).ok()).collect();
    let throughputs: Vec<f64> =
        sessions.iter().map(|r| user_throughput(r)).collect::<Result<_, _>>()?;
    let responses: Vec<f64> =
        sessions.iter().map(|r| (r.t_end_ns - r.t_send_ns) as f64 / 1e9).collect();

    let tpot_set = if tpots.is_empty() {
        // every response was a single token; report zeros rather than fail
        QuantileSet { min: 0.0, p25: 0.0, median: 0.0, p75: 0.0, max: 0.0 }
    } else {
        QuantileSet::from_values(&tpots)?
    };
    let (tp_mean, tp_std) = mean_std(&throughputs);
    let WindowSeries { window_s, series, mean, .. } = windowed_throughput(log, window_s)?;

    Ok(RunSummary {
        concurrency: log.meta.concurrency,
        scenario: log.meta.scenario.clone(),
        ttft: QuantileSet::from_values(&ttfts)?,
        tpot: tpot_set,
        user_throughput: MeanStd { mean: tp_mean, std: tp_std },
        p99_response_s: percentile(&responses, 99.0)?,
        system_throughput: SystemThroughput { window_s, series, mean },
    })
}

/// Summarize a set of run directories into `summary.json`, `summary.csv` and
/// SVG charts under `out_dir`. Unreadable runs are skipped and reported in
/// the returned warning list; zero usable runs is an error.
pub fn summarize(
    run_dirs: &[std::path::PathBuf],
    window_s: f64,
    out_dir: &Path,
) -> Result<(MetricsSummary, Vec<String>), MetricsError> {
    let mut runs = Vec::new();
    let mut warnings = Vec::new();
    for dir in run_dirs {
        let log = match TokenEventLog::load_dir(dir) {
            Ok(log) => log,
            Err(e) => {
                warnings.push(format!("{}: {e}", dir.display()));
                continue;
            }
        };
        match summarize_log(&log, window_s) {
            Ok(run) => runs.push(run),
            Err(e) => warnings.push(format!("{}: {e}", dir.display())),
        }
    }
    if runs.is_empty() {
        return Err(MetricsError::NoRuns);
    }
    runs.sort_by(|a, b| (&a.scenario, a.concurrency).cmp(&(&b.scenario, b.concurrency)));
    let summary = MetricsSummary { runs };
    write_report(&summary, out_dir)?;
    Ok((summary, warnings))
}

pub fn write_report(summary: &MetricsSummary, out_dir: &Path) -> Result<(), MetricsError> {
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(
        out_dir.join("summary.json"),
        serde_json::to_string_pretty(summary).expect("summary serialization"),
    )?;
    std::fs::write(out_dir.join("summary.csv"), summary_csv(summary))?;
    write_charts(summary, out_dir)?;
    Ok(())
}

pub fn summary_csv(summary: &MetricsSummary) -> String {
    let mut out = String::from(
        "concurrency,scenario,ttft_min,ttft_p25,ttft_median,ttft_p75,ttft_max,\
         tpot_min,tpot_p25,tpot_median,tpot_p75,tpot_max,\
         user_throughput_mean,user_throughput_std,p99_response_s,\
         system_throughput_mean,window_s\n",
    );
    for r in &summary.runs {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.concurrency,
            r.scenario,
            r.ttft.min,
            r.ttft.p25,
            r.ttft.median,
            r.ttft.p75,
            r.ttft.max,
            r.tpot.min,
            r.tpot.p25,
            r.tpot.median,
            r.tpot.p75,
            r.tpot.max,
            r.user_throughput.mean,
            r.user_throughput.std,
            r.p99_response_s,
            r.system_throughput.mean,
            r.system_throughput.window_s,
        ));
    }
    out
}

fn write_charts(summary: &MetricsSummary, out_dir: &Path) -> Result<(), MetricsError> {
    let scenarios: Vec<String> = {
        let mut s: Vec<String> = summary.runs.iter().map(|r| r.scenario.clone()).collect();
        s.dedup();
        s
    };

    let per_scenario = |f: &dyn Fn(&RunSummary) -> f64| -> Vec<ChartSeries> {
        scenarios
            .iter()
            .map(|sc| ChartSeries {
                name: sc.clone(),
                points: summary
                    .runs
                    .iter()
                    .filter(|r| &r.scenario == sc)
                    .map(|r| (r.concurrency as f64, f(r)))
                    .collect(),
            })
            .collect()
    };

    let charts: [(&str, &str, Vec<ChartSeries>); 4] = [
        ("ttft.svg", "Median TTFT vs concurrency (s)", per_scenario(&|r| r.ttft.median)),
        ("tpot.svg", "Median TPOT vs concurrency (s)", per_scenario(&|r| r.tpot.median)),
        (
            "user_throughput.svg",
            "Mean user throughput vs concurrency (tokens/s)",
            per_scenario(&|r| r.user_throughput.mean),
        ),
        (
            "p99_response.svg",
            "p99 response time vs concurrency (s)",
            per_scenario(&|r| r.p99_response_s),
        ),
    ];
    for (file, title, series) in charts {
        let chart = svg::line_chart(title, "concurrent users", "value", &series, None);
        std::fs::write(out_dir.join(file), chart)?;
    }

    // per-run throughput-over-time series with the mean marked
    for r in &summary.runs {
        let series = vec![ChartSeries {
            name: format!("{} N={}", r.scenario, r.concurrency),
            points: r
                .system_throughput
                .series
                .iter()
                .enumerate()
                .map(|(i, v)| (i as f64 * r.system_throughput.window_s, *v))
                .collect(),
        }];
        let chart = svg::line_chart(
            &format!("System throughput over time, {} N={}", r.scenario, r.concurrency),
            "time (s)",
            "tokens/s",
            &series,
            Some(r.system_throughput.mean),
        );
        std::fs::write(
            out_dir.join(format!("throughput_{}_{}.svg", r.scenario, r.concurrency)),
            chart,
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loadgen::{RunMeta, WorkloadSpec};

    fn synthetic_log(concurrency: usize, seed: u64) -> TokenEventLog {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        let mut records = Vec::new();
        for u in 0..concurrency {
            let send = rng.gen_range(0..1_000_000_000u64);
            let n = rng.gen_range(2..100);
            let mut t = send + rng.gen_range(1..200_000_000);
            let mut stamps = Vec::new();
            for _ in 0..n {
                stamps.push(t);
                t += rng.gen_range(1..50_000_000);
            }
            let end = *stamps.last().unwrap();
            records.push(SessionRecord {
                user_id: u as u32,
                request_id: format!("u{u}-r0"),
                category: u % 8,
                input_tokens: 10,
                t_send_ns: send,
                token_stamps_ns: stamps,
                t_end_ns: end,
                end_reason: "eos".into(),
                rx_crc32: 1,
                rx_frames: n + 1,
            });
        }
        TokenEventLog {
            meta: RunMeta {
                run_id: format!("syn{seed}"),
                concurrency,
                scenario: "syn".into(),
                seed,
                clock: "virtual".into(),
                wall_duration_s: 1.0,
                spec: WorkloadSpec::default(),
            },
            records,
        }
    }

    #[test]
    fn quantile_order_holds() {
        for seed in 0..20 {
            let log = synthetic_log(30, seed);
            let s = summarize_log(&log, 2.0).unwrap();
            assert!(s.ttft.ordered());
            assert!(s.tpot.ordered());
            assert!(s.p99_response_s >= s.ttft.median);
        }
    }

    #[test]
    fn permutation_invariant() {
        let log = synthetic_log(40, 3);
        let mut shuffled = log.clone();
        shuffled.records.reverse();
        assert_eq!(summarize_log(&log, 2.0).unwrap(), summarize_log(&shuffled, 2.0).unwrap());
    }

    #[test]
    fn error_sessions_excluded_from_user_metrics() {
        let mut log = synthetic_log(10, 4);
        log.records[0].end_reason = "error".into();
        log.records[0].token_stamps_ns.clear();
        let s = summarize_log(&log, 2.0).unwrap();
        assert_eq!(s.concurrency, 10);
        assert!(s.ttft.ordered());
    }

    #[test]
    fn report_files_written() {
        let dir = tempfile::tempdir().unwrap();
        let run_a = dir.path().join("runA");
        let run_b = dir.path().join("runB");
        synthetic_log(10, 5).write_dir(&run_a).unwrap();
        synthetic_log(20, 6).write_dir(&run_b).unwrap();
        let out = dir.path().join("report");
        let (summary, warnings) =
            summarize(&[run_a, run_b, dir.path().join("missing")], 2.0, &out).unwrap();
        assert_eq!(summary.runs.len(), 2);
        assert_eq!(warnings.len(), 1);
        assert!(out.join("summary.json").exists());
        assert!(out.join("summary.csv").exists());
        assert!(out.join("ttft.svg").exists());
        let json = std::fs::read_to_string(out.join("summary.json")).unwrap();
        let parsed: MetricsSummary = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed, summary);
        let csv = std::fs::read_to_string(out.join("summary.csv")).unwrap();
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn no_usable_runs_is_error() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("report");
        assert!(matches!(
            summarize(&[dir.path().join("nope")], 2.0, &out),
            Err(MetricsError::NoRuns)
        ));
    }
}
