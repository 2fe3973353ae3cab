//! Experiment driver: simulated runs per concurrency level plus optional
//! live overhead measurement over TCP.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::clusterkit::{pipeline_load, ClusterPipeline};
use crate::loadgen::runner::{run_load, LoadConfig};
use crate::loadgen::workload::{InputLengthDistribution, WorkloadSpec};
use crate::metricspipe::{percentile, summarize, MetricsSummary};
use crate::routecore::balancer::{spawn_balancer, BalancerState};
use crate::routecore::gateway::{spawn_gateway, GatewayConfig, RoutingStats};
use crate::routecore::routes::RouteTable;
use crate::simbackend::server::{serve, BackendConfig};
use crate::simbackend::ModelProfile;

use super::config::ExperimentConfig;
use super::corpus::{ingest_corpus, CorpusBundle, NUM_CATEGORIES};
use super::sim::{simulate, SimConfig};
use super::BenchError;

#[derive(Debug)]
pub struct ExperimentOutcome {
    pub summary: MetricsSummary,
    pub warnings: Vec<String>,
    pub run_dirs: Vec<PathBuf>,
    /// per-level live overhead samples, present when the config asks for them
    pub overhead: Option<Vec<OverheadSample>>,
}

/// Latency the gateway tier adds per request (classify, route lookup,
/// backend dial, forward), measured inside the gateways over real sockets
/// at a fixed concurrency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverheadSample {
    pub concurrency: usize,
    pub n_requests: usize,
    pub median_added_s: f64,
    pub p99_added_s: f64,
}

/// Run every (concurrency level, repeat) cell of an experiment, write run
/// directories and the summarized report, and snapshot the config plus input
/// checksums next to the results.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome, BenchError> {
    cfg.validate()?;
    let corpus = ingest_corpus(&cfg.corpus)?;
    let pipeline = pipeline_load(&cfg.artifact)?;
    let backends = cfg.resolve_backends()?;

    std::fs::create_dir_all(&cfg.output_dir)?;
    cfg.save(&cfg.output_dir.join("config.json"))?;
    write_checksums(cfg, &cfg.output_dir.join("checksums.json"))?;

    let runs_dir = cfg.output_dir.join("runs");
    let mut run_dirs = Vec::new();
    for &level in &cfg.concurrency_levels {
        for repeat in 0..cfg.repeats {
            let run_id = format!("{}-n{:04}-r{}", cfg.scenario, level, repeat);
            let sim = SimConfig {
                backends: backends.clone(),
                concurrency: level,
                spec: cfg.workload.clone(),
                seed: cfg.seed.wrapping_add(repeat as u64),
                run_id: run_id.clone(),
                scenario: cfg.scenario.clone(),
                route_latency_ns: cfg.route_latency_ns,
                classify_latency_ns: cfg.classify_latency_ns,
            };
            let outcome = simulate(&sim, &pipeline, &corpus)?;
            let dir = runs_dir.join(&run_id);
            outcome.log.write_dir(&dir)?;
            run_dirs.push(dir);
        }
    }

    let (summary, warnings) = summarize(&run_dirs, cfg.window_s, &cfg.output_dir.join("report"))?;

    let overhead = if cfg.live_overhead_check {
        let profile = &backends[0].profile;
        let mut samples = Vec::new();
        for &level in &cfg.concurrency_levels {
            samples.push(measure_gateway_overhead(
                profile,
                &pipeline,
                &corpus,
                level,
                cfg.gateway_instances,
                cfg.seed,
            )?);
        }
        std::fs::write(
            cfg.output_dir.join("gateway_overhead.json"),
            serde_json::to_string_pretty(&samples).expect("overhead serialization"),
        )?;
        Some(samples)
    } else {
        None
    };

    Ok(ExperimentOutcome { summary, warnings, run_dirs, overhead })
}

fn write_checksums(cfg: &ExperimentConfig, path: &Path) -> Result<(), BenchError> {
    let crc = |p: &Path| -> Result<u32, BenchError> {
        Ok(crc32fast::hash(&std::fs::read(p)?))
    };
    let sums = serde_json::json!({
        "artifact": cfg.artifact.display().to_string(),
        "artifact_crc32": crc(&cfg.artifact)?,
        "corpus": cfg.corpus.display().to_string(),
        "corpus_crc32": crc(&cfg.corpus)?,
    });
    std::fs::write(path, serde_json::to_string_pretty(&sums).expect("checksums"))?;
    Ok(())
}

// Several requests per user so the closed loop reaches a steady state where
// sends are staggered by session completions; a one-shot burst would instead
// measure how many prompts the host can classify at the same instant, which
// says nothing about routing latency under sustained concurrency.
fn overhead_spec() -> WorkloadSpec {
    WorkloadSpec {
        input_length_distribution: InputLengthDistribution::Normal {
            mean: 40.0,
            std: 5.0,
            min: 4,
        },
        requests_per_user: 4,
        max_tokens: 90,
        ..WorkloadSpec::default()
    }
}

/// Measure the per-request latency added by the gateway tier (balancer,
/// gateways, one backend) over real sockets. Each gateway records the span
/// from reading a request to having it forwarded upstream; the route table
/// maps every cluster to the single backend so classification runs on each
/// request while all traffic lands on one engine.
pub fn measure_gateway_overhead(
    profile: &ModelProfile,
    pipeline: &ClusterPipeline,
    corpus: &CorpusBundle,
    concurrency: usize,
    gateway_instances: usize,
    seed: u64,
) -> Result<OverheadSample, BenchError> {
    let time_scale = 0.01;
    let spec = overhead_spec();

    let backend = serve(
        profile.clone(),
        BackendConfig { listen: "127.0.0.1:0".into(), time_scale, seed, log_path: None },
    )?;
    let routes = RouteTable::new(
        (0..NUM_CATEGORIES).map(|c| (c, vec![backend.endpoint()])).collect::<BTreeMap<_, _>>(),
    )
    .map_err(|e| BenchError::InvalidConfig(e.to_string()))?;
    let pipeline = Arc::new(pipeline.clone());
    let routes = Arc::new(routes);
    let stats = RoutingStats::new();
    let mut gateways = Vec::with_capacity(gateway_instances);
    for _ in 0..gateway_instances {
        gateways.push(spawn_gateway(
            GatewayConfig { stats: Some(Arc::clone(&stats)), ..GatewayConfig::default() },
            Arc::clone(&pipeline),
            Arc::clone(&routes),
        )?);
    }
    let balancer = spawn_balancer(
        "127.0.0.1:0",
        Arc::new(
            BalancerState::new(gateways.iter().map(|g| g.endpoint()).collect())
                .map_err(|e| BenchError::InvalidConfig(e.to_string()))?,
        ),
    )?;

    run_load(
        &LoadConfig {
            run_id: format!("overhead-{concurrency}"),
            scenario: "overhead".into(),
            timeout: Duration::from_secs(120),
            ..LoadConfig::new(&balancer.endpoint(), concurrency, spec, seed)
        },
        corpus,
    )?;

    balancer.shutdown();
    for g in gateways {
        g.shutdown();
    }
    backend.shutdown();

    let samples = stats.snapshot();
    Ok(OverheadSample {
        concurrency,
        n_requests: samples.len(),
        median_added_s: percentile(&samples, 50.0)?,
        p99_added_s: percentile(&samples, 99.0)?,
    })
}
