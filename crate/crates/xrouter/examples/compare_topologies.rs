//! Compare the five shipped topologies across concurrency levels.
//!
//! Trains the classifier on the bundled corpus, simulates every topology at
//! N in {50, 100, 200} under uniform and category-skewed workloads, and
//! prints the headline metrics side by side.

use std::collections::BTreeMap;
use std::path::PathBuf;

use xrouter::benchctl::config::{ExperimentConfig, Topology};
use xrouter::benchctl::{ingest_corpus, simulate, train, SimConfig};
use xrouter::loadgen::workload::{
    CategoryDistribution, InputLengthDistribution, WorkloadSpec,
};
use xrouter::metricspipe::summarize_log;

fn assets() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("assets")
}

fn workload(category: CategoryDistribution) -> WorkloadSpec {
    WorkloadSpec {
        category_distribution: category,
        input_length_distribution: InputLengthDistribution::Normal {
            mean: 335.0,
            std: 30.0,
            min: 1,
        },
        requests_per_user: 3,
        max_tokens: 1000,
    }
}

fn main() {
    let corpus = ingest_corpus(&assets().join("corpus.jsonl")).expect("bundled corpus");
    let (pipeline, report) = train(&corpus, 8, 100, 3).expect("training");
    println!("classifier category match: {:.1}%\n", report.accuracy * 100.0);

    let topologies = [
        ("baseline_A", Topology::BaselineA),
        ("baseline_B", Topology::BaselineB),
        ("baseline_C", Topology::BaselineC),
        ("expert_D", Topology::ExpertD),
        ("expert_E", Topology::ExpertE),
    ];
    let workloads = [
        ("uniform", workload(CategoryDistribution::Uniform)),
        ("normal", workload(CategoryDistribution::Normal { mu: 3.5, sigma: 1.5 })),
    ];

    let profiles: BTreeMap<String, PathBuf> = ["a", "b", "c", "d", "e"]
        .iter()
        .map(|k| (k.to_string(), assets().join(format!("profiles/{k}.json"))))
        .collect();

    println!(
        "{:<12} {:<8} {:>5} {:>12} {:>12} {:>12} {:>12}",
        "topology", "workload", "N", "min ttft s", "med tpot s", "user tok/s", "peak tok/s"
    );
    for (name, topology) in topologies {
        for (wname, spec) in &workloads {
            for n in [50usize, 100, 200] {
                let cfg = ExperimentConfig {
                    scenario: name.to_string(),
                    topology,
                    profiles: profiles.clone(),
                    backends: vec![],
                    artifact: PathBuf::new(),
                    corpus: PathBuf::new(),
                    gateway_instances: 16,
                    concurrency_levels: vec![n],
                    workload: spec.clone(),
                    repeats: 1,
                    time_scale: 0.001,
                    seed: 7,
                    output_dir: PathBuf::new(),
                    window_s: 2.0,
                    route_latency_ns: 200_000,
                    classify_latency_ns: 100_000_000,
                    live_overhead_check: false,
                };
                let sim = SimConfig {
                    backends: cfg.resolve_backends().expect("profiles"),
                    concurrency: n,
                    spec: spec.clone(),
                    seed: 7,
                    run_id: format!("{name}-{wname}-{n}"),
                    scenario: name.to_string(),
                    route_latency_ns: cfg.route_latency_ns,
                    classify_latency_ns: cfg.classify_latency_ns,
                };
                let out = simulate(&sim, &pipeline, &corpus).expect("simulation");
                let run = summarize_log(&out.log, 2.0).expect("metrics");
                let peak = run
                    .system_throughput
                    .series
                    .iter()
                    .cloned()
                    .fold(f64::NEG_INFINITY, f64::max);
                println!(
                    "{:<12} {:<8} {:>5} {:>12.4} {:>12.4} {:>12.2} {:>12.1}",
                    name, wname, n, run.ttft.min, run.tpot.median,
                    run.user_throughput.mean, peak
                );
            }
        }
    }
}
