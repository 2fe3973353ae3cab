//! Full live stack on loopback: 8 expert backends, classifying gateways, a
//! round-robin balancer and a closed-loop load run, all over real TCP.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use xrouter::benchctl::{ingest_corpus, train};
use xrouter::loadgen::runner::{run_load, LoadConfig};
use xrouter::loadgen::workload::{InputLengthDistribution, WorkloadSpec};
use xrouter::routecore::{
    spawn_balancer, spawn_gateway, BalancerState, GatewayConfig, RouteTable,
};
use xrouter::simbackend::{serve, BackendConfig, ModelProfile};

fn expert_profile() -> ModelProfile {
    ModelProfile {
        name: "expert".into(),
        tp_degree: 1,
        weights_gb: 15.0,
        kv_cache_gb: 8.0,
        max_batch: 32,
        kv_tokens_per_gb: 10_000.0,
        prefill_coef_ns_per_token: 20_000.0,
        prefill_base_ns: 1_000_000.0,
        decode_base_ns: 9_000_000.0,
        decode_batch_coef_ns: 50_000.0,
        tp_comm_overhead_ns: 0.0,
        eos_prob: 0.05,
        max_output_tokens: 60,
    }
}

fn main() {
    let assets = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("assets");
    let corpus = ingest_corpus(&assets.join("corpus.jsonl")).expect("bundled corpus");
    let (pipeline, report) = train(&corpus, 8, 100, 3).expect("training");
    println!("classifier category match: {:.1}%", report.accuracy * 100.0);

    // One backend per cluster.
    let backends: Vec<_> = (0..8)
        .map(|i| {
            serve(
                expert_profile(),
                BackendConfig {
                    listen: "127.0.0.1:0".into(),
                    time_scale: 0.001,
                    seed: 100 + i,
                    log_path: None,
                },
            )
            .expect("backend start")
        })
        .collect();
    let routes: BTreeMap<usize, Vec<String>> =
        backends.iter().enumerate().map(|(c, b)| (c, vec![b.endpoint()])).collect();
    let routes = Arc::new(RouteTable::new(routes).expect("routes"));
    let pipeline = Arc::new(pipeline);

    let gateways: Vec<_> = (0..4)
        .map(|_| {
            spawn_gateway(GatewayConfig::default(), Arc::clone(&pipeline), Arc::clone(&routes))
                .expect("gateway start")
        })
        .collect();
    let balancer = spawn_balancer(
        "127.0.0.1:0",
        Arc::new(BalancerState::new(gateways.iter().map(|g| g.endpoint()).collect()).unwrap()),
    )
    .expect("balancer start");
    println!("balancer on {} over {} gateways", balancer.endpoint(), gateways.len());

    let spec = WorkloadSpec {
        input_length_distribution: InputLengthDistribution::Normal {
            mean: 40.0,
            std: 5.0,
            min: 4,
        },
        requests_per_user: 2,
        max_tokens: 40,
        ..WorkloadSpec::default()
    };
    let log = run_load(&LoadConfig::new(&balancer.endpoint(), 8, spec, 1), &corpus)
        .expect("load run");

    println!("{} sessions in {:.2} s wall", log.records.len(), log.meta.wall_duration_s);
    for r in &log.records {
        println!(
            "  {}: category {}, {} tokens, end {}",
            r.request_id,
            r.category,
            r.token_stamps_ns.len(),
            r.end_reason
        );
    }

    balancer.shutdown();
    for g in gateways {
        g.shutdown();
    }
    for b in backends {
        b.shutdown();
    }
}
