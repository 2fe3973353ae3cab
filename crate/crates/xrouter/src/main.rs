//! Command line entry point for the serving testbed.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand};

use xrouter::benchctl::{
    ingest_corpus, run_experiment, run_sweep, train_to_file, ExperimentConfig, SweepConfig,
};
use xrouter::benchctl::corpus::NUM_CATEGORIES;
use xrouter::benchctl::train::format_report;
use xrouter::clusterkit::pipeline_load;
use xrouter::loadgen::runner::{run_load, LoadConfig};
use xrouter::loadgen::WorkloadSpec;
use xrouter::metricspipe::summarize;
use xrouter::routecore::{spawn_balancer, spawn_gateway, BalancerState, GatewayConfig, RouteTable};
use xrouter::simbackend::{serve, BackendConfig, ModelProfile};

#[derive(Parser)]
#[command(name = "xrouter", about = "Desk-scale routed LLM serving testbed", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a JSONL corpus and print per-category counts
    Ingest {
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Train the prompt classifier and write the pipeline artifact
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 8)]
        k: usize,
        #[arg(long, default_value_t = 100)]
        dim: usize,
        #[arg(long, default_value_t = 3)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify one prompt with a trained pipeline
    Classify {
        #[arg(long)]
        pipeline: PathBuf,
        /// prompt text; reads stdin when omitted
        #[arg(long)]
        prompt: Option<String>,
    },
    /// Serve a simulated inference backend
    Backend {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long, default_value = "127.0.0.1:0")]
        listen: String,
        #[arg(long, default_value_t = 0.001)]
        time_scale: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// optional diagnostic event log (CSV)
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Serve a classifying streaming gateway
    Gateway {
        #[arg(long, default_value = "127.0.0.1:0")]
        listen: String,
        #[arg(long)]
        routes: PathBuf,
        #[arg(long)]
        pipeline: PathBuf,
        #[arg(long, default_value_t = 2048)]
        max_sessions: usize,
    },
    /// Serve a round-robin connection balancer
    Balance {
        #[arg(long, default_value = "127.0.0.1:0")]
        listen: String,
        /// comma-separated upstream endpoints
        #[arg(long, value_delimiter = ',')]
        upstreams: Vec<String>,
    },
    /// Drive a target with concurrent closed-loop users
    Loadgen {
        #[arg(long)]
        target: String,
        #[arg(long)]
        users: usize,
        /// workload spec JSON; defaults when omitted
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a full experiment from a config file
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the batch-size parameter sweep from a config file
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Summarize run directories into a report
    Report {
        /// comma-separated run directories
        #[arg(long, value_delimiter = ',')]
        runs: Vec<PathBuf>,
        #[arg(long, default_value_t = 2.0)]
        window: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn env_u64(name: &str) -> Option<u64> {
    std::env::var(name).ok().and_then(|v| v.parse().ok())
}

fn env_f64(name: &str) -> Option<f64> {
    std::env::var(name).ok().and_then(|v| v.parse().ok())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    match cli.command {
        Command::Ingest { corpus } => {
            let bundle = ingest_corpus(&corpus)?;
            println!("{} documents", bundle.len());
            let mut counts = vec![0usize; NUM_CATEGORIES];
            for doc in bundle.documents() {
                counts[doc.category] += 1;
            }
            for (c, n) in counts.iter().enumerate() {
                println!("category {c}: {n}");
            }
        }
        Command::Train { corpus, k, dim, seed, out } => {
            let seed = env_u64("XR_SEED").unwrap_or(seed);
            let bundle = ingest_corpus(&corpus)?;
            let report = train_to_file(&bundle, k, dim, seed, &out)?;
            print!("{}", format_report(&report));
            println!("artifact written to {}", out.display());
        }
        Command::Classify { pipeline, prompt } => {
            let pipeline = pipeline_load(&pipeline)?;
            let prompt = match prompt {
                Some(p) => p,
                None => std::io::read_to_string(std::io::stdin())?,
            };
            println!("{}", pipeline.classify(&prompt));
        }
        Command::Backend { profile, listen, time_scale, seed, log } => {
            let time_scale = env_f64("XR_TIME_SCALE").unwrap_or(time_scale);
            let seed = env_u64("XR_SEED").unwrap_or(seed);
            let profile = ModelProfile::load(&profile)?;
            let server = serve(
                profile,
                BackendConfig { listen, time_scale, seed, log_path: log },
            )?;
            println!("backend listening on {}", server.endpoint());
            park_forever();
        }
        Command::Gateway { listen, routes, pipeline, max_sessions } => {
            let pipeline = Arc::new(pipeline_load(&pipeline)?);
            let routes = Arc::new(RouteTable::load(&routes)?);
            let handle = spawn_gateway(
                GatewayConfig { listen, max_sessions, ..GatewayConfig::default() },
                pipeline,
                routes,
            )?;
            println!("gateway listening on {}", handle.endpoint());
            park_forever();
        }
        Command::Balance { listen, upstreams } => {
            let state = Arc::new(BalancerState::new(upstreams)?);
            let handle = spawn_balancer(&listen, state)?;
            println!("balancer listening on {}", handle.endpoint());
            park_forever();
        }
        Command::Loadgen { target, users, spec, seed, corpus, out } => {
            let seed = env_u64("XR_SEED").unwrap_or(seed);
            let spec: WorkloadSpec = match spec {
                Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
                None => WorkloadSpec::default(),
            };
            let bundle = ingest_corpus(&corpus)?;
            let config = LoadConfig {
                timeout: Duration::from_secs(300),
                ..LoadConfig::new(&target, users, spec, seed)
            };
            let log = run_load(&config, &bundle)?;
            log.write_dir(&out)?;
            println!("{} sessions written to {}", log.records.len(), out.display());
        }
        Command::Run { config } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(seed) = env_u64("XR_SEED") {
                cfg.seed = seed;
            }
            if let Some(ts) = env_f64("XR_TIME_SCALE") {
                cfg.time_scale = ts;
            }
            let outcome = run_experiment(&cfg)?;
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "{} runs summarized into {}",
                outcome.summary.runs.len(),
                cfg.output_dir.join("report").display()
            );
            if let Some(samples) = &outcome.overhead {
                for s in samples {
                    println!(
                        "gateway routing latency at N={}: median {:.4} s, p99 {:.4} s over {} requests",
                        s.concurrency, s.median_added_s, s.p99_added_s, s.n_requests
                    );
                }
            }
        }
        Command::Sweep { config } => {
            let mut cfg = SweepConfig::load(&config)?;
            if let Some(seed) = env_u64("XR_SEED") {
                cfg.seed = seed;
            }
            let outcome = run_sweep(&cfg)?;
            println!(
                "{} cells written to {}",
                outcome.cells.len(),
                cfg.output_dir.display()
            );
        }
        Command::Report { runs, window, out } => {
            let (summary, warnings) = summarize(&runs, window, &out)?;
            for w in &warnings {
                eprintln!("warning: {w}");
            }
            println!("{} runs summarized into {}", summary.runs.len(), out.display());
        }
    }
    Ok(())
}

fn park_forever() -> ! {
    loop {
        std::thread::park();
    }
}
