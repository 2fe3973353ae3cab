//! Run the bundled expert_E experiment config end to end in virtual time and
//! print the summarized metrics. Everything lands under a temp directory.

use std::path::PathBuf;

use xrouter::benchctl::{ingest_corpus, run_experiment, train_to_file, ExperimentConfig};

fn main() {
    let assets = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("assets");
    let out = std::env::temp_dir().join("xrouter-example-experiment");

    let mut cfg = {
        let text = std::fs::read_to_string(assets.join("configs/expert_e.json")).unwrap();
        serde_json::from_str::<ExperimentConfig>(&text).expect("bundled config")
    };
    // Bundled config paths are repo-root relative; rebase onto the crate.
    cfg.corpus = assets.join("corpus.jsonl");
    cfg.profiles.insert("e".into(), assets.join("profiles/e.json"));
    cfg.artifact = out.join("classifier.bin");
    cfg.output_dir = out.clone();
    cfg.concurrency_levels = vec![20, 50];

    std::fs::create_dir_all(&out).unwrap();
    let corpus = ingest_corpus(&cfg.corpus).expect("bundled corpus");
    let report = train_to_file(&corpus, 8, 100, 3, &cfg.artifact).expect("training");
    println!("classifier category match: {:.1}%", report.accuracy * 100.0);

    let outcome = run_experiment(&cfg).expect("experiment");
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    for run in &outcome.summary.runs {
        println!(
            "N={:<4} ttft median {:.4} s, tpot median {:.4} s, user {:.1} tok/s, p99 {:.2} s",
            run.concurrency,
            run.ttft.median,
            run.tpot.median,
            run.user_throughput.mean,
            run.p99_response_s
        );
    }
    println!("report under {}", out.join("report").display());
}
