//! Run a reduced batch-size sweep and print where the heatmap files landed.
//!
//! The bundled sweep config covers the full 100-cell grid; this example
//! shrinks the grid so it finishes in seconds.

use std::path::PathBuf;

use xrouter::benchctl::{ingest_corpus, run_sweep, train_to_file, SweepConfig};

fn main() {
    let assets = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("assets");
    let out = std::env::temp_dir().join("xrouter-example-sweep");
    std::fs::create_dir_all(&out).unwrap();

    let mut cfg = {
        let text = std::fs::read_to_string(assets.join("configs/sweep.json")).unwrap();
        serde_json::from_str::<SweepConfig>(&text).expect("bundled config")
    };
    cfg.corpus = assets.join("corpus.jsonl");
    cfg.artifact = out.join("classifier.bin");
    cfg.output_dir = out.clone();
    for v in &mut cfg.variants {
        let name = v.profile.file_name().unwrap().to_owned();
        v.profile = assets.join("profiles").join(name);
    }
    // Shrink the grid: 2 batch sizes x 2 variants x 1 tp x 2 levels.
    cfg.batch_sizes = vec![20, 200];
    cfg.tp_degrees = vec![8];
    cfg.concurrency_levels = vec![50, 100];
    cfg.repeats = 3;

    let corpus = ingest_corpus(&cfg.corpus).expect("bundled corpus");
    train_to_file(&corpus, 8, 100, 3, &cfg.artifact).expect("training");

    let outcome = run_sweep(&cfg).expect("sweep");
    println!("{} cells:", outcome.cells.len());
    for cell in &outcome.cells {
        println!(
            "  b{:<4} {:<5} tp{} N={:<4} total {:.2} ± {:.2} s",
            cell.batch_size, cell.variant, cell.tp, cell.concurrency, cell.mean_s, cell.std_s
        );
    }
    println!("files under {}", cfg.output_dir.display());
}
