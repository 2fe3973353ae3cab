//! Train the prompt classifier on the bundled corpus and poke at it.
//!
//! Writes the pipeline artifact next to the target directory, reloads it and
//! classifies a few hand-written prompts.

use std::path::PathBuf;

use xrouter::benchctl::train::format_report;
use xrouter::benchctl::{ingest_corpus, train_to_file};
use xrouter::clusterkit::pipeline_load;

fn main() {
    let assets = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("assets");
    let corpus = ingest_corpus(&assets.join("corpus.jsonl")).expect("bundled corpus");
    println!("corpus: {} documents", corpus.len());

    let artifact = std::env::temp_dir().join("xrouter-example-classifier.bin");
    let report = train_to_file(&corpus, 8, 100, 3, &artifact).expect("training");
    print!("{}", format_report(&report));
    println!("artifact: {}\n", artifact.display());

    // Build one short prompt per category from that category's word pool so
    // the demo stays within the trained vocabulary.
    let pipeline = pipeline_load(&artifact).expect("reload");
    for category in 0..8 {
        let words = corpus.category_words(category);
        let prompt = words[..20].join(" ");
        let shown = words[..6].join(" ");
        println!(
            "category {category} -> cluster {} <- {shown} ...",
            pipeline.classify(&prompt)
        );
    }
}
