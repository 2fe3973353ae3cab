//! Batch-size parameter sweep over a single-backend topology.

use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::clusterkit::pipeline_load;
use crate::loadgen::workload::{
    CategoryDistribution, InputLengthDistribution, WorkloadSpec,
};
use crate::metricspipe::{mean_std, svg};
use crate::simbackend::ModelProfile;

use super::config::SweepConfig;
use super::corpus::ingest_corpus;
use super::sim::{simulate, SimBackend, SimConfig};
use super::BenchError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub batch_size: usize,
    pub variant: String,
    pub tp: u32,
    pub concurrency: usize,
    /// total virtual run time of each repeat, seconds
    pub totals_s: Vec<f64>,
    pub mean_s: f64,
    pub std_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub cells: Vec<SweepCell>,
}

fn sweep_spec(cfg: &SweepConfig) -> WorkloadSpec {
    WorkloadSpec {
        category_distribution: CategoryDistribution::Uniform,
        input_length_distribution: InputLengthDistribution::Normal {
            mean: cfg.input_mean,
            std: cfg.input_std,
            min: 1,
        },
        requests_per_user: 1,
        max_tokens: cfg.answer_cap,
    }
}

/// Run the full grid (batch size × variant × tp × concurrency), `repeats`
/// simulated runs per cell, and write `raw.csv`, `heatmap.csv` and one SVG
/// heatmap per tp degree under the output directory. The cell statistic is
/// the total virtual time to finish all requests.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutcome, BenchError> {
    cfg.validate()?;
    let corpus = ingest_corpus(&cfg.corpus)?;
    let pipeline = pipeline_load(&cfg.artifact)?;
    let spec = sweep_spec(cfg);

    let mut variants: Vec<(String, ModelProfile)> = Vec::new();
    for v in &cfg.variants {
        variants.push((v.name.clone(), ModelProfile::load(&v.profile)?));
    }

    let mut cells = Vec::new();
    let mut cell_index = 0u64;
    for &batch_size in &cfg.batch_sizes {
        for (name, base) in &variants {
            for &tp in &cfg.tp_degrees {
                for &concurrency in &cfg.concurrency_levels {
                    let mut profile = base.clone();
                    profile.max_batch = batch_size;
                    profile.tp_degree = tp;
                    profile.name = format!("{name}-b{batch_size}-tp{tp}");

                    let mut totals_s = Vec::with_capacity(cfg.repeats as usize);
                    for repeat in 0..cfg.repeats {
                        let sim = SimConfig {
                            backends: vec![SimBackend { cluster: 0, profile: profile.clone() }],
                            concurrency,
                            spec: spec.clone(),
                            seed: cfg
                                .seed
                                .wrapping_add(cell_index * 101)
                                .wrapping_add(repeat as u64),
                            run_id: format!("sweep-{cell_index}-r{repeat}"),
                            scenario: "sweep".into(),
                            route_latency_ns: 0,
                            classify_latency_ns: 0,
                        };
                        let outcome = simulate(&sim, &pipeline, &corpus)?;
                        totals_s.push(outcome.log.meta.wall_duration_s);
                    }
                    let (mean_s, std_s) = mean_std(&totals_s);
                    cells.push(SweepCell {
                        batch_size,
                        variant: name.clone(),
                        tp,
                        concurrency,
                        totals_s,
                        mean_s,
                        std_s,
                    });
                    cell_index += 1;
                }
            }
        }
    }

    let outcome = SweepOutcome { cells };
    write_outputs(cfg, &outcome)?;
    Ok(outcome)
}

fn write_outputs(cfg: &SweepConfig, outcome: &SweepOutcome) -> Result<(), BenchError> {
    std::fs::create_dir_all(&cfg.output_dir)?;

    let mut raw = String::from("batch_size,variant,tp,concurrency,repeat,total_s\n");
    for cell in &outcome.cells {
        for (repeat, t) in cell.totals_s.iter().enumerate() {
            writeln!(
                raw,
                "{},{},{},{},{},{}",
                cell.batch_size, cell.variant, cell.tp, cell.concurrency, repeat, t
            )
            .expect("string write");
        }
    }
    std::fs::write(cfg.output_dir.join("raw.csv"), raw)?;

    let mut agg = String::from("batch_size,variant,tp,concurrency,mean_s,std_s\n");
    for cell in &outcome.cells {
        writeln!(
            agg,
            "{},{},{},{},{},{}",
            cell.batch_size, cell.variant, cell.tp, cell.concurrency, cell.mean_s, cell.std_s
        )
        .expect("string write");
    }
    std::fs::write(cfg.output_dir.join("heatmap.csv"), agg)?;

    for &tp in &cfg.tp_degrees {
        let path = cfg.output_dir.join(format!("heatmap_tp{tp}.svg"));
        std::fs::write(path, heatmap_svg(cfg, outcome, tp))?;
    }
    Ok(())
}

// One heatmap per tp degree: rows are (batch size, variant) pairs, columns
// concurrency levels, each cell showing mean ± std total time.
fn heatmap_svg(cfg: &SweepConfig, outcome: &SweepOutcome, tp: u32) -> String {
    let mut row_labels = Vec::new();
    for &bs in &cfg.batch_sizes {
        for v in &cfg.variants {
            row_labels.push(format!("b{} {}", bs, v.name));
        }
    }
    let col_labels: Vec<String> =
        cfg.concurrency_levels.iter().map(|c| format!("N={c}")).collect();

    let mut values = Vec::new();
    let mut texts = Vec::new();
    for &bs in &cfg.batch_sizes {
        for v in &cfg.variants {
            for &n in &cfg.concurrency_levels {
                let cell = outcome
                    .cells
                    .iter()
                    .find(|c| {
                        c.batch_size == bs && c.variant == v.name && c.tp == tp && c.concurrency == n
                    })
                    .expect("grid is complete");
                values.push(cell.mean_s);
                texts.push(format!("{:.1}±{:.1}", cell.mean_s, cell.std_s));
            }
        }
    }
    svg::heatmap(
        &format!("total time (s), tp={tp}"),
        &row_labels,
        &col_labels,
        &values,
        &texts,
    )
}

/// Paths this sweep writes, for CLI reporting.
pub fn output_files(cfg: &SweepConfig) -> Vec<PathBuf> {
    let mut out = vec![cfg.output_dir.join("raw.csv"), cfg.output_dir.join("heatmap.csv")];
    for &tp in &cfg.tp_degrees {
        out.push(cfg.output_dir.join(format!("heatmap_tp{tp}.svg")));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchctl::config::SweepVariant;
    use crate::benchctl::corpus::CorpusBundle;
    use crate::benchctl::train::train;
    use crate::clusterkit::pipeline_save;

    fn small_cfg(dir: &std::path::Path) -> SweepConfig {
        let corpus = CorpusBundle::synthetic_for_tests();
        let corpus_path = dir.join("corpus.jsonl");
        corpus.save(&corpus_path).unwrap();
        let (pipeline, _) = train(&corpus, 8, 8, 0).unwrap();
        let artifact = dir.join("classifier.bin");
        pipeline_save(&pipeline, &artifact).unwrap();

        let fast = ModelProfile {
            name: "fast".into(),
            tp_degree: 1,
            weights_gb: 1.0,
            kv_cache_gb: 16.0,
            max_batch: 8,
            kv_tokens_per_gb: 50_000.0,
            prefill_coef_ns_per_token: 10_000.0,
            prefill_base_ns: 200_000.0,
            decode_base_ns: 2_000_000.0,
            decode_batch_coef_ns: 20_000.0,
            tp_comm_overhead_ns: 500_000.0,
            eos_prob: 0.05,
            max_output_tokens: 50,
        };
        let mut slow = fast.clone();
        slow.name = "slow".into();
        slow.decode_base_ns = 8_000_000.0;
        let fast_path = dir.join("fast.json");
        let slow_path = dir.join("slow.json");
        fast.save(&fast_path).unwrap();
        slow.save(&slow_path).unwrap();

        SweepConfig {
            batch_sizes: vec![2, 8],
            variants: vec![
                SweepVariant { name: "fast".into(), profile: fast_path },
                SweepVariant { name: "slow".into(), profile: slow_path },
            ],
            tp_degrees: vec![1, 2],
            concurrency_levels: vec![4, 8],
            answer_cap: 20,
            input_mean: 30.0,
            input_std: 5.0,
            repeats: 2,
            seed: 5,
            corpus: corpus_path,
            artifact,
            output_dir: dir.join("sweep"),
        }
    }

    #[test]
    fn grid_outputs_and_aggregates() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_cfg(dir.path());
        let outcome = run_sweep(&cfg).unwrap();
        assert_eq!(outcome.cells.len(), 16);
        for cell in &outcome.cells {
            assert_eq!(cell.totals_s.len(), 2);
            let (m, s) = mean_std(&cell.totals_s);
            assert_eq!(m, cell.mean_s);
            assert_eq!(s, cell.std_s);
            assert!(cell.mean_s > 0.0);
        }
        for path in output_files(&cfg) {
            assert!(path.exists(), "{}", path.display());
        }
        // raw.csv has a line per repeat plus the header
        let raw = std::fs::read_to_string(cfg.output_dir.join("raw.csv")).unwrap();
        assert_eq!(raw.lines().count(), 1 + 16 * 2);
    }

    #[test]
    fn slower_variant_takes_longer() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_cfg(dir.path());
        cfg.batch_sizes = vec![8];
        cfg.tp_degrees = vec![1];
        cfg.concurrency_levels = vec![8];
        let outcome = run_sweep(&cfg).unwrap();
        let mean = |name: &str| {
            outcome.cells.iter().find(|c| c.variant == name).unwrap().mean_s
        };
        assert!(mean("slow") > mean("fast"));
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_cfg(dir.path());
        cfg.batch_sizes = vec![4];
        cfg.tp_degrees = vec![1];
        cfg.concurrency_levels = vec![4];
        cfg.variants.truncate(1);
        let a = run_sweep(&cfg).unwrap();
        let b = run_sweep(&cfg).unwrap();
        assert_eq!(a, b);
    }
}
