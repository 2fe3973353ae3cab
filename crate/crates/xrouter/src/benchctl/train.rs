//! Classifier training with cluster-to-category alignment.

use std::path::Path;

use crate::clusterkit::{pipeline_save, ClusterPipeline, TrainParams};

use super::corpus::{CorpusBundle, NUM_CATEGORIES};
use super::BenchError;

#[derive(Debug, Clone)]
pub struct TrainReport {
    /// rows: cluster id, columns: corpus category; counts of training docs
    pub confusion: Vec<Vec<u64>>,
    /// per-cluster majority-category fraction (0 for empty clusters)
    pub purity: Vec<f64>,
    /// fraction of docs whose cluster id equals their category; only
    /// meaningful when k equals the category count
    pub accuracy: f64,
    pub assignments: Vec<usize>,
}

/// Fit the full pipeline on a corpus. When k matches the category count the
/// centroids are permuted so that cluster id = majority category, which makes
/// route tables readable and routing checks direct.
pub fn train(
    corpus: &CorpusBundle,
    k: usize,
    dim: usize,
    seed: u64,
) -> Result<(ClusterPipeline, TrainReport), BenchError> {
    let texts = corpus.texts();
    let mut pipeline = ClusterPipeline::fit(&texts, &TrainParams { k, dim, seed })?;

    if k == NUM_CATEGORIES {
        let confusion = confusion_matrix(&pipeline, corpus, k);
        pipeline.reorder_centroids(&alignment_permutation(&confusion));
    }

    let confusion = confusion_matrix(&pipeline, corpus, k);
    let assignments: Vec<usize> =
        corpus.documents().iter().map(|d| pipeline.classify(&d.text)).collect();
    let purity: Vec<f64> = confusion
        .iter()
        .map(|row| {
            let total: u64 = row.iter().sum();
            if total == 0 {
                0.0
            } else {
                *row.iter().max().unwrap() as f64 / total as f64
            }
        })
        .collect();
    let matched = assignments
        .iter()
        .zip(corpus.documents())
        .filter(|(a, d)| **a == d.category)
        .count();
    let accuracy = matched as f64 / assignments.len() as f64;

    Ok((pipeline, TrainReport { confusion, purity, accuracy, assignments }))
}

/// Train and persist the artifact.
pub fn train_to_file(
    corpus: &CorpusBundle,
    k: usize,
    dim: usize,
    seed: u64,
    path: &Path,
) -> Result<TrainReport, BenchError> {
    let (pipeline, report) = train(corpus, k, dim, seed)?;
    pipeline_save(&pipeline, path)?;
    Ok(report)
}

fn confusion_matrix(pipeline: &ClusterPipeline, corpus: &CorpusBundle, k: usize) -> Vec<Vec<u64>> {
    let mut m = vec![vec![0u64; NUM_CATEGORIES]; k];
    for doc in corpus.documents() {
        m[pipeline.classify(&doc.text)][doc.category] += 1;
    }
    m
}

/// Greedy maximum matching of clusters to categories: repeatedly take the
/// largest remaining confusion cell. perm[category] = old cluster id.
fn alignment_permutation(confusion: &[Vec<u64>]) -> Vec<usize> {
    let k = confusion.len();
    let mut perm = vec![usize::MAX; k];
    let mut cluster_used = vec![false; k];
    let mut category_used = vec![false; k];
    for _ in 0..k {
        let mut best: Option<(u64, usize, usize)> = None;
        for (cl, row) in confusion.iter().enumerate() {
            if cluster_used[cl] {
                continue;
            }
            for (cat, &count) in row.iter().enumerate() {
                if category_used[cat] {
                    continue;
                }
                if best.map_or(true, |(b, _, _)| count > b) {
                    best = Some((count, cl, cat));
                }
            }
        }
        let (_, cl, cat) = best.expect("k pairs available");
        perm[cat] = cl;
        cluster_used[cl] = true;
        category_used[cat] = true;
    }
    perm
}

/// Human-readable confusion matrix for CLI output.
pub fn format_report(report: &TrainReport) -> String {
    let mut out = String::from("cluster \\ category");
    for c in 0..NUM_CATEGORIES {
        out.push_str(&format!("{c:>6}"));
    }
    out.push_str("  purity\n");
    for (cl, row) in report.confusion.iter().enumerate() {
        out.push_str(&format!("{cl:>18}"));
        for v in row {
            out.push_str(&format!("{v:>6}"));
        }
        out.push_str(&format!("  {:.3}\n", report.purity[cl]));
    }
    out.push_str(&format!("category match: {:.1}%\n", report.accuracy * 100.0));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_corpus_aligns_clusters_with_categories() {
        let corpus = CorpusBundle::synthetic_for_tests();
        let (pipeline, report) = train(&corpus, 8, 8, 0).unwrap();
        assert!(report.accuracy >= 0.9, "accuracy {}", report.accuracy);
        for doc in corpus.documents().iter().take(8) {
            assert_eq!(pipeline.classify(&doc.text), doc.category);
        }
    }

    #[test]
    fn confusion_matches_recount_oracle() {
        let corpus = CorpusBundle::synthetic_for_tests();
        let (_, report) = train(&corpus, 8, 8, 0).unwrap();
        let mut recount = vec![vec![0u64; NUM_CATEGORIES]; 8];
        for (a, d) in report.assignments.iter().zip(corpus.documents()) {
            recount[*a][d.category] += 1;
        }
        assert_eq!(report.confusion, recount);
        let total: u64 = report.confusion.iter().flatten().sum();
        assert_eq!(total, corpus.len() as u64);
    }

    #[test]
    fn artifacts_byte_identical_for_fixed_seed() {
        let corpus = CorpusBundle::synthetic_for_tests();
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.bin");
        let b = dir.path().join("b.bin");
        train_to_file(&corpus, 8, 100, 42, &a).unwrap();
        train_to_file(&corpus, 8, 100, 42, &b).unwrap();
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    }

    #[test]
    fn k_one_sends_everything_to_zero() {
        let corpus = CorpusBundle::synthetic_for_tests();
        let (pipeline, _) = train(&corpus, 1, 10, 0).unwrap();
        for doc in corpus.documents() {
            assert_eq!(pipeline.classify(&doc.text), 0);
        }
    }

    #[test]
    fn greedy_alignment_prefers_large_cells() {
        let confusion = vec![
            vec![0, 9, 0],
            vec![8, 0, 1],
            vec![1, 0, 7],
        ];
        let perm = alignment_permutation(&confusion);
        assert_eq!(perm, vec![1, 0, 2]);
    }
}
