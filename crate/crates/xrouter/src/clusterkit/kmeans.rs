//! Lloyd's k-means with k-means++ seeding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::ClusterError;

const TOL: f64 = 1e-4;
const MAX_ITERS: usize = 100;
const N_INIT: u64 = 10;

/// Fitted centroids plus the inertia recorded after each Lloyd iteration.
#[derive(Debug, Clone)]
pub struct KmeansFit {
    /// k × dim, row-major
    pub centroids: Vec<f64>,
    pub k: usize,
    pub dim: usize,
    /// total within-cluster squared distance after each iteration
    pub inertia_trace: Vec<f64>,
}

/// Index of the nearest centroid by Euclidean distance, ties broken by the
/// lowest cluster index.
pub fn assign(centroids: &[f64], dim: usize, point: &[f64]) -> usize {
    let k = centroids.len() / dim;
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for j in 0..k {
        let d = sq_dist(&centroids[j * dim..(j + 1) * dim], point);
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    best
}

/// Fit `k` centroids to `n` points of dimension `dim` (row-major `vectors`).
///
/// Runs several restarts with distinct seeded k-means++ initializations and keeps
/// the fit with the lowest final inertia; single inits get stuck in merged
/// clusters too often on small corpora. Deterministic for a fixed seed.
pub fn kmeans_fit(vectors: &[f64], dim: usize, k: usize, seed: u64) -> Result<KmeansFit, ClusterError> {
    let mut best: Option<KmeansFit> = None;
    for restart in 0..N_INIT {
        let fit = lloyd_once(vectors, dim, k, seed.wrapping_mul(N_INIT).wrapping_add(restart))?;
        let inertia = *fit.inertia_trace.last().unwrap();
        if best.as_ref().map_or(true, |b| inertia < *b.inertia_trace.last().unwrap()) {
            best = Some(fit);
        }
    }
    Ok(best.unwrap())
}

/// One k-means++ initialization followed by Lloyd iterations until the
/// maximum centroid movement drops below 1e-4 or 100 iterations. Empty
/// clusters are re-seeded to the point farthest from its assigned centroid.
fn lloyd_once(vectors: &[f64], dim: usize, k: usize, seed: u64) -> Result<KmeansFit, ClusterError> {
    assert!(dim >= 1 && k >= 1);
    assert_eq!(vectors.len() % dim, 0);
    let n = vectors.len() / dim;
    if n < k {
        return Err(ClusterError::TooFewPoints { n, k });
    }
    let point = |i: usize| &vectors[i * dim..(i + 1) * dim];

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_init(vectors, dim, n, k, &mut rng);

    let mut assignment = vec![0usize; n];
    let mut inertia_trace = Vec::new();
    for _ in 0..MAX_ITERS {
        // Assignment step.
        let mut inertia = 0.0;
        for i in 0..n {
            let j = assign(&centroids, dim, point(i));
            assignment[i] = j;
            inertia += sq_dist(&centroids[j * dim..(j + 1) * dim], point(i));
        }
        inertia_trace.push(inertia);

        // Update step.
        let mut sums = vec![0.0; k * dim];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            let j = assignment[i];
            counts[j] += 1;
            for d in 0..dim {
                sums[j * dim + d] += point(i)[d];
            }
        }
        let mut new_centroids = centroids.clone();
        for j in 0..k {
            if counts[j] > 0 {
                for d in 0..dim {
                    new_centroids[j * dim + d] = sums[j * dim + d] / counts[j] as f64;
                }
            } else {
                // Re-seed to the point farthest from its assigned centroid.
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = sq_dist(&centroids[assignment[a] * dim..][..dim], point(a));
                        let db = sq_dist(&centroids[assignment[b] * dim..][..dim], point(b));
                        da.partial_cmp(&db).unwrap().then(b.cmp(&a))
                    })
                    .unwrap();
                new_centroids[j * dim..(j + 1) * dim].copy_from_slice(point(far));
            }
        }

        let moved = (0..k)
            .map(|j| sq_dist(&centroids[j * dim..][..dim], &new_centroids[j * dim..][..dim]).sqrt())
            .fold(0.0, f64::max);
        centroids = new_centroids;
        if moved < TOL {
            break;
        }
    }

    Ok(KmeansFit { centroids, k, dim, inertia_trace })
}

// Greedy k-means++: each new center is the best of several D²-weighted
// candidates, judged by the resulting potential. Plain k-means++ merges
// nearby clusters too often once noise dimensions dominate distances.
fn plus_plus_init(vectors: &[f64], dim: usize, n: usize, k: usize, rng: &mut ChaCha20Rng) -> Vec<f64> {
    let point = |i: usize| &vectors[i * dim..(i + 1) * dim];
    let mut centroids = Vec::with_capacity(k * dim);
    let first = rng.gen_range(0..n);
    centroids.extend_from_slice(point(first));
    let n_candidates = 2 + (k as f64).ln().floor() as usize;

    let mut dists: Vec<f64> = (0..n).map(|i| sq_dist(point(first), point(i))).collect();
    for _ in 1..k {
        let total: f64 = dists.iter().sum();
        let mut best: Option<(f64, usize, Vec<f64>)> = None;
        for _ in 0..n_candidates {
            let chosen = if total > 0.0 {
                let mut target = rng.gen::<f64>() * total;
                let mut idx = n - 1;
                for (i, d) in dists.iter().enumerate() {
                    if target < *d {
                        idx = i;
                        break;
                    }
                    target -= d;
                }
                idx
            } else {
                rng.gen_range(0..n)
            };
            let cand_dists: Vec<f64> =
                (0..n).map(|i| dists[i].min(sq_dist(point(chosen), point(i)))).collect();
            let potential: f64 = cand_dists.iter().sum();
            if best.as_ref().map_or(true, |(b, _, _)| potential < *b) {
                best = Some((potential, chosen, cand_dists));
            }
        }
        let (_, chosen, cand_dists) = best.unwrap();
        centroids.extend_from_slice(point(chosen));
        dists = cand_dists;
    }
    centroids
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
