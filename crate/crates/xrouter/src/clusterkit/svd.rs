//! Truncated SVD: exact for small matrices, randomized range-finder above a
//! size threshold.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Below this `min(n_rows, n_cols)` the exact dense SVD is used. The
/// randomized sketch only pays off on larger matrices anyway, and the exact
/// path keeps small-matrix singular values correct to machine precision.
const EXACT_SVD_THRESHOLD: usize = 128;

/// Oversampling columns added to the randomized sketch.
const OVERSAMPLE: usize = 10;

/// Power iterations applied to the sketch.
const POWER_ITERS: usize = 2;

/// Rank-truncated SVD projection: `dim` row-orthonormal components over the
/// input feature space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    /// dim × n_features, row-major, rows pairwise orthonormal
    pub components: Vec<f64>,
    /// number of retained components
    pub dim: usize,
    /// number of input features (columns of the training matrix)
    pub n_features: usize,
    /// non-increasing, ≥ 0
    pub singular_values: Vec<f64>,
}

impl Projection {
    /// Project a feature vector onto the retained components.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_features);
        let mut out = vec![0.0; self.dim];
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.components[r * self.n_features..(r + 1) * self.n_features];
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
        out
    }
}

/// Fit a rank-`dim` truncated SVD of an `n_rows × n_cols` row-major matrix.
///
/// `dim` is clamped to `min(dim, n_rows, n_cols)`. Deterministic for a fixed
/// seed.
pub fn svd_fit(matrix: &[f64], n_rows: usize, n_cols: usize, dim: usize, seed: u64) -> Projection {
    assert!(n_rows >= 1 && n_cols >= 1);
    assert_eq!(matrix.len(), n_rows * n_cols);
    let dim = dim.min(n_rows).min(n_cols).max(1);
    let a = DMatrix::from_row_slice(n_rows, n_cols, matrix);

    let (mut vt, mut sv) = if n_rows.min(n_cols) <= EXACT_SVD_THRESHOLD {
        exact_truncated(&a, dim)
    } else {
        randomized_truncated(&a, dim, seed)
    };

    // Clamp tiny negative rounding artifacts.
    for s in &mut sv {
        if *s < 0.0 {
            *s = 0.0;
        }
    }
    let components = std::mem::take(&mut vt);
    Projection { components, dim, n_features: n_cols, singular_values: sv }
}

fn exact_truncated(a: &DMatrix<f64>, dim: usize) -> (Vec<f64>, Vec<f64>) {
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let order = sort_desc(svd.singular_values.as_slice());
    take_rows(&v_t, &order[..dim], svd.singular_values.as_slice())
}

fn randomized_truncated(a: &DMatrix<f64>, dim: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let (n, m) = a.shape();
    let l = (dim + OVERSAMPLE).min(n).min(m);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let omega = DMatrix::from_fn(m, l, |_, _| StandardNormal.sample(&mut rng));

    // Range finder with re-orthonormalized power iterations.
    let mut q = orthonormalize(a * omega);
    for _ in 0..POWER_ITERS {
        let z = orthonormalize(a.transpose() * &q);
        q = orthonormalize(a * z);
    }

    let b = q.transpose() * a; // l × m
    let svd = b.svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let order = sort_desc(svd.singular_values.as_slice());
    take_rows(&v_t, &order[..dim], svd.singular_values.as_slice())
}

fn orthonormalize(y: DMatrix<f64>) -> DMatrix<f64> {
    let qr = y.qr();
    qr.q()
}

fn sort_desc(sv: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[j].partial_cmp(&sv[i]).unwrap().then(i.cmp(&j)));
    order
}

fn take_rows(v_t: &DMatrix<f64>, rows: &[usize], sv: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let m = v_t.ncols();
    let mut components = Vec::with_capacity(rows.len() * m);
    let mut values = Vec::with_capacity(rows.len());
    for &r in rows {
        for c in 0..m {
            components.push(v_t[(r, c)]);
        }
        values.push(sv[r]);
    }
    (components, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_matrix() {
        #[rustfmt::skip]
        let m = [
            3.0, 0.0, 0.0,
            0.0, 2.0, 0.0,
            0.0, 0.0, 1.0,
        ];
        let p = svd_fit(&m, 3, 3, 2, 0);
        assert_eq!(p.dim, 2);
        assert!((p.singular_values[0] - 3.0).abs() < 1e-9);
        assert!((p.singular_values[1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn dim_clamped() {
        let m = vec![1.0; 3 * 40];
        let p = svd_fit(&m, 3, 40, 100, 0);
        assert_eq!(p.dim, 3);
        let p = svd_fit(&m, 3, 40, 2, 0);
        assert_eq!(p.dim, 2);
    }

    #[test]
    fn rows_orthonormal_and_values_sorted() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let m: Vec<f64> = (0..20 * 30).map(|_| StandardNormal.sample(&mut rng)).collect();
        let p = svd_fit(&m, 20, 30, 5, 1);
        for i in 0..p.dim {
            for j in 0..p.dim {
                let dot: f64 = (0..p.n_features)
                    .map(|c| p.components[i * 30 + c] * p.components[j * 30 + c])
                    .sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-6, "rows {i},{j} dot {dot}");
            }
        }
        for w in p.singular_values.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let m: Vec<f64> = (0..150 * 140).map(|_| StandardNormal.sample(&mut rng)).collect();
        let a = svd_fit(&m, 150, 140, 12, 42);
        let b = svd_fit(&m, 150, 140, 12, 42);
        assert_eq!(a, b);
    }

    #[test]
    fn randomized_path_exact_on_low_rank() {
        // Rank-4 matrix, 200×150: the sketch spans the whole range, so the
        // randomized path recovers the spectrum to near machine precision.
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let u = DMatrix::from_fn(200, 4, |_, _| -> f64 { StandardNormal.sample(&mut rng) });
        let v = DMatrix::from_fn(4, 150, |_, _| -> f64 { StandardNormal.sample(&mut rng) });
        let s = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![50.0, 20.0, 5.0, 1.0]));
        let a = u.qr().q() * s * v.transpose().qr().q().transpose();
        let flat: Vec<f64> = a.row_iter().flat_map(|r| r.iter().copied().collect::<Vec<_>>()).collect();
        let p = svd_fit(&flat, 200, 150, 4, 5);
        let expect = [50.0, 20.0, 5.0, 1.0];
        for (got, want) in p.singular_values.iter().zip(expect) {
            assert!((got - want).abs() / want < 1e-6, "{got} vs {want}");
        }
    }
}
