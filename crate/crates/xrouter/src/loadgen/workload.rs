//! Workload shape: category mix, input-length distribution and prompt
//! construction.

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::benchctl::corpus::CorpusBundle;

use super::LoadError;

pub const NUM_CATEGORIES: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CategoryDistribution {
    Uniform,
    /// probability ∝ Gaussian pdf(mu, sigma) at integer indices 0..7
    Normal { mu: f64, sigma: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputLengthDistribution {
    Lognormal { mu: f64, sigma: f64, min: u64, max: u64 },
    Normal { mean: f64, std: f64, min: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub category_distribution: CategoryDistribution,
    pub input_length_distribution: InputLengthDistribution,
    pub requests_per_user: u32,
    pub max_tokens: u32,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        WorkloadSpec {
            category_distribution: CategoryDistribution::Uniform,
            input_length_distribution: InputLengthDistribution::Lognormal {
                mu: (500.0f64).ln(),
                sigma: 0.6,
                min: 16,
                max: 2048,
            },
            requests_per_user: 1,
            max_tokens: 1000,
        }
    }
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<(), LoadError> {
        match &self.category_distribution {
            CategoryDistribution::Uniform => {}
            CategoryDistribution::Normal { sigma, .. } => {
                if *sigma <= 0.0 {
                    return Err(LoadError::InvalidSpec("category sigma must be > 0".into()));
                }
            }
        }
        match &self.input_length_distribution {
            InputLengthDistribution::Lognormal { sigma, min, max, .. } => {
                if *sigma <= 0.0 || min > max || *min == 0 {
                    return Err(LoadError::InvalidSpec("bad lognormal parameters".into()));
                }
            }
            InputLengthDistribution::Normal { std, min, .. } => {
                if *std < 0.0 || *min == 0 {
                    return Err(LoadError::InvalidSpec("bad normal parameters".into()));
                }
            }
        }
        if self.requests_per_user == 0 {
            return Err(LoadError::InvalidSpec("requests_per_user must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// Normalized category weights for a distribution.
pub fn category_weights(dist: &CategoryDistribution) -> [f64; NUM_CATEGORIES] {
    match dist {
        CategoryDistribution::Uniform => [1.0 / NUM_CATEGORIES as f64; NUM_CATEGORIES],
        CategoryDistribution::Normal { mu, sigma } => {
            let mut w = [0.0; NUM_CATEGORIES];
            for (i, wi) in w.iter_mut().enumerate() {
                let z = (i as f64 - mu) / sigma;
                *wi = (-0.5 * z * z).exp();
            }
            let total: f64 = w.iter().sum();
            for wi in &mut w {
                *wi /= total;
            }
            w
        }
    }
}

/// Draw a category index in [0, 8).
pub fn sample_category(spec: &WorkloadSpec, rng: &mut ChaCha20Rng) -> usize {
    match &spec.category_distribution {
        CategoryDistribution::Uniform => rng.gen_range(0..NUM_CATEGORIES),
        dist @ CategoryDistribution::Normal { .. } => {
            let w = category_weights(dist);
            let mut u: f64 = rng.gen();
            for (i, wi) in w.iter().enumerate() {
                if u < *wi {
                    return i;
                }
                u -= wi;
            }
            NUM_CATEGORIES - 1
        }
    }
}

/// Draw an input length (whitespace words) from the configured distribution.
pub fn sample_input_length(spec: &WorkloadSpec, rng: &mut ChaCha20Rng) -> u64 {
    match &spec.input_length_distribution {
        InputLengthDistribution::Lognormal { mu, sigma, min, max } => {
            let z = gaussian(rng);
            let len = (mu + sigma * z).exp().round();
            (len as u64).clamp(*min, *max)
        }
        InputLengthDistribution::Normal { mean, std, min } => {
            let len = if *std > 0.0 { mean + std * gaussian(rng) } else { *mean };
            (len.round().max(0.0) as u64).max(*min)
        }
    }
}

// Box-Muller; two uniforms per draw keeps the rng stream layout obvious.
fn gaussian(rng: &mut ChaCha20Rng) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Build a prompt of exactly `n_tokens` whitespace words from one category's
/// documents, reading consecutively with wraparound from a random start.
pub fn build_prompt(
    corpus: &CorpusBundle,
    category: usize,
    n_tokens: u64,
    rng: &mut ChaCha20Rng,
) -> Result<String, LoadError> {
    let words = corpus.category_words(category);
    if words.is_empty() {
        return Err(LoadError::EmptyCategory(category));
    }
    let start = rng.gen_range(0..words.len());
    let mut out = Vec::with_capacity(n_tokens as usize);
    for off in 0..n_tokens as usize {
        out.push(words[(start + off) % words.len()].as_str());
    }
    Ok(out.join(" "))
}
