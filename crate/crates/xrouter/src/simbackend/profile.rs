//! Capacity and latency parameterization of one simulated backend.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EngineError;

/// One backend's capacity/latency model.
///
/// Memory figures size the KV budget, the `*_ns` coefficients drive the
/// affine latency model, and `eos_prob` shapes output lengths. Data formats
/// (FP16/FP8/INT4) are represented purely through these numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelProfile {
    pub name: String,
    pub tp_degree: u32,
    pub weights_gb: f64,
    pub kv_cache_gb: f64,
    /// maximum in-flight batch size (B_S)
    pub max_batch: usize,
    pub kv_tokens_per_gb: f64,
    pub prefill_coef_ns_per_token: f64,
    pub prefill_base_ns: f64,
    pub decode_base_ns: f64,
    pub decode_batch_coef_ns: f64,
    pub tp_comm_overhead_ns: f64,
    /// per-token stop probability in (0, 1]
    pub eos_prob: f64,
    #[serde(default = "default_max_output_tokens")]
    pub max_output_tokens: u64,
}

fn default_max_output_tokens() -> u64 {
    1000
}

impl ModelProfile {
    pub fn validate(&self) -> Result<(), EngineError> {
        let ok = self.tp_degree >= 1
            && self.max_batch >= 1
            && self.weights_gb >= 0.0
            && self.kv_cache_gb >= 0.0
            && self.kv_tokens_per_gb >= 0.0
            && self.prefill_coef_ns_per_token >= 0.0
            && self.prefill_base_ns >= 0.0
            && self.decode_base_ns >= 0.0
            && self.decode_batch_coef_ns >= 0.0
            && self.tp_comm_overhead_ns >= 0.0
            && self.eos_prob > 0.0
            && self.eos_prob <= 1.0
            && self.max_output_tokens >= 1;
        if ok {
            Ok(())
        } else {
            Err(EngineError::InvalidProfile(self.name.clone()))
        }
    }

    pub fn load(path: &Path) -> Result<ModelProfile, EngineError> {
        let text = std::fs::read_to_string(path)?;
        let p: ModelProfile =
            serde_json::from_str(&text).map_err(|e| EngineError::InvalidProfile(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn save(&self, path: &Path) -> Result<(), EngineError> {
        std::fs::write(path, serde_json::to_string_pretty(self).expect("serializes"))?;
        Ok(())
    }

    /// KV budget in tokens: floor(kv_cache_gb × kv_tokens_per_gb).
    pub fn kv_capacity_tokens(&self) -> u64 {
        (self.kv_cache_gb * self.kv_tokens_per_gb).floor() as u64
    }

    /// Prefill duration for `n_input` tokens. Tensor parallelism divides the
    /// per-token term only.
    pub fn prefill_time_ns(&self, n_input: u64) -> u64 {
        let t = self.prefill_base_ns
            + self.prefill_coef_ns_per_token * n_input as f64 / self.tp_degree as f64;
        t.round() as u64
    }

    /// Duration of one engine iteration at `batch_size`, including the
    /// piggybacked prefill of requests admitted at this boundary
    /// (`joining_prefill_tokens` is `None` when nothing joined).
    pub fn iteration_time_ns(&self, batch_size: usize, joining_prefill_tokens: Option<u64>) -> u64 {
        assert!(batch_size >= 1);
        let decode = self.decode_base_ns
            + self.decode_batch_coef_ns * batch_size as f64
            + self.tp_comm_overhead_ns * (self.tp_degree - 1) as f64;
        let prefill = joining_prefill_tokens.map_or(0, |n| self.prefill_time_ns(n));
        decode.round() as u64 + prefill
    }
}
