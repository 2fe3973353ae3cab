//! Declarative experiment and sweep descriptions.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::loadgen::WorkloadSpec;
use crate::simbackend::ModelProfile;

use super::corpus::NUM_CATEGORIES;
use super::sim::SimBackend;
use super::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Topology {
    #[serde(rename = "baseline_A")]
    BaselineA,
    #[serde(rename = "baseline_B")]
    BaselineB,
    #[serde(rename = "baseline_C")]
    BaselineC,
    #[serde(rename = "expert_D")]
    ExpertD,
    #[serde(rename = "expert_E")]
    ExpertE,
    #[serde(rename = "custom")]
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendSpec {
    pub cluster: usize,
    pub profile: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: String,
    pub topology: Topology,
    /// profile files by letter key ("a".."e"); the named topologies look
    /// their profile up here
    #[serde(default)]
    pub profiles: BTreeMap<String, PathBuf>,
    /// explicit backend list, custom topology only
    #[serde(default)]
    pub backends: Vec<BackendSpec>,
    pub artifact: PathBuf,
    pub corpus: PathBuf,
    #[serde(default = "default_gateway_instances")]
    pub gateway_instances: usize,
    #[serde(default = "default_concurrency_levels")]
    pub concurrency_levels: Vec<usize>,
    #[serde(default)]
    pub workload: WorkloadSpec,
    #[serde(default = "default_repeats")]
    pub repeats: u32,
    #[serde(default = "default_time_scale")]
    pub time_scale: f64,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default = "default_window_s")]
    pub window_s: f64,
    #[serde(default = "default_route_latency_ns")]
    pub route_latency_ns: u64,
    #[serde(default = "default_classify_latency_ns")]
    pub classify_latency_ns: u64,
    /// also measure live gateway overhead (TCP) at each level
    #[serde(default)]
    pub live_overhead_check: bool,
}

fn default_gateway_instances() -> usize {
    16
}
fn default_concurrency_levels() -> Vec<usize> {
    vec![50, 100, 200]
}
fn default_repeats() -> u32 {
    1
}
fn default_time_scale() -> f64 {
    0.001
}
fn default_window_s() -> f64 {
    2.0
}
fn default_route_latency_ns() -> u64 {
    200_000
}
fn default_classify_latency_ns() -> u64 {
    100_000_000
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<ExperimentConfig, BenchError> {
        let text = std::fs::read_to_string(path)?;
        let cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| BenchError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<(), BenchError> {
        std::fs::write(path, serde_json::to_string_pretty(self).expect("config"))?;
        Ok(())
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.concurrency_levels.is_empty() {
            return Err(BenchError::InvalidConfig("no concurrency levels".into()));
        }
        if self.concurrency_levels.windows(2).any(|w| w[0] >= w[1])
            || self.concurrency_levels[0] == 0
        {
            return Err(BenchError::InvalidConfig(
                "concurrency levels must be positive and strictly ascending".into(),
            ));
        }
        if self.repeats == 0 {
            return Err(BenchError::InvalidConfig("repeats must be ≥ 1".into()));
        }
        if !(self.time_scale > 0.0) {
            return Err(BenchError::InvalidConfig("time_scale must be > 0".into()));
        }
        if self.gateway_instances == 0 {
            return Err(BenchError::InvalidConfig("gateway_instances must be ≥ 1".into()));
        }
        if self.window_s <= 0.0 {
            return Err(BenchError::InvalidConfig("window_s must be > 0".into()));
        }
        if self.topology == Topology::Custom && self.backends.is_empty() {
            return Err(BenchError::InvalidConfig("custom topology needs backends".into()));
        }
        self.workload.validate()?;
        Ok(())
    }

    fn named_profile(&self, key: &str) -> Result<ModelProfile, BenchError> {
        let path = self.profiles.get(key).ok_or_else(|| {
            BenchError::InvalidConfig(format!("topology needs profiles[{key:?}]"))
        })?;
        Ok(ModelProfile::load(path)?)
    }

    /// Instantiate the backend set this topology describes: baselines are a
    /// single cluster-0 backend, expert topologies one backend per cluster.
    pub fn resolve_backends(&self) -> Result<Vec<SimBackend>, BenchError> {
        let expert = |p: ModelProfile| {
            (0..NUM_CATEGORIES).map(|c| SimBackend { cluster: c, profile: p.clone() }).collect()
        };
        Ok(match self.topology {
            Topology::BaselineA => {
                vec![SimBackend { cluster: 0, profile: self.named_profile("a")? }]
            }
            Topology::BaselineB => {
                vec![SimBackend { cluster: 0, profile: self.named_profile("b")? }]
            }
            // C runs as two identical instances sharing cluster 0 traffic.
            Topology::BaselineC => {
                let p = self.named_profile("c")?;
                vec![
                    SimBackend { cluster: 0, profile: p.clone() },
                    SimBackend { cluster: 0, profile: p },
                ]
            }
            Topology::ExpertD => expert(self.named_profile("d")?),
            Topology::ExpertE => expert(self.named_profile("e")?),
            Topology::Custom => {
                let mut out = Vec::with_capacity(self.backends.len());
                for b in &self.backends {
                    out.push(SimBackend {
                        cluster: b.cluster,
                        profile: ModelProfile::load(&b.profile)?,
                    });
                }
                out
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepVariant {
    pub name: String,
    pub profile: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    #[serde(default = "default_batch_sizes")]
    pub batch_sizes: Vec<usize>,
    pub variants: Vec<SweepVariant>,
    #[serde(default = "default_tp_degrees")]
    pub tp_degrees: Vec<u32>,
    #[serde(default = "default_sweep_concurrency")]
    pub concurrency_levels: Vec<usize>,
    #[serde(default = "default_answer_cap")]
    pub answer_cap: u32,
    #[serde(default = "default_input_mean")]
    pub input_mean: f64,
    #[serde(default = "default_input_std")]
    pub input_std: f64,
    #[serde(default = "default_sweep_repeats")]
    pub repeats: u32,
    #[serde(default)]
    pub seed: u64,
    pub corpus: PathBuf,
    pub artifact: PathBuf,
    pub output_dir: PathBuf,
}

fn default_batch_sizes() -> Vec<usize> {
    vec![20, 100, 200, 400, 600]
}
fn default_tp_degrees() -> Vec<u32> {
    vec![4, 8]
}
fn default_sweep_concurrency() -> Vec<usize> {
    vec![100, 200, 300, 400, 500]
}
fn default_answer_cap() -> u32 {
    200
}
fn default_input_mean() -> f64 {
    335.0
}
fn default_input_std() -> f64 {
    30.0
}
fn default_sweep_repeats() -> u32 {
    5
}

impl SweepConfig {
    pub fn load(path: &Path) -> Result<SweepConfig, BenchError> {
        let text = std::fs::read_to_string(path)?;
        let cfg: SweepConfig =
            serde_json::from_str(&text).map_err(|e| BenchError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.batch_sizes.is_empty()
            || self.variants.is_empty()
            || self.tp_degrees.is_empty()
            || self.concurrency_levels.is_empty()
        {
            return Err(BenchError::InvalidConfig("sweep lists must be non-empty".into()));
        }
        if self.repeats == 0 || self.answer_cap == 0 {
            return Err(BenchError::InvalidConfig("repeats and answer_cap must be ≥ 1".into()));
        }
        Ok(())
    }
}
