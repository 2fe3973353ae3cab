//! A desk-scale testbed for routing-based LLM serving.
//!
//! The crate models a full serving stack without any GPUs involved:
//!
//! * [`clusterkit`] — trainable prompt classifier (TF-IDF → truncated SVD →
//!   standardize → k-means) with a binary on-disk artifact format.
//! * [`routecore`] — streaming reverse-proxy gateway that classifies each
//!   request and relays the token stream from the chosen backend, plus a
//!   connection-level round-robin balancer.
//! * [`simbackend`] — mock inference server: a deterministic in-flight
//!   batching state machine with a prefill/decode latency model and a
//!   KV-cache capacity budget, wrapped by a real TCP streaming server.
//! * [`loadgen`] — closed-loop concurrent user simulator recording per-token
//!   receive timestamps.
//! * [`metricspipe`] — offline analysis of token event logs into TTFT, TPOT,
//!   user throughput, p99 response time and windowed system throughput.
//! * [`benchctl`] — orchestration: corpus ingestion, classifier training,
//!   topology launch, deterministic virtual-time experiments and sweeps.
//!
//! All components speak one wire protocol: newline-delimited JSON frames over
//! TCP (see [`routecore::proto`]). Experiment metrics are computed on the
//! backends' virtual clocks, so full runs are reproducible bit-for-bit from a
//! seed while wall-clock runtime is controlled by a time-scale factor.

pub mod benchctl;
pub mod clusterkit;
pub mod loadgen;
pub mod metricspipe;
pub mod routecore;
pub mod simbackend;

pub use clusterkit::ClusterPipeline;
pub use simbackend::ModelProfile;
