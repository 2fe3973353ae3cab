//! Deterministic virtual-time co-simulation of a full topology.
//!
//! Reuses the exact batching engine, workload sampling and frame rendering of
//! the live TCP stack, but drives everything from one discrete-event loop so
//! a (config, seed) pair reproduces every timestamp bit-for-bit. All reported
//! experiment metrics come from this path; the TCP path exists for protocol
//! and overhead checks.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use rand_chacha::ChaCha20Rng;

use crate::clusterkit::ClusterPipeline;
use crate::loadgen::runner::user_rng;
use crate::loadgen::workload::{build_prompt, sample_category, sample_input_length, WorkloadSpec};
use crate::loadgen::{RunMeta, SessionRecord, TokenEventLog};
use crate::routecore::proto::Frame;
use crate::simbackend::server::token_text;
use crate::simbackend::{BatchEngineState, EngineEvent, EngineRequest, ModelProfile};

use super::corpus::CorpusBundle;
use super::BenchError;

#[derive(Debug, Clone)]
pub struct SimBackend {
    pub cluster: usize,
    pub profile: ModelProfile,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub backends: Vec<SimBackend>,
    pub concurrency: usize,
    pub spec: WorkloadSpec,
    pub seed: u64,
    pub run_id: String,
    pub scenario: String,
    /// constant gateway forwarding cost added to every request (virtual ns)
    pub route_latency_ns: u64,
    /// classification cost, paid only when the topology spans > 1 cluster
    pub classify_latency_ns: u64,
}

impl SimConfig {
    /// Topologies spanning more than one cluster classify each prompt;
    /// single-cluster topologies use a constant route.
    pub fn is_routed(&self) -> bool {
        let first = self.backends.first().map(|b| b.cluster);
        self.backends.iter().any(|b| Some(b.cluster) != first)
    }
}

#[derive(Debug)]
pub struct SimOutcome {
    pub log: TokenEventLog,
    /// backend index (into `SimConfig::backends`) that served each record,
    /// parallel to `log.records`
    pub served_by: Vec<usize>,
}

#[derive(Debug)]
enum Ev {
    Send { user: u32, req_index: u32 },
    Arrive { backend: usize, record: usize },
    Step { backend: usize },
}

// Heap key: (time, kind rank, sequence). Arrivals sort before steps at the
// same instant so a request landing exactly on an iteration boundary joins
// that iteration, and the sequence number makes ties fully deterministic.
struct Pending {
    key: Reverse<(u64, u8, u64)>,
    ev: Ev,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}
impl Eq for Pending {}
impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Pending {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key.cmp(&other.key)
    }
}

fn kind_rank(ev: &Ev) -> u8 {
    match ev {
        Ev::Send { .. } => 0,
        Ev::Arrive { .. } => 1,
        Ev::Step { .. } => 2,
    }
}

struct UserState {
    rng: ChaCha20Rng,
    sent: u32,
}

/// Run one closed-loop experiment entirely in virtual time.
pub fn simulate(
    config: &SimConfig,
    pipeline: &ClusterPipeline,
    corpus: &CorpusBundle,
) -> Result<SimOutcome, BenchError> {
    config.spec.validate()?;
    if config.backends.is_empty() {
        return Err(BenchError::InvalidConfig("no backends".into()));
    }
    if config.concurrency == 0 {
        return Err(BenchError::InvalidConfig("concurrency must be ≥ 1".into()));
    }

    let routed = config.is_routed();
    let mut by_cluster: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, b) in config.backends.iter().enumerate() {
        by_cluster.entry(b.cluster).or_default().push(i);
    }
    let mut rr: BTreeMap<usize, usize> = by_cluster.keys().map(|&c| (c, 0)).collect();

    let mut engines: Vec<BatchEngineState> = config
        .backends
        .iter()
        .enumerate()
        .map(|(i, b)| BatchEngineState::new(b.profile.clone(), config.seed.wrapping_add(i as u64)))
        .collect();
    let mut step_scheduled = vec![false; engines.len()];

    let mut users: Vec<UserState> = (0..config.concurrency as u32)
        .map(|u| UserState { rng: user_rng(config.seed, u), sent: 0 })
        .collect();

    let mut records: Vec<SessionRecord> = Vec::new();
    let mut served_by: Vec<usize> = Vec::new();
    let mut crcs: Vec<crc32fast::Hasher> = Vec::new();
    let mut by_id: HashMap<String, usize> = HashMap::new();

    let mut heap: BinaryHeap<Pending> = BinaryHeap::new();
    let mut seq = 0u64;
    let push = |heap: &mut BinaryHeap<Pending>, seq: &mut u64, t: u64, ev: Ev| {
        heap.push(Pending { key: Reverse((t, kind_rank(&ev), *seq)), ev });
        *seq += 1;
    };

    for u in 0..config.concurrency as u32 {
        push(&mut heap, &mut seq, 0, Ev::Send { user: u, req_index: 0 });
    }

    let mut makespan_ns = 0u64;
    while let Some(Pending { key: Reverse((t, _, _)), ev }) = heap.pop() {
        makespan_ns = makespan_ns.max(t);
        match ev {
            Ev::Send { user, req_index } => {
                let state = &mut users[user as usize];
                let category = sample_category(&config.spec, &mut state.rng);
                let n_tokens = sample_input_length(&config.spec, &mut state.rng);
                let prompt = build_prompt(corpus, category, n_tokens, &mut state.rng)?;
                state.sent += 1;

                let cluster = if routed { pipeline.classify(&prompt) } else {
                    *by_cluster.keys().next().unwrap()
                };
                let candidates = by_cluster.get(&cluster).ok_or_else(|| {
                    BenchError::InvalidConfig(format!("no backend serves cluster {cluster}"))
                })?;
                let counter = rr.get_mut(&cluster).unwrap();
                let backend = candidates[*counter % candidates.len()];
                *counter += 1;

                let request_id = format!("u{user}-r{req_index}");
                let record = records.len();
                by_id.insert(request_id.clone(), record);
                records.push(SessionRecord {
                    user_id: user,
                    request_id,
                    category,
                    input_tokens: n_tokens,
                    t_send_ns: t,
                    token_stamps_ns: Vec::new(),
                    t_end_ns: 0,
                    end_reason: "error".into(),
                    rx_crc32: 0,
                    rx_frames: 0,
                });
                served_by.push(backend);
                crcs.push(crc32fast::Hasher::new());

                let delay = config.route_latency_ns
                    + if routed { config.classify_latency_ns } else { 0 };
                push(&mut heap, &mut seq, t + delay, Ev::Arrive { backend, record });
            }
            Ev::Arrive { backend, record } => {
                let r = &records[record];
                let engine = &mut engines[backend];
                engine
                    .admit(EngineRequest {
                        id: r.request_id.clone(),
                        input_tokens: r.input_tokens,
                        max_tokens: config.spec.max_tokens as u64,
                    })
                    .expect("request ids are unique");
                if !step_scheduled[backend] {
                    engine.advance_clock_to(t);
                    step_scheduled[backend] = true;
                    push(&mut heap, &mut seq, engine.clock_ns(), Ev::Step { backend });
                }
            }
            Ev::Step { backend } => {
                step_scheduled[backend] = false;
                let engine = &mut engines[backend];
                let events = engine.step().expect("step scheduled only when busy");
                for event in events {
                    apply_engine_event(
                        &event,
                        &by_id,
                        &mut records,
                        &mut crcs,
                        &mut |t_end, user| {
                            let state = &users[user as usize];
                            if state.sent < config.spec.requests_per_user {
                                let next = state.sent;
                                push(
                                    &mut heap,
                                    &mut seq,
                                    t_end,
                                    Ev::Send { user, req_index: next },
                                );
                            }
                        },
                    );
                }
                if !engine.is_idle() {
                    step_scheduled[backend] = true;
                    push(&mut heap, &mut seq, engine.clock_ns(), Ev::Step { backend });
                }
            }
        }
    }

    for (record, crc) in crcs.into_iter().enumerate() {
        records[record].rx_crc32 = crc.finalize();
    }

    // stable per-user ordering, same as the TCP load driver
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_by_key(|&i| (records[i].user_id, records[i].request_id.clone()));
    let served_by: Vec<usize> = order.iter().map(|&i| served_by[i]).collect();
    let mut sorted = Vec::with_capacity(records.len());
    let mut taken: Vec<Option<SessionRecord>> = records.into_iter().map(Some).collect();
    for &i in &order {
        sorted.push(taken[i].take().unwrap());
    }

    Ok(SimOutcome {
        log: TokenEventLog {
            meta: RunMeta {
                run_id: config.run_id.clone(),
                concurrency: config.concurrency,
                scenario: config.scenario.clone(),
                seed: config.seed,
                clock: "virtual".into(),
                wall_duration_s: makespan_ns as f64 / 1e9,
                spec: config.spec.clone(),
            },
            records: sorted,
        },
        served_by,
    })
}

fn apply_engine_event(
    event: &EngineEvent,
    by_id: &HashMap<String, usize>,
    records: &mut [SessionRecord],
    crcs: &mut [crc32fast::Hasher],
    on_session_done: &mut dyn FnMut(u64, u32),
) {
    let feed = |crc: &mut crc32fast::Hasher, frame: &Frame| {
        crc.update(frame.to_line().as_bytes());
        crc.update(b"\n");
    };
    match event {
        EngineEvent::Admitted { .. } => {}
        EngineEvent::Token { id, index, t_ns, .. } => {
            let i = by_id[id];
            records[i].token_stamps_ns.push(*t_ns);
            records[i].rx_frames += 1;
            feed(&mut crcs[i], &Frame::tok(id, *index, &token_text(id, *index), *t_ns));
        }
        EngineEvent::Finished { id, n_tokens, reason, t_ns, .. } => {
            let i = by_id[id];
            records[i].t_end_ns = *t_ns;
            records[i].end_reason = reason.as_str().to_string();
            records[i].rx_frames += 1;
            feed(&mut crcs[i], &Frame::end(id, *n_tokens, reason.as_str()));
            on_session_done(*t_ns, records[i].user_id);
        }
        EngineEvent::Rejected { id, code, t_ns } => {
            let i = by_id[id];
            records[i].t_end_ns = *t_ns;
            records[i].end_reason = "error".to_string();
            records[i].rx_frames += 1;
            feed(&mut crcs[i], &Frame::err(id, code, "kv capacity exceeded"));
            on_session_done(*t_ns, records[i].user_id);
        }
    }
}
