//! Closed-loop load driver over real TCP.

use std::io::BufReader;
use std::net::TcpStream;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::benchctl::corpus::CorpusBundle;
use crate::routecore::proto::{read_line, write_frame, Frame};

use super::log::{RunMeta, SessionRecord, TokenEventLog};
use super::workload::{build_prompt, sample_category, sample_input_length, WorkloadSpec};
use super::LoadError;

#[derive(Debug, Clone)]
pub struct LoadConfig {
    /// host:port of the gateway or backend to drive
    pub target: String,
    /// number of concurrent closed-loop users
    pub concurrency: usize,
    pub spec: WorkloadSpec,
    pub seed: u64,
    pub run_id: String,
    pub scenario: String,
    /// per-session socket read timeout
    pub timeout: Duration,
}

impl LoadConfig {
    pub fn new(target: &str, concurrency: usize, spec: WorkloadSpec, seed: u64) -> LoadConfig {
        LoadConfig {
            target: target.to_string(),
            concurrency,
            spec,
            seed,
            run_id: format!("load-{seed}-{concurrency}"),
            scenario: "loadgen".to_string(),
            timeout: Duration::from_secs(120),
        }
    }
}

/// Decorrelates per-user rng streams from one run seed.
pub fn user_rng(seed: u64, user_id: u32) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed ^ (user_id as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Run `concurrency` users against `config.target`, each performing
/// `requests_per_user` sequential send-wait-receive sessions. All timestamps
/// are nanoseconds since a single epoch taken before the first user starts.
pub fn run_load(config: &LoadConfig, corpus: &CorpusBundle) -> Result<TokenEventLog, LoadError> {
    config.spec.validate()?;
    if config.concurrency == 0 {
        return Err(LoadError::InvalidSpec("concurrency must be ≥ 1".into()));
    }

    let epoch = Instant::now();
    let corpus = Arc::new(corpus.clone());
    let mut handles = Vec::with_capacity(config.concurrency);
    for user_id in 0..config.concurrency as u32 {
        let config = config.clone();
        let corpus = Arc::clone(&corpus);
        handles.push(std::thread::spawn(move || run_user(&config, &corpus, user_id, epoch)));
    }

    let mut records = Vec::new();
    for h in handles {
        records.extend(h.join().expect("user thread panicked")?);
    }
    records.sort_by_key(|r| (r.user_id, r.request_id.clone()));

    let failed = records.iter().filter(|r| r.end_reason == "error").count();
    if 2 * failed > records.len() {
        return Err(LoadError::TooManyFailures { failed, total: records.len() });
    }

    Ok(TokenEventLog {
        meta: RunMeta {
            run_id: config.run_id.clone(),
            concurrency: config.concurrency,
            scenario: config.scenario.clone(),
            seed: config.seed,
            clock: "monotonic".to_string(),
            wall_duration_s: epoch.elapsed().as_secs_f64(),
            spec: config.spec.clone(),
        },
        records,
    })
}

fn run_user(
    config: &LoadConfig,
    corpus: &CorpusBundle,
    user_id: u32,
    epoch: Instant,
) -> Result<Vec<SessionRecord>, LoadError> {
    let mut rng = user_rng(config.seed, user_id);
    let mut records = Vec::with_capacity(config.spec.requests_per_user as usize);
    for r in 0..config.spec.requests_per_user {
        let category = sample_category(&config.spec, &mut rng);
        let n_tokens = sample_input_length(&config.spec, &mut rng);
        let prompt = build_prompt(corpus, category, n_tokens, &mut rng)?;
        let request_id = format!("u{user_id}-r{r}");
        records.push(run_session(
            config, &request_id, user_id, category, n_tokens, &prompt, epoch,
        ));
    }
    Ok(records)
}

fn run_session(
    config: &LoadConfig,
    request_id: &str,
    user_id: u32,
    category: usize,
    input_tokens: u64,
    prompt: &str,
    epoch: Instant,
) -> SessionRecord {
    let mut record = SessionRecord {
        user_id,
        request_id: request_id.to_string(),
        category,
        input_tokens,
        t_send_ns: 0,
        token_stamps_ns: Vec::new(),
        t_end_ns: 0,
        end_reason: "error".to_string(),
        rx_crc32: 0,
        rx_frames: 0,
    };
    match stream_session(config, request_id, prompt, epoch, &mut record) {
        Ok(()) => {}
        Err(_) => {
            record.end_reason = "error".to_string();
            record.t_end_ns = now_ns(epoch);
        }
    }
    record
}

fn stream_session(
    config: &LoadConfig,
    request_id: &str,
    prompt: &str,
    epoch: Instant,
    record: &mut SessionRecord,
) -> Result<(), LoadError> {
    let stream = TcpStream::connect(&config.target)?;
    stream.set_read_timeout(Some(config.timeout))?;
    stream.set_nodelay(true).ok();
    let mut writer = stream.try_clone()?;
    let mut reader = BufReader::new(stream);

    record.t_send_ns = now_ns(epoch);
    write_frame(&mut writer, &Frame::req(request_id, prompt, config.spec.max_tokens))?;

    let mut crc = crc32fast::Hasher::new();
    loop {
        let line = read_line(&mut reader)
            .map_err(|e| LoadError::InvalidSpec(format!("{request_id}: {e}")))?;
        let stamp = now_ns(epoch);
        crc.update(line.as_bytes());
        crc.update(b"\n");
        record.rx_frames += 1;
        let frame = Frame::parse_line(&line)
            .map_err(|e| LoadError::InvalidSpec(format!("{request_id}: {e}")))?;
        match frame {
            Frame::Tok(_) => record.token_stamps_ns.push(stamp),
            Frame::End(end) => {
                record.t_end_ns = stamp;
                record.end_reason = end.reason;
                break;
            }
            Frame::Err(_) => {
                record.t_end_ns = stamp;
                record.end_reason = "error".to_string();
                break;
            }
            Frame::Req(_) => {
                return Err(LoadError::InvalidSpec(format!("{request_id}: req frame echoed back")))
            }
        }
    }
    record.rx_crc32 = crc.finalize();
    Ok(())
}

fn now_ns(epoch: Instant) -> u64 {
    epoch.elapsed().as_nanos() as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loadgen::workload::InputLengthDistribution;
    use crate::simbackend::{serve, BackendConfig, ModelProfile};
    use rand::Rng;

    fn quick_profile() -> ModelProfile {
        ModelProfile {
            name: "test".into(),
            tp_degree: 1,
            weights_gb: 1.0,
            kv_cache_gb: 4.0,
            max_batch: 64,
            kv_tokens_per_gb: 10_000.0,
            prefill_coef_ns_per_token: 10_000.0,
            prefill_base_ns: 1_000_000.0,
            decode_base_ns: 2_000_000.0,
            decode_batch_coef_ns: 50_000.0,
            tp_comm_overhead_ns: 0.0,
            eos_prob: 0.08,
            max_output_tokens: 40,
        }
    }

    fn quick_spec() -> WorkloadSpec {
        WorkloadSpec {
            input_length_distribution: InputLengthDistribution::Normal {
                mean: 20.0,
                std: 4.0,
                min: 4,
            },
            requests_per_user: 2,
            max_tokens: 40,
            ..WorkloadSpec::default()
        }
    }

    #[test]
    fn closed_loop_against_backend() {
        let server = serve(
            quick_profile(),
            BackendConfig {
                listen: "127.0.0.1:0".into(),
                time_scale: 0.001,
                seed: 11,
                log_path: None,
            },
        )
        .unwrap();
        let corpus = CorpusBundle::synthetic_for_tests();
        let config = LoadConfig::new(&server.endpoint(), 4, quick_spec(), 9);
        let log = run_load(&config, &corpus).unwrap();
        server.shutdown();

        assert_eq!(log.records.len(), 8);
        for r in &log.records {
            assert!(r.end_reason == "eos" || r.end_reason == "cap", "{:?}", r.end_reason);
            assert!(!r.token_stamps_ns.is_empty());
            assert!(r.t_send_ns < r.token_stamps_ns[0]);
            assert!(r.token_stamps_ns.windows(2).all(|w| w[0] <= w[1]));
            assert_eq!(r.t_end_ns >= *r.token_stamps_ns.last().unwrap(), true);
            assert_eq!(r.rx_frames as usize, r.token_stamps_ns.len() + 1);
            assert_ne!(r.rx_crc32, 0);
        }
        // closed loop: each user's second request starts after its first ends
        for u in 0..4 {
            let first = log.records.iter().find(|r| r.request_id == format!("u{u}-r0")).unwrap();
            let second = log.records.iter().find(|r| r.request_id == format!("u{u}-r1")).unwrap();
            assert!(second.t_send_ns >= first.t_end_ns);
        }
    }

    #[test]
    fn dead_target_yields_error_sessions() {
        let corpus = CorpusBundle::synthetic_for_tests();
        let spec = WorkloadSpec { requests_per_user: 1, ..quick_spec() };
        let config = LoadConfig::new("127.0.0.1:1", 2, spec, 1);
        match run_load(&config, &corpus) {
            Err(LoadError::TooManyFailures { failed: 2, total: 2 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn user_rng_streams_differ() {
        let mut a = user_rng(5, 0);
        let mut b = user_rng(5, 1);
        let xs: Vec<u64> = (0..4).map(|_| a.gen()).collect();
        let ys: Vec<u64> = (0..4).map(|_| b.gen()).collect();
        assert_ne!(xs, ys);
    }
}
