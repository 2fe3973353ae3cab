//! Streaming gateway: classify one request per connection, forward it to the
//! routed backend, and relay the token stream back verbatim.

use std::io::{BufReader, Write};
use std::net::TcpStream;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use crate::clusterkit::ClusterPipeline;

use super::net::{spawn_listener, ServerHandle};
use super::proto::{read_line, write_frame, Frame, ProtoError};
use super::routes::RouteTable;

#[derive(Debug, Clone)]
pub struct GatewayConfig {
    pub listen: String,
    pub max_sessions: usize,
    pub idle_timeout: Duration,
    /// optional shared collector of per-request routing latencies
    pub stats: Option<Arc<RoutingStats>>,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig {
            listen: "127.0.0.1:0".into(),
            max_sessions: 2048,
            idle_timeout: Duration::from_secs(30),
            stats: None,
        }
    }
}

/// Per-request routing latency samples, shared across gateway instances.
///
/// A sample covers the work the gateway adds on the request path: classify
/// the prompt, look up the route, dial the backend and forward the request.
/// Relaying the token stream is excluded; it is paced by the backend.
#[derive(Debug, Default)]
pub struct RoutingStats {
    samples: Mutex<Vec<f64>>,
}

impl RoutingStats {
    pub fn new() -> Arc<RoutingStats> {
        Arc::new(RoutingStats::default())
    }

    fn record(&self, seconds: f64) {
        self.samples.lock().expect("stats lock").push(seconds);
    }

    /// All samples recorded so far, in completion order.
    pub fn snapshot(&self) -> Vec<f64> {
        self.samples.lock().expect("stats lock").clone()
    }
}

struct SessionSlot {
    active: Arc<AtomicUsize>,
}

impl SessionSlot {
    fn acquire(active: &Arc<AtomicUsize>, max: usize) -> Option<SessionSlot> {
        let prev = active.fetch_add(1, Ordering::SeqCst);
        if prev >= max {
            active.fetch_sub(1, Ordering::SeqCst);
            return None;
        }
        Some(SessionSlot { active: Arc::clone(active) })
    }
}

impl Drop for SessionSlot {
    fn drop(&mut self) {
        self.active.fetch_sub(1, Ordering::SeqCst);
    }
}

/// Spawn one gateway instance. The pipeline and route table are shared
/// immutable state; each accepted connection runs one session.
pub fn spawn_gateway(
    config: GatewayConfig,
    pipeline: Arc<ClusterPipeline>,
    routes: Arc<RouteTable>,
) -> std::io::Result<ServerHandle> {
    let active = Arc::new(AtomicUsize::new(0));
    let max_sessions = config.max_sessions;
    let idle_timeout = config.idle_timeout;
    let stats = config.stats;
    spawn_listener(&config.listen, "gateway", move |downstream| {
        let slot = SessionSlot::acquire(&active, max_sessions);
        handle_session(downstream, slot, &pipeline, &routes, idle_timeout, stats.as_deref());
    })
}

fn handle_session(
    downstream: TcpStream,
    slot: Option<SessionSlot>,
    pipeline: &ClusterPipeline,
    routes: &RouteTable,
    idle_timeout: Duration,
    stats: Option<&RoutingStats>,
) {
    let mut down_write = match downstream.try_clone() {
        Ok(s) => s,
        Err(_) => return,
    };
    let _ = downstream.set_read_timeout(Some(idle_timeout));
    let mut down_read = BufReader::new(downstream);

    let _slot = match slot {
        Some(s) => s,
        None => {
            let _ = write_frame(&mut down_write, &Frame::err("", "overloaded", "session limit reached"));
            return;
        }
    };

    let req = match read_line(&mut down_read).map_err(ProtoError::from).and_then(|l| Frame::parse_line(&l)) {
        Ok(Frame::Req(r)) => r,
        Ok(_) => {
            let _ = write_frame(&mut down_write, &Frame::err("", "bad_request", "expected req frame"));
            return;
        }
        Err(e) => {
            let _ = write_frame(&mut down_write, &Frame::err("", "bad_request", &e.to_string()));
            return;
        }
    };

    let route_start = Instant::now();

    // Single-cluster tables are a constant route (baseline topologies);
    // otherwise classify the prompt.
    let cluster = match routes.single_cluster() {
        Some(c) => c,
        None => pipeline.classify(&req.prompt),
    };
    let endpoint = match routes.route_lookup(cluster) {
        Ok(e) => e.to_string(),
        Err(e) => {
            let _ = write_frame(&mut down_write, &Frame::err(&req.id, "no_route", &e.to_string()));
            return;
        }
    };

    let upstream = match TcpStream::connect(&endpoint) {
        Ok(s) => s,
        Err(e) => {
            let _ = write_frame(
                &mut down_write,
                &Frame::err(&req.id, "upstream_unavailable", &format!("dial {endpoint}: {e}")),
            );
            return;
        }
    };
    let mut up_write = match upstream.try_clone() {
        Ok(s) => s,
        Err(_) => {
            let _ = write_frame(&mut down_write, &Frame::err(&req.id, "upstream_unavailable", "clone failed"));
            return;
        }
    };
    let mut up_read = BufReader::new(upstream);

    let mut forwarded = req.clone();
    forwarded.cluster = Some(cluster);
    if write_frame(&mut up_write, &Frame::Req(forwarded)).is_err() {
        let _ = write_frame(&mut down_write, &Frame::err(&req.id, "upstream_unavailable", "send failed"));
        return;
    }
    if let Some(stats) = stats {
        stats.record(route_start.elapsed().as_secs_f64());
    }

    // Relay loop: one frame in flight at a time. The downstream write
    // completes before the next upstream read, so a slow client throttles
    // the gateway instead of growing a buffer.
    loop {
        let line = match read_line(&mut up_read) {
            Ok(l) => l,
            Err(ProtoError::Closed) => break,
            Err(_) => {
                let _ = write_frame(&mut down_write, &Frame::err(&req.id, "upstream_unavailable", "relay read failed"));
                break;
            }
        };
        if down_write.write_all(line.as_bytes()).is_err()
            || down_write.write_all(b"\n").is_err()
            || down_write.flush().is_err()
        {
            break;
        }
        if let Ok(frame) = Frame::parse_line(&line) {
            if frame.is_final() {
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clusterkit::TrainParams;
    use crate::routecore::proto::read_frame;
    use std::collections::BTreeMap;
    use std::io::BufRead;

    fn test_pipeline() -> Arc<ClusterPipeline> {
        let corpus: Vec<String> = vec![
            "engine torque piston crankshaft ignition".into(),
            "piston engine turbo ignition valve".into(),
            "sonata violin orchestra melody chord".into(),
            "melody chord violin tempo rhythm".into(),
            "torque valve engine camshaft piston".into(),
            "rhythm tempo orchestra sonata chord".into(),
        ];
        Arc::new(ClusterPipeline::fit(&corpus, &TrainParams { k: 2, dim: 4, seed: 2 }).unwrap())
    }

    /// Backend stub that records the req frame it received and plays back a
    /// fixed token stream.
    fn stub_backend(tokens: usize) -> (ServerHandle, std::sync::mpsc::Receiver<String>) {
        let (tx, rx) = std::sync::mpsc::channel::<String>();
        let handle = spawn_listener("127.0.0.1:0", "stub", move |stream| {
            let mut writer = stream.try_clone().unwrap();
            let mut reader = BufReader::new(stream);
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            let req = match Frame::parse_line(line.trim()).unwrap() {
                Frame::Req(r) => r,
                _ => panic!("expected req"),
            };
            tx.send(line.trim().to_string()).unwrap();
            for i in 0..tokens {
                write_frame(&mut writer, &Frame::tok(&req.id, i as u64, "w", 1000 + i as u64)).unwrap();
            }
            write_frame(&mut writer, &Frame::end(&req.id, tokens as u64, "eos")).unwrap();
        })
        .unwrap();
        (handle, rx)
    }

    fn routes_to(endpoint: &str, clusters: &[usize]) -> Arc<RouteTable> {
        let entries: BTreeMap<usize, Vec<String>> =
            clusters.iter().map(|&c| (c, vec![endpoint.to_string()])).collect();
        Arc::new(RouteTable::new(entries).unwrap())
    }

    #[test]
    fn relays_stream_and_augments_cluster() {
        let pipeline = test_pipeline();
        let (backend, rx) = stub_backend(3);
        let routes = routes_to(&backend.endpoint(), &[0, 1]);
        let gw = spawn_gateway(GatewayConfig::default(), Arc::clone(&pipeline), routes).unwrap();

        let prompt = "crankshaft piston torque";
        let expected_cluster = pipeline.classify(prompt);

        let stream = TcpStream::connect(gw.addr()).unwrap();
        let mut w = stream.try_clone().unwrap();
        let mut r = BufReader::new(stream);
        write_frame(&mut w, &Frame::req("r1", prompt, 100)).unwrap();

        let mut got = Vec::new();
        loop {
            let f = read_frame(&mut r).unwrap();
            let done = f.is_final();
            got.push(f);
            if done {
                break;
            }
        }
        assert_eq!(got.len(), 4);
        assert_eq!(got[0], Frame::tok("r1", 0, "w", 1000));
        assert_eq!(got[3], Frame::end("r1", 3, "eos"));

        let upstream_req = rx.recv().unwrap();
        match Frame::parse_line(&upstream_req).unwrap() {
            Frame::Req(r) => assert_eq!(r.cluster, Some(expected_cluster)),
            other => panic!("unexpected {other:?}"),
        }

        gw.shutdown();
        backend.shutdown();
    }

    #[test]
    fn dead_backend_yields_upstream_unavailable() {
        let pipeline = test_pipeline();
        // Bind then drop a listener so the port is closed.
        let dead = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        let dead_ep = dead.local_addr().unwrap().to_string();
        drop(dead);
        let routes = routes_to(&dead_ep, &[0, 1]);
        let gw = spawn_gateway(GatewayConfig::default(), pipeline, routes).unwrap();

        let stream = TcpStream::connect(gw.addr()).unwrap();
        let mut w = stream.try_clone().unwrap();
        let mut r = BufReader::new(stream);
        write_frame(&mut w, &Frame::req("r1", "anything", 10)).unwrap();
        match read_frame(&mut r).unwrap() {
            Frame::Err(e) => assert_eq!(e.code, "upstream_unavailable"),
            other => panic!("unexpected {other:?}"),
        }
        gw.shutdown();
    }

    #[test]
    fn malformed_request_rejected() {
        let pipeline = test_pipeline();
        let (backend, _rx) = stub_backend(1);
        let routes = routes_to(&backend.endpoint(), &[0, 1]);
        let gw = spawn_gateway(GatewayConfig::default(), pipeline, routes).unwrap();

        let stream = TcpStream::connect(gw.addr()).unwrap();
        let mut w = stream.try_clone().unwrap();
        let mut r = BufReader::new(stream);
        w.write_all(b"this is not json\n").unwrap();
        w.flush().unwrap();
        match read_frame(&mut r).unwrap() {
            Frame::Err(e) => assert_eq!(e.code, "bad_request"),
            other => panic!("unexpected {other:?}"),
        }
        gw.shutdown();
        backend.shutdown();
    }

    #[test]
    fn session_limit_overloaded() {
        let pipeline = test_pipeline();
        let (backend, _rx) = stub_backend(1);
        let routes = routes_to(&backend.endpoint(), &[0, 1]);
        let cfg = GatewayConfig { max_sessions: 0, ..GatewayConfig::default() };
        let gw = spawn_gateway(cfg, pipeline, routes).unwrap();

        let stream = TcpStream::connect(gw.addr()).unwrap();
        let mut r = BufReader::new(stream);
        match read_frame(&mut r).unwrap() {
            Frame::Err(e) => assert_eq!(e.code, "overloaded"),
            other => panic!("unexpected {other:?}"),
        }
        gw.shutdown();
        backend.shutdown();
    }

    #[test]
    fn single_cluster_table_skips_classification() {
        let pipeline = test_pipeline();
        let (backend, rx) = stub_backend(1);
        let routes = routes_to(&backend.endpoint(), &[0]);
        let gw = spawn_gateway(GatewayConfig::default(), pipeline, routes).unwrap();

        let stream = TcpStream::connect(gw.addr()).unwrap();
        let mut w = stream.try_clone().unwrap();
        let mut r = BufReader::new(stream);
        write_frame(&mut w, &Frame::req("r1", "violin melody tempo", 10)).unwrap();
        loop {
            if read_frame(&mut r).unwrap().is_final() {
                break;
            }
        }
        match Frame::parse_line(&rx.recv().unwrap()).unwrap() {
            Frame::Req(req) => assert_eq!(req.cluster, Some(0)),
            other => panic!("unexpected {other:?}"),
        }
        gw.shutdown();
        backend.shutdown();
    }
}
