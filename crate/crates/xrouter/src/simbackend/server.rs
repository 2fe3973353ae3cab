//! Real-time TCP wrapper around the batching engine.
//!
//! Sessions feed requests to a single driver thread through a channel; the
//! driver owns the engine, executes one iteration at a time and sleeps
//! `dt × time_scale` of wall time per iteration. Token frames carry the
//! virtual clock, so metric timestamps are independent of the time scale.

use std::collections::HashMap;
use std::io::{BufReader, BufWriter, Write};
use std::net::TcpStream;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{channel, Receiver, Sender};
use std::sync::Arc;
use std::time::Duration;

use crate::routecore::net::{spawn_listener, ServerHandle};
use crate::routecore::proto::{read_frame, write_frame, Frame};

use super::engine::{BatchEngineState, EngineEvent, EngineRequest};
use super::profile::ModelProfile;
use super::EngineError;

/// Deterministic synthetic token text for (request id, token index).
///
/// Downstream components can reconstruct the exact frame bytes from a
/// backend's diagnostic log, which is how relay transparency is verified.
pub fn token_text(id: &str, index: u64) -> String {
    const WORDS: &[&str] = &[
        "alpha", "bravo", "delta", "echo", "foxtrot", "golf", "hotel", "india", "juliet", "kilo",
        "lima", "mike", "november", "oscar", "papa", "quebec", "romeo", "sierra", "tango",
        "uniform", "victor", "whiskey", "xray", "yankee", "zulu",
    ];
    let mut h: u64 = 0xcbf29ce484222325;
    for b in id.bytes().chain(index.to_le_bytes()) {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    WORDS[(h % WORDS.len() as u64) as usize].to_string()
}

pub struct BackendConfig {
    pub listen: String,
    pub time_scale: f64,
    pub seed: u64,
    /// optional diagnostic event log (CSV)
    pub log_path: Option<PathBuf>,
}

enum DriverMsg {
    Admit { req: EngineRequest, events: Sender<Frame> },
    Wake,
}

/// A running backend: TCP listener plus the engine driver thread.
pub struct BackendServer {
    listener: ServerHandle,
    stop: Arc<AtomicBool>,
    driver_tx: Sender<DriverMsg>,
    driver: Option<std::thread::JoinHandle<()>>,
}

impl BackendServer {
    pub fn addr(&self) -> std::net::SocketAddr {
        self.listener.addr()
    }

    pub fn endpoint(&self) -> String {
        self.listener.endpoint()
    }

    pub fn shutdown(mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = self.driver_tx.send(DriverMsg::Wake);
        if let Some(d) = self.driver.take() {
            let _ = d.join();
        }
        self.listener.shutdown();
    }
}

/// Start serving `profile` on `config.listen`.
pub fn serve(profile: ModelProfile, config: BackendConfig) -> Result<BackendServer, EngineError> {
    profile.validate()?;
    assert!(config.time_scale > 0.0, "time_scale must be positive");
    let (driver_tx, driver_rx) = channel::<DriverMsg>();
    let stop = Arc::new(AtomicBool::new(false));

    let engine = BatchEngineState::new(profile, config.seed);
    let stop_driver = Arc::clone(&stop);
    let time_scale = config.time_scale;
    let log_path = config.log_path.clone();
    let driver = std::thread::Builder::new()
        .name("backend-driver".into())
        .spawn(move || drive(engine, driver_rx, stop_driver, time_scale, log_path))?;

    let session_tx = driver_tx.clone();
    let listener = spawn_listener(&config.listen, "backend", move |stream| {
        handle_session(stream, session_tx.clone());
    })?;

    Ok(BackendServer { listener, stop, driver_tx, driver: Some(driver) })
}

fn handle_session(stream: TcpStream, driver_tx: Sender<DriverMsg>) {
    let mut writer = match stream.try_clone() {
        Ok(s) => BufWriter::new(s),
        Err(_) => return,
    };
    let mut reader = BufReader::new(stream);
    let req = match read_frame(&mut reader) {
        Ok(Frame::Req(r)) => r,
        Ok(_) => {
            let _ = write_frame(&mut writer, &Frame::err("", "bad_request", "expected req frame"));
            return;
        }
        Err(e) => {
            let _ = write_frame(&mut writer, &Frame::err("", "bad_request", &e.to_string()));
            return;
        }
    };

    // Prompt length in whitespace words is the simulated input token count.
    let input_tokens = req.prompt.split_whitespace().count() as u64;
    let (events_tx, events_rx) = channel::<Frame>();
    let engine_req = EngineRequest {
        id: req.id.clone(),
        input_tokens,
        max_tokens: req.max_tokens as u64,
    };
    if driver_tx.send(DriverMsg::Admit { req: engine_req, events: events_tx }).is_err() {
        let _ = write_frame(&mut writer, &Frame::err(&req.id, "upstream_unavailable", "engine stopped"));
        return;
    }

    for frame in events_rx {
        let done = frame.is_final();
        if write_frame(&mut writer, &frame).is_err() {
            break;
        }
        if done {
            break;
        }
    }
}

struct DiagLog {
    writer: Option<BufWriter<std::fs::File>>,
}

impl DiagLog {
    fn open(path: Option<PathBuf>) -> DiagLog {
        let writer = path.and_then(|p| std::fs::File::create(p).ok()).map(|f| {
            let mut w = BufWriter::new(f);
            let _ = writeln!(w, "request_id,event,token_index,virtual_t_ns,batch_size_at_event");
            w
        });
        DiagLog { writer }
    }

    fn record(&mut self, id: &str, event: &str, index: Option<u64>, t_ns: u64, batch: usize) {
        if let Some(w) = &mut self.writer {
            let idx = index.map_or(String::new(), |i| i.to_string());
            let _ = writeln!(w, "{id},{event},{idx},{t_ns},{batch}");
        }
    }

    fn flush(&mut self) {
        if let Some(w) = &mut self.writer {
            let _ = w.flush();
        }
    }
}

fn drive(
    mut engine: BatchEngineState,
    rx: Receiver<DriverMsg>,
    stop: Arc<AtomicBool>,
    time_scale: f64,
    log_path: Option<PathBuf>,
) {
    let mut sessions: HashMap<String, Sender<Frame>> = HashMap::new();
    let mut log = DiagLog::open(log_path);

    while !stop.load(Ordering::SeqCst) {
        // Drain pending admissions; block only when the engine is idle.
        if engine.is_idle() {
            match rx.recv() {
                Ok(msg) => admit(&mut engine, &mut sessions, &mut log, msg),
                Err(_) => break,
            }
        }
        while let Ok(msg) = rx.try_recv() {
            admit(&mut engine, &mut sessions, &mut log, msg);
        }
        if engine.is_idle() {
            log.flush();
            continue;
        }

        let before = engine.clock_ns();
        let events = match engine.step() {
            Ok(ev) => ev,
            Err(_) => continue,
        };
        let dt = engine.clock_ns() - before;
        let scaled = Duration::from_nanos((dt as f64 * time_scale) as u64);
        if !scaled.is_zero() {
            std::thread::sleep(scaled);
        }
        dispatch(&events, &mut sessions, &mut log);
    }
    log.flush();
}

fn admit(
    engine: &mut BatchEngineState,
    sessions: &mut HashMap<String, Sender<Frame>>,
    log: &mut DiagLog,
    msg: DriverMsg,
) {
    let DriverMsg::Admit { req, events } = msg else { return };
    let id = req.id.clone();
    match engine.admit(req) {
        Ok(()) => {
            sessions.insert(id, events);
        }
        Err(EngineError::DuplicateId(_)) => {
            let _ = events.send(Frame::err(&id, "bad_request", "duplicate request id"));
            log.record(&id, "reject", None, engine.clock_ns(), engine.running().len());
        }
        Err(_) => {}
    }
}

fn dispatch(events: &[EngineEvent], sessions: &mut HashMap<String, Sender<Frame>>, log: &mut DiagLog) {
    for ev in events {
        match ev {
            EngineEvent::Admitted { id, t_ns } => {
                log.record(id, "admit", None, *t_ns, 0);
            }
            EngineEvent::Token { id, index, t_ns, batch_size } => {
                log.record(id, "tok", Some(*index), *t_ns, *batch_size);
                if let Some(tx) = sessions.get(id) {
                    let _ = tx.send(Frame::tok(id, *index, &token_text(id, *index), *t_ns));
                }
            }
            EngineEvent::Finished { id, n_tokens, reason, t_ns, batch_size } => {
                log.record(id, "end", None, *t_ns, *batch_size);
                if let Some(tx) = sessions.remove(id) {
                    let _ = tx.send(Frame::end(id, *n_tokens, reason.as_str()));
                }
                log.flush();
            }
            EngineEvent::Rejected { id, code, t_ns } => {
                log.record(id, "reject", None, *t_ns, 0);
                if let Some(tx) = sessions.remove(id) {
                    let _ = tx.send(Frame::err(id, code, "kv capacity exceeded"));
                }
                log.flush();
            }
        }
    }
}
