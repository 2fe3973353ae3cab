//! Connection-level round-robin balancer in front of the gateway instances.

use std::io::{Read, Write};
use std::net::TcpStream;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use super::net::{spawn_listener, ServerHandle};
use super::RouteError;

/// Ordered upstream list plus a monotone counter; selection is
/// `counter mod len`, so over `m·g` connections each of the `g` upstreams is
/// chosen exactly `m` times.
#[derive(Debug)]
pub struct BalancerState {
    upstreams: Vec<String>,
    next: AtomicU64,
}

impl BalancerState {
    pub fn new(upstreams: Vec<String>) -> Result<BalancerState, RouteError> {
        if upstreams.is_empty() {
            return Err(RouteError::NoUpstreams);
        }
        Ok(BalancerState { upstreams, next: AtomicU64::new(0) })
    }

    pub fn round_robin_next(&self) -> &str {
        let n = self.next.fetch_add(1, Ordering::Relaxed);
        &self.upstreams[(n as usize) % self.upstreams.len()]
    }
}

/// Spawn the balancer listener. Every accepted connection is spliced to the
/// next upstream; bytes are relayed both ways without inspection.
pub fn spawn_balancer(listen: &str, state: Arc<BalancerState>) -> std::io::Result<ServerHandle> {
    spawn_listener(listen, "balance", move |downstream| {
        let upstream_addr = state.round_robin_next().to_string();
        match TcpStream::connect(&upstream_addr) {
            Ok(upstream) => splice(downstream, upstream),
            Err(_) => {
                let mut downstream = downstream;
                let frame =
                    super::proto::Frame::err("", "upstream_unavailable", "balancer dial failed");
                let _ = super::proto::write_frame(&mut downstream, &frame);
            }
        }
    })
}

fn splice(down: TcpStream, up: TcpStream) {
    let down2 = match down.try_clone() {
        Ok(s) => s,
        Err(_) => return,
    };
    let up2 = match up.try_clone() {
        Ok(s) => s,
        Err(_) => return,
    };
    let t = std::thread::spawn(move || copy_then_shutdown(down, up));
    copy_then_shutdown(up2, down2);
    let _ = t.join();
}

fn copy_then_shutdown(mut from: TcpStream, mut to: TcpStream) {
    let mut buf = [0u8; 16 * 1024];
    loop {
        match from.read(&mut buf) {
            Ok(0) | Err(_) => break,
            Ok(n) => {
                if to.write_all(&buf[..n]).is_err() || to.flush().is_err() {
                    break;
                }
            }
        }
    }
    let _ = to.shutdown(std::net::Shutdown::Write);
}
