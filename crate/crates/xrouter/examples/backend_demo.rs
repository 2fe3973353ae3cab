//! Talk to a simulated inference backend over raw TCP.
//!
//! Starts one backend with a small profile, sends a single request frame and
//! prints every frame of the streamed response. Token timestamps are virtual
//! nanoseconds from the engine clock; the time scale only controls how fast
//! they play out in wall time.

use std::io::BufReader;
use std::net::TcpStream;

use xrouter::routecore::proto::{read_frame, write_frame, Frame};
use xrouter::simbackend::{serve, BackendConfig, ModelProfile};

fn main() {
    let profile = ModelProfile {
        name: "demo".into(),
        tp_degree: 2,
        weights_gb: 10.0,
        kv_cache_gb: 4.0,
        max_batch: 16,
        kv_tokens_per_gb: 10_000.0,
        prefill_coef_ns_per_token: 50_000.0,
        prefill_base_ns: 2_000_000.0,
        decode_base_ns: 10_000_000.0,
        decode_batch_coef_ns: 100_000.0,
        tp_comm_overhead_ns: 1_000_000.0,
        eos_prob: 0.05,
        max_output_tokens: 30,
    };
    let server = serve(
        profile,
        BackendConfig {
            listen: "127.0.0.1:0".into(),
            time_scale: 0.001,
            seed: 42,
            log_path: None,
        },
    )
    .expect("backend start");
    println!("backend on {}", server.endpoint());

    let stream = TcpStream::connect(server.endpoint()).expect("connect");
    let mut writer = stream.try_clone().expect("clone");
    let mut reader = BufReader::new(stream);

    let prompt = "tell me about continuous batching in ten words or so";
    write_frame(&mut writer, &Frame::req("demo-1", prompt, 12)).expect("send");

    loop {
        let frame = read_frame(&mut reader).expect("read");
        println!("{}", frame.to_line());
        if frame.is_final() {
            break;
        }
    }
    server.shutdown();
}
