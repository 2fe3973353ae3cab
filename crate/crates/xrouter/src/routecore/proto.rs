//! Newline-delimited JSON wire protocol shared by every link in the
//! topology (client ↔ balancer ↔ gateway ↔ backend).
//!
//! One frame per line. A session is opened by exactly one `req` frame and
//! closed by an `end` or `err` frame.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ProtoError {
    #[error("malformed frame: {0}")]
    Malformed(String),
    #[error("connection closed")]
    Closed,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReqFrame {
    pub v: u32,
    #[serde(rename = "type")]
    pub frame_type: String,
    pub id: String,
    pub prompt: String,
    pub max_tokens: u32,
    /// present only on the gateway → backend hop
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cluster: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokFrame {
    pub v: u32,
    #[serde(rename = "type")]
    pub frame_type: String,
    pub id: String,
    /// 0-based token index
    pub i: u64,
    pub text: String,
    /// backend virtual-clock timestamp
    pub t_ns: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndFrame {
    pub v: u32,
    #[serde(rename = "type")]
    pub frame_type: String,
    pub id: String,
    /// total tokens emitted
    pub n: u64,
    /// "eos" or "cap"
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrFrame {
    pub v: u32,
    #[serde(rename = "type")]
    pub frame_type: String,
    pub id: String,
    pub code: String,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Frame {
    Req(ReqFrame),
    Tok(TokFrame),
    End(EndFrame),
    Err(ErrFrame),
}

impl Frame {
    pub fn req(id: &str, prompt: &str, max_tokens: u32) -> Frame {
        Frame::Req(ReqFrame {
            v: PROTOCOL_VERSION,
            frame_type: "req".into(),
            id: id.into(),
            prompt: prompt.into(),
            max_tokens,
            cluster: None,
        })
    }

    pub fn tok(id: &str, i: u64, text: &str, t_ns: u64) -> Frame {
        Frame::Tok(TokFrame {
            v: PROTOCOL_VERSION,
            frame_type: "tok".into(),
            id: id.into(),
            i,
            text: text.into(),
            t_ns,
        })
    }

    pub fn end(id: &str, n: u64, reason: &str) -> Frame {
        Frame::End(EndFrame {
            v: PROTOCOL_VERSION,
            frame_type: "end".into(),
            id: id.into(),
            n,
            reason: reason.into(),
        })
    }

    pub fn err(id: &str, code: &str, msg: &str) -> Frame {
        Frame::Err(ErrFrame {
            v: PROTOCOL_VERSION,
            frame_type: "err".into(),
            id: id.into(),
            code: code.into(),
            msg: msg.into(),
        })
    }

    pub fn id(&self) -> &str {
        match self {
            Frame::Req(f) => &f.id,
            Frame::Tok(f) => &f.id,
            Frame::End(f) => &f.id,
            Frame::Err(f) => &f.id,
        }
    }

    /// True for the frames that terminate a session.
    pub fn is_final(&self) -> bool {
        matches!(self, Frame::End(_) | Frame::Err(_))
    }

    /// Serialize to one protocol line (no trailing newline).
    pub fn to_line(&self) -> String {
        match self {
            Frame::Req(f) => serde_json::to_string(f),
            Frame::Tok(f) => serde_json::to_string(f),
            Frame::End(f) => serde_json::to_string(f),
            Frame::Err(f) => serde_json::to_string(f),
        }
        .expect("frames serialize")
    }

    /// Parse one line. The line must be valid UTF-8 JSON with a known
    /// `type` and matching protocol version.
    pub fn parse_line(line: &str) -> Result<Frame, ProtoError> {
        let value: serde_json::Value =
            serde_json::from_str(line).map_err(|e| ProtoError::Malformed(e.to_string()))?;
        let typ = value
            .get("type")
            .and_then(|t| t.as_str())
            .ok_or_else(|| ProtoError::Malformed("missing type".into()))?
            .to_string();
        let v = value.get("v").and_then(|v| v.as_u64());
        if v != Some(PROTOCOL_VERSION as u64) {
            return Err(ProtoError::Malformed(format!("unsupported version {v:?}")));
        }
        let frame = match typ.as_str() {
            "req" => Frame::Req(from_value(value)?),
            "tok" => Frame::Tok(from_value(value)?),
            "end" => Frame::End(from_value(value)?),
            "err" => Frame::Err(from_value(value)?),
            other => return Err(ProtoError::Malformed(format!("unknown type {other:?}"))),
        };
        Ok(frame)
    }
}

fn from_value<T: serde::de::DeserializeOwned>(v: serde_json::Value) -> Result<T, ProtoError> {
    serde_json::from_value(v).map_err(|e| ProtoError::Malformed(e.to_string()))
}

/// Write a frame as one line and flush, so a peer reading line-by-line sees
/// it immediately.
pub fn write_frame<W: Write>(w: &mut W, frame: &Frame) -> std::io::Result<()> {
    w.write_all(frame.to_line().as_bytes())?;
    w.write_all(b"\n")?;
    w.flush()
}

/// Read one raw protocol line (newline stripped). `Closed` on EOF.
pub fn read_line<R: BufRead>(r: &mut R) -> Result<String, ProtoError> {
    let mut line = String::new();
    let n = r.read_line(&mut line)?;
    if n == 0 {
        return Err(ProtoError::Closed);
    }
    while line.ends_with('\n') || line.ends_with('\r') {
        line.pop();
    }
    Ok(line)
}

/// Read and parse one frame.
pub fn read_frame<R: BufRead>(r: &mut R) -> Result<Frame, ProtoError> {
    Frame::parse_line(&read_line(r)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn req_wire_shape() {
        let f = Frame::req("r1", "hello world", 200);
        assert_eq!(
            f.to_line(),
            r#"{"v":1,"type":"req","id":"r1","prompt":"hello world","max_tokens":200}"#
        );
    }

    #[test]
    fn req_with_cluster() {
        let mut f = match Frame::req("r1", "p", 10) {
            Frame::Req(f) => f,
            _ => unreachable!(),
        };
        f.cluster = Some(3);
        let line = serde_json::to_string(&f).unwrap();
        assert_eq!(
            line,
            r#"{"v":1,"type":"req","id":"r1","prompt":"p","max_tokens":10,"cluster":3}"#
        );
        assert_eq!(Frame::parse_line(&line).unwrap(), Frame::Req(f));
    }

    #[test]
    fn round_trip_all_kinds() {
        for f in [
            Frame::req("a", "b", 1),
            Frame::tok("a", 0, "w", 123),
            Frame::end("a", 7, "eos"),
            Frame::err("a", "no_route", "cluster 9 unknown"),
        ] {
            assert_eq!(Frame::parse_line(&f.to_line()).unwrap(), f);
        }
    }

    #[test]
    fn rejects_garbage_and_bad_version() {
        assert!(Frame::parse_line("not json").is_err());
        assert!(Frame::parse_line(r#"{"type":"tok"}"#).is_err());
        assert!(Frame::parse_line(r#"{"v":2,"type":"end","id":"x","n":1,"reason":"eos"}"#).is_err());
        assert!(Frame::parse_line(r#"{"v":1,"type":"nope","id":"x"}"#).is_err());
    }
}
