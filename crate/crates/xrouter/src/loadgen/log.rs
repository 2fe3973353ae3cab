//! Token event logs: the ground truth every metric is computed from.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::workload::WorkloadSpec;
use super::LoadError;

/// One request as observed by a user: send time, every token receive stamp
/// and the completion time, all from a single clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub user_id: u32,
    pub request_id: String,
    pub category: usize,
    pub input_tokens: u64,
    pub t_send_ns: u64,
    pub token_stamps_ns: Vec<u64>,
    pub t_end_ns: u64,
    /// "eos", "cap" or "error"
    pub end_reason: String,
    /// CRC32 over the raw received frame lines (newline-terminated)
    pub rx_crc32: u32,
    /// number of frames received (tok + final)
    pub rx_frames: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub run_id: String,
    pub concurrency: usize,
    pub scenario: String,
    pub seed: u64,
    /// clock the stamps come from: "monotonic" (wall) or "virtual"
    pub clock: String,
    pub wall_duration_s: f64,
    pub spec: WorkloadSpec,
}

/// All session records of one run plus run metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenEventLog {
    pub meta: RunMeta,
    pub records: Vec<SessionRecord>,
}

impl TokenEventLog {
    /// Write `events.csv`, `sessions.csv` and `run.json` into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<(), LoadError> {
        std::fs::create_dir_all(dir)?;
        let mut events = std::io::BufWriter::new(std::fs::File::create(dir.join("events.csv"))?);
        writeln!(events, "run_id,concurrency,user_id,request_id,category,event,token_index,t_ns")?;
        let rid = &self.meta.run_id;
        let conc = self.meta.concurrency;
        for r in &self.records {
            writeln!(
                events,
                "{rid},{conc},{},{},{},send,,{}",
                r.user_id, r.request_id, r.category, r.t_send_ns
            )?;
            for (i, t) in r.token_stamps_ns.iter().enumerate() {
                writeln!(
                    events,
                    "{rid},{conc},{},{},{},tok,{i},{t}",
                    r.user_id, r.request_id, r.category
                )?;
            }
            let kind = if r.end_reason == "error" { "err" } else { "end" };
            writeln!(
                events,
                "{rid},{conc},{},{},{},{kind},,{}",
                r.user_id, r.request_id, r.category, r.t_end_ns
            )?;
        }
        events.flush()?;

        let mut sessions = std::io::BufWriter::new(std::fs::File::create(dir.join("sessions.csv"))?);
        writeln!(sessions, "request_id,user_id,category,input_tokens,end_reason,rx_crc32,rx_frames")?;
        for r in &self.records {
            writeln!(
                sessions,
                "{},{},{},{},{},{},{}",
                r.request_id, r.user_id, r.category, r.input_tokens, r.end_reason, r.rx_crc32, r.rx_frames
            )?;
        }
        sessions.flush()?;

        std::fs::write(dir.join("run.json"), serde_json::to_string_pretty(&self.meta).expect("meta"))?;
        Ok(())
    }

    /// Load a run directory written by [`TokenEventLog::write_dir`].
    pub fn load_dir(dir: &Path) -> Result<TokenEventLog, LoadError> {
        let meta: RunMeta = serde_json::from_str(&std::fs::read_to_string(dir.join("run.json"))?)
            .map_err(|e| LoadError::InvalidSpec(format!("run.json: {e}")))?;

        let mut records: Vec<SessionRecord> = Vec::new();
        let mut index: std::collections::HashMap<String, usize> = std::collections::HashMap::new();

        let events = std::fs::read_to_string(dir.join("events.csv"))?;
        for (lineno, line) in events.lines().enumerate().skip(1) {
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 8 {
                return Err(LoadError::InvalidSpec(format!("events.csv line {}", lineno + 1)));
            }
            let parse = |s: &str, what: &str| -> Result<u64, LoadError> {
                s.parse().map_err(|_| {
                    LoadError::InvalidSpec(format!("events.csv line {}: bad {what}", lineno + 1))
                })
            };
            let user_id = parse(parts[2], "user_id")? as u32;
            let request_id = parts[3].to_string();
            let category = parse(parts[4], "category")? as usize;
            let event = parts[5];
            let t_ns = parse(parts[7], "t_ns")?;
            let idx = *index.entry(request_id.clone()).or_insert_with(|| {
                records.push(SessionRecord {
                    user_id,
                    request_id: request_id.clone(),
                    category,
                    input_tokens: 0,
                    t_send_ns: 0,
                    token_stamps_ns: Vec::new(),
                    t_end_ns: 0,
                    end_reason: String::new(),
                    rx_crc32: 0,
                    rx_frames: 0,
                });
                records.len() - 1
            });
            match event {
                "send" => records[idx].t_send_ns = t_ns,
                "tok" => records[idx].token_stamps_ns.push(t_ns),
                "end" => records[idx].t_end_ns = t_ns,
                "err" => {
                    records[idx].t_end_ns = t_ns;
                    records[idx].end_reason = "error".into();
                }
                other => {
                    return Err(LoadError::InvalidSpec(format!(
                        "events.csv line {}: unknown event {other:?}",
                        lineno + 1
                    )))
                }
            }
        }

        let sessions = std::fs::read_to_string(dir.join("sessions.csv"))?;
        for line in sessions.lines().skip(1) {
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 7 {
                continue;
            }
            if let Some(&idx) = index.get(parts[0]) {
                let r = &mut records[idx];
                r.input_tokens = parts[3].parse().unwrap_or(0);
                if r.end_reason.is_empty() {
                    r.end_reason = parts[4].to_string();
                }
                r.rx_crc32 = parts[5].parse().unwrap_or(0);
                r.rx_frames = parts[6].parse().unwrap_or(0);
            }
        }

        Ok(TokenEventLog { meta, records })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_log() -> TokenEventLog {
        TokenEventLog {
            meta: RunMeta {
                run_id: "run1".into(),
                concurrency: 2,
                scenario: "test".into(),
                seed: 7,
                clock: "virtual".into(),
                wall_duration_s: 0.5,
                spec: WorkloadSpec::default(),
            },
            records: vec![
                SessionRecord {
                    user_id: 0,
                    request_id: "u0-r0".into(),
                    category: 3,
                    input_tokens: 12,
                    t_send_ns: 100,
                    token_stamps_ns: vec![200, 300, 450],
                    t_end_ns: 450,
                    end_reason: "eos".into(),
                    rx_crc32: 123,
                    rx_frames: 4,
                },
                SessionRecord {
                    user_id: 1,
                    request_id: "u1-r0".into(),
                    category: 5,
                    input_tokens: 40,
                    t_send_ns: 120,
                    token_stamps_ns: vec![],
                    t_end_ns: 130,
                    end_reason: "error".into(),
                    rx_crc32: 0,
                    rx_frames: 0,
                },
            ],
        }
    }

    #[test]
    fn dir_round_trip() {
        let log = sample_log();
        let dir = tempfile::tempdir().unwrap();
        log.write_dir(dir.path()).unwrap();
        let loaded = TokenEventLog::load_dir(dir.path()).unwrap();
        assert_eq!(loaded, log);
    }

    #[test]
    fn csv_header_shape() {
        let log = sample_log();
        let dir = tempfile::tempdir().unwrap();
        log.write_dir(dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("events.csv")).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "run_id,concurrency,user_id,request_id,category,event,token_index,t_ns"
        );
        assert_eq!(lines.next().unwrap(), "run1,2,0,u0-r0,3,send,,100");
        assert_eq!(lines.next().unwrap(), "run1,2,0,u0-r0,3,tok,0,200");
    }
}
