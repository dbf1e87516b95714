//! Client side of the line-delimited JSON evaluator protocol.
//!
//! ```text
//! engine    -> evaluator  {"type":"hello","version":1,"space":[...]}
//! evaluator -> engine     {"type":"ready","version":1}
//! engine    -> evaluator  {"type":"eval","id":7,"params":{"n_trees":120,"criterion":"gini"}}
//! evaluator -> engine     {"type":"result","id":7,"objective":0.083}
//!                         {"type":"error","id":7,"message":"..."}
//! engine    -> evaluator  {"type":"shutdown"}
//! ```
//!
//! The evaluator's stderr is inherited by the engine process.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value as Json};

use super::{EvalError, Objective};
use crate::space::{ParamKind, SearchSpace, Value};

pub const PROTOCOL_VERSION: u32 = 1;

/// Engine-to-evaluator messages.
#[derive(Debug, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Request<'a> {
    Hello { version: u32, space: &'a SearchSpace },
    Eval { id: u64, params: Map<String, Json> },
    Shutdown,
}

/// Evaluator-to-engine messages.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Reply {
    Ready { version: u32 },
    Result { id: u64, objective: f64 },
    Error { id: u64, message: String },
}

impl Reply {
    /// Parses one reply line. Non-finite objectives and unknown message
    /// types are protocol errors carrying the raw line.
    pub fn parse(line: &str) -> Result<Reply, EvalError> {
        let raw = line.trim();
        let value: Json = serde_json::from_str(raw).map_err(|e| {
            if has_non_finite_literal(raw) {
                EvalError::Protocol { detail: "non-finite objective".into(), raw: raw.into() }
            } else {
                EvalError::Protocol { detail: format!("malformed reply: {e}"), raw: raw.into() }
            }
        })?;
        match value.get("type").and_then(Json::as_str) {
            Some("ready" | "result" | "error") => {}
            Some(other) => {
                return Err(EvalError::Protocol {
                    detail: format!("unknown message type `{other}`"),
                    raw: raw.into(),
                })
            }
            None => {
                return Err(EvalError::Protocol { detail: "missing message type".into(), raw: raw.into() })
            }
        }
        serde_json::from_value(value)
            .map_err(|e| EvalError::Protocol { detail: format!("malformed reply: {e}"), raw: raw.into() })
    }
}

fn has_non_finite_literal(raw: &str) -> bool {
    raw.split(|c: char| !c.is_ascii_alphanumeric())
        .any(|tok| matches!(tok, "NaN" | "Infinity" | "nan" | "inf"))
}

/// `{name: value}` map for an eval request. Categories are sent by label.
pub fn encode_params(space: &SearchSpace, position: &[Value]) -> Map<String, Json> {
    space
        .params()
        .iter()
        .zip(position)
        .map(|(p, v)| {
            let json = match (p.kind(), v) {
                (ParamKind::Categorical { .. }, v) => Json::from(p.label(v).unwrap_or_default()),
                (_, Value::Int(i)) => Json::from(*i),
                (_, v) => Json::from(v.as_f64()),
            };
            (p.name().to_owned(), json)
        })
        .collect()
}

/// A running evaluator child process, reusable across many evaluations.
pub struct ExternalSession {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
    space: SearchSpace,
    next_id: u64,
    dead: bool,
}

impl ExternalSession {
    /// Spawns `command` and performs the hello/ready handshake.
    pub fn spawn(command: &[String], space: &SearchSpace, timeout: Duration) -> Result<Self, EvalError> {
        let (program, args) = command.split_first().ok_or_else(|| EvalError::Spawn {
            command: String::new(),
            reason: "empty command".into(),
        })?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| EvalError::Spawn { command: command.join(" "), reason: e.to_string() })?;
        let stdin = child.stdin.take();
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let mut session = Self {
            child,
            stdin,
            lines: rx,
            timeout,
            space: space.clone(),
            next_id: 0,
            dead: false,
        };
        let hello = Request::Hello { version: PROTOCOL_VERSION, space };
        session.send(&hello)?;
        match session.recv()? {
            Reply::Ready { version } if version == PROTOCOL_VERSION => Ok(session),
            Reply::Ready { version } => {
                session.kill();
                Err(EvalError::Protocol {
                    detail: format!("version mismatch: evaluator speaks {version}, engine {PROTOCOL_VERSION}"),
                    raw: String::new(),
                })
            }
            other => {
                session.kill();
                Err(EvalError::Protocol {
                    detail: "expected ready".into(),
                    raw: format!("{other:?}"),
                })
            }
        }
    }

    fn send(&mut self, msg: &Request<'_>) -> Result<(), EvalError> {
        let mut line = serde_json::to_string(msg).expect("requests serialise");
        line.push('\n');
        let stdin = self.stdin.as_mut().ok_or(EvalError::Closed)?;
        if stdin.write_all(line.as_bytes()).and_then(|_| stdin.flush()).is_err() {
            // A closed pipe means the child went away; report how it exited.
            return Err(self.crashed(String::new()));
        }
        Ok(())
    }

    fn recv(&mut self) -> Result<Reply, EvalError> {
        match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => {
                let parsed = Reply::parse(&line);
                if parsed.is_err() {
                    self.kill();
                }
                parsed
            }
            Ok(Err(e)) => {
                self.kill();
                Err(EvalError::Io(e.to_string()))
            }
            Err(RecvTimeoutError::Timeout) => {
                self.kill();
                Err(EvalError::Timeout(self.timeout))
            }
            Err(RecvTimeoutError::Disconnected) => Err(self.crashed(String::new())),
        }
    }

    fn crashed(&mut self, raw: String) -> EvalError {
        self.dead = true;
        self.stdin = None;
        let deadline = Instant::now() + Duration::from_secs(2);
        let status = loop {
            match self.child.try_wait() {
                Ok(Some(status)) => break status.to_string(),
                Ok(None) if Instant::now() < deadline => thread::sleep(Duration::from_millis(5)),
                Ok(None) => {
                    let _ = self.child.kill();
                    break "unresponsive, killed".to_string();
                }
                Err(e) => break e.to_string(),
            }
        };
        EvalError::Crashed { status, raw }
    }

    fn kill(&mut self) {
        self.dead = true;
        self.stdin = None;
        let _ = self.child.kill();
        let _ = self.child.wait();
    }

    /// Sends `shutdown` and waits for the child to exit.
    pub fn shutdown(mut self) -> Result<std::process::ExitStatus, EvalError> {
        self.close()
    }

    fn close(&mut self) -> Result<std::process::ExitStatus, EvalError> {
        if !self.dead {
            let _ = self.send(&Request::Shutdown);
        }
        self.dead = true;
        self.stdin = None;
        let deadline = Instant::now() + self.timeout;
        loop {
            match self.child.try_wait() {
                Ok(Some(status)) => return Ok(status),
                Ok(None) if Instant::now() < deadline => thread::sleep(Duration::from_millis(5)),
                Ok(None) => {
                    self.kill();
                    return Err(EvalError::Timeout(self.timeout));
                }
                Err(e) => return Err(EvalError::Io(e.to_string())),
            }
        }
    }
}

impl Objective for ExternalSession {
    fn evaluate(&mut self, position: &[Value]) -> Result<f64, EvalError> {
        if self.dead {
            return Err(EvalError::Closed);
        }
        let id = self.next_id;
        self.next_id += 1;
        let params = encode_params(&self.space, position);
        self.send(&Request::Eval { id, params })?;
        match self.recv()? {
            Reply::Result { id: got, objective } if got == id => {
                if objective.is_finite() {
                    Ok(objective)
                } else {
                    self.kill();
                    Err(EvalError::NonFinite(objective))
                }
            }
            Reply::Error { id: got, message } if got == id => Err(EvalError::Evaluator { id, message }),
            other => {
                self.kill();
                Err(EvalError::Protocol {
                    detail: format!("unexpected reply to request {id}"),
                    raw: format!("{other:?}"),
                })
            }
        }
    }
}

impl Drop for ExternalSession {
    fn drop(&mut self) {
        if !self.dead {
            let _ = self.close();
        } else {
            let _ = self.child.kill();
            let _ = self.child.wait();
        }
    }
}
