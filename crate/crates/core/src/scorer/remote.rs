//! Client side of the scorer wire protocol.
//!
//! Frames go out in batches of `batch_size`. A batch is retried on timeouts,
//! transport failures and non-fatal `error` replies, up to `max_retries`
//! times; a stdio sidecar that times out is killed and respawned so a late
//! reply can never be mistaken for the answer to a later request. Replies are
//! matched by frame index, never by position.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::protocol::{FrameRef, Message, PROTOCOL_VERSION};
use crate::error::{AksError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transport {
    /// `endpoint` is a command line; messages travel over its stdin/stdout.
    StdioPipe,
    /// `endpoint` is a base URL such as `http://127.0.0.1:8000`.
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteSpec {
    pub endpoint: String,
    pub transport: Transport,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_timeout_s")]
    pub timeout_s: f64,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    /// Concurrent batches for the HTTP transport.
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
}

fn default_batch_size() -> usize {
    32
}
fn default_timeout_s() -> f64 {
    30.0
}
fn default_max_retries() -> u32 {
    3
}
fn default_in_flight() -> usize {
    4
}

impl RemoteSpec {
    pub fn new(endpoint: impl Into<String>, transport: Transport) -> Self {
        Self {
            endpoint: endpoint.into(),
            transport,
            batch_size: default_batch_size(),
            timeout_s: default_timeout_s(),
            max_retries: default_max_retries(),
            max_in_flight: default_in_flight(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(AksError::InvalidParam("batch_size must be at least 1".into()));
        }
        if !self.timeout_s.is_finite() || self.timeout_s <= 0.0 {
            return Err(AksError::InvalidParam("timeout_s must be positive".into()));
        }
        if self.endpoint.trim().is_empty() {
            return Err(AksError::InvalidParam("empty scorer endpoint".into()));
        }
        Ok(())
    }

    fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_s)
    }
}

/// Result of one request attempt.
enum Attempt {
    Done(Vec<f64>),
    Retry(String),
    Fatal(AksError),
}

fn check_reply(batch: &[FrameRef], reply: &str) -> Attempt {
    let first = batch[0].index;
    let msg = match Message::parse(reply) {
        Ok(m) => m,
        Err(e) => return Attempt::Retry(format!("unparseable reply: {e}")),
    };
    match msg {
        Message::Scores { scores } => {
            let mut by_index: HashMap<usize, Option<f64>> = HashMap::with_capacity(scores.len());
            for s in scores {
                if by_index.insert(s.index, s.score).is_some() {
                    return Attempt::Fatal(AksError::Scorer {
                        index: s.index,
                        message: "index mismatch: returned more than once".into(),
                    });
                }
            }
            let mut out = Vec::with_capacity(batch.len());
            for f in batch {
                match by_index.remove(&f.index) {
                    None => {
                        return Attempt::Fatal(AksError::Scorer {
                            index: f.index,
                            message: "index mismatch: missing from reply".into(),
                        })
                    }
                    Some(Some(v)) if v.is_finite() => out.push(v),
                    Some(_) => {
                        return Attempt::Fatal(AksError::Scorer {
                            index: f.index,
                            message: "non-finite score".into(),
                        })
                    }
                }
            }
            if let Some(&extra) = by_index.keys().min() {
                return Attempt::Fatal(AksError::Scorer {
                    index: extra,
                    message: "index mismatch: not part of the request".into(),
                });
            }
            Attempt::Done(out)
        }
        Message::Error { message, fatal: true } => Attempt::Fatal(AksError::Scorer { index: first, message }),
        Message::Error { message, fatal: false } => Attempt::Retry(message),
        other => Attempt::Fatal(AksError::Protocol(format!("unexpected reply {:?}", other))),
    }
}

fn with_retries(spec: &RemoteSpec, batch: &[FrameRef], mut attempt: impl FnMut() -> Attempt) -> Result<Vec<f64>> {
    let mut last = String::new();
    for n in 0..=spec.max_retries {
        match attempt() {
            Attempt::Done(v) => return Ok(v),
            Attempt::Fatal(e) => return Err(e),
            Attempt::Retry(why) => {
                log::warn!("scorer batch at frame {} failed (attempt {}): {why}", batch[0].index, n + 1);
                last = why;
            }
        }
    }
    Err(AksError::Scorer {
        index: batch[0].index,
        message: format!("gave up after {} retries: {last}", spec.max_retries),
    })
}

fn request_line(query: &str, batch: &[FrameRef]) -> String {
    Message::Score {
        query: query.to_owned(),
        frames: batch.to_vec(),
    }
    .to_line()
}

/// Scores `frames` (in order) through the remote sidecar.
pub fn score_remote(spec: &RemoteSpec, query: &str, frames: &[FrameRef]) -> Result<Vec<f64>> {
    spec.validate()?;
    match spec.transport {
        Transport::StdioPipe => score_stdio(spec, query, frames),
        Transport::Http => score_http(spec, query, frames),
    }
}

struct StdioSession {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

impl StdioSession {
    fn spawn(command: &str) -> Result<Self> {
        let mut parts = command.split_whitespace();
        let program = parts
            .next()
            .ok_or_else(|| AksError::InvalidParam("empty scorer command".into()))?;
        let mut child = Command::new(program)
            .args(parts)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| AksError::io(program, e))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Self {
            child,
            stdin,
            lines: rx,
        })
    }

    fn exchange(&mut self, line: &str, timeout: Duration) -> std::result::Result<String, String> {
        writeln!(self.stdin, "{line}")
            .and_then(|_| self.stdin.flush())
            .map_err(|e| format!("write failed: {e}"))?;
        loop {
            match self.lines.recv_timeout(timeout) {
                Ok(Ok(reply)) if reply.trim().is_empty() => continue,
                Ok(Ok(reply)) => return Ok(reply),
                Ok(Err(e)) => return Err(format!("read failed: {e}")),
                Err(RecvTimeoutError::Timeout) => return Err(format!("no reply within {timeout:?}")),
                Err(RecvTimeoutError::Disconnected) => return Err("sidecar closed its output".into()),
            }
        }
    }

    fn handshake(&mut self, timeout: Duration) -> std::result::Result<(), String> {
        let reply = self.exchange(&Message::hello().to_line(), timeout)?;
        match Message::parse(&reply) {
            Ok(Message::Ready { protocol }) if protocol == PROTOCOL_VERSION => Ok(()),
            Ok(other) => Err(format!("bad handshake reply {other:?}")),
            Err(e) => Err(format!("bad handshake reply: {e}")),
        }
    }
}

impl Drop for StdioSession {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn score_stdio(spec: &RemoteSpec, query: &str, frames: &[FrameRef]) -> Result<Vec<f64>> {
    let timeout = spec.timeout();
    let mut session: Option<StdioSession> = None;
    let mut out = Vec::with_capacity(frames.len());
    for batch in frames.chunks(spec.batch_size) {
        let line = request_line(query, batch);
        let scores = with_retries(spec, batch, || {
            if session.is_none() {
                let mut fresh = match StdioSession::spawn(&spec.endpoint) {
                    Ok(s) => s,
                    Err(e) => return Attempt::Fatal(e),
                };
                if let Err(why) = fresh.handshake(timeout) {
                    return Attempt::Retry(format!("handshake: {why}"));
                }
                session = Some(fresh);
            }
            let s = session.as_mut().expect("session present");
            match s.exchange(&line, timeout) {
                Ok(reply) => check_reply(batch, &reply),
                Err(why) => {
                    // drop the session: a late reply must not leak into the next request
                    session = None;
                    Attempt::Retry(why)
                }
            }
        })?;
        out.extend(scores);
    }
    Ok(out)
}

fn http_agent(spec: &RemoteSpec) -> ureq::Agent {
    ureq::Agent::config_builder()
        .timeout_global(Some(spec.timeout()))
        .build()
        .into()
}

fn base_url(spec: &RemoteSpec) -> String {
    spec.endpoint.trim_end_matches('/').to_owned()
}

fn http_health(spec: &RemoteSpec, agent: &ureq::Agent) -> Result<()> {
    let url = format!("{}/healthz", base_url(spec));
    let probe = [FrameRef {
        index: 0,
        asset: String::new(),
    }];
    with_retries(spec, &probe, || match agent.get(&url).call() {
        Ok(resp) if resp.status() == 200 => Attempt::Done(Vec::new()),
        Ok(resp) => Attempt::Retry(format!("healthz returned {}", resp.status())),
        Err(e) => Attempt::Retry(format!("healthz: {e}")),
    })
    .map(|_| ())
    .map_err(|e| AksError::Protocol(format!("{url} is not healthy: {e}")))
}

fn http_attempt(agent: &ureq::Agent, url: &str, body: &str, batch: &[FrameRef]) -> Attempt {
    let mut resp = match agent
        .post(url)
        .header("Content-Type", "application/json")
        .send(body)
    {
        Ok(r) => r,
        Err(e) => return Attempt::Retry(e.to_string()),
    };
    match resp.body_mut().read_to_string() {
        Ok(text) => check_reply(batch, &text),
        Err(e) => Attempt::Retry(format!("reading reply: {e}")),
    }
}

fn score_http(spec: &RemoteSpec, query: &str, frames: &[FrameRef]) -> Result<Vec<f64>> {
    let agent = http_agent(spec);
    http_health(spec, &agent)?;
    let url = format!("{}/score", base_url(spec));
    let batches: Vec<&[FrameRef]> = frames.chunks(spec.batch_size).collect();
    let results: Mutex<Vec<Option<Vec<f64>>>> = Mutex::new(vec![None; batches.len()]);
    let first_error: Mutex<Option<(usize, AksError)>> = Mutex::new(None);
    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let workers = spec.max_in_flight.clamp(1, batches.len().max(1));

    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| {
                let agent = agent.clone();
                loop {
                    if stop.load(Ordering::Relaxed) {
                        break;
                    }
                    let b = next.fetch_add(1, Ordering::Relaxed);
                    let Some(batch) = batches.get(b) else { break };
                    let body = request_line(query, batch);
                    match with_retries(spec, batch, || http_attempt(&agent, &url, &body, batch)) {
                        Ok(scores) => results.lock().unwrap()[b] = Some(scores),
                        Err(e) => {
                            stop.store(true, Ordering::Relaxed);
                            let mut slot = first_error.lock().unwrap();
                            // keep the earliest failing batch for a deterministic report
                            if slot.as_ref().is_none_or(|(at, _)| b < *at) {
                                *slot = Some((b, e));
                            }
                            break;
                        }
                    }
                }
            });
        }
    });

    if let Some((_, e)) = first_error.into_inner().unwrap() {
        return Err(e);
    }
    let mut out = Vec::with_capacity(frames.len());
    for part in results.into_inner().unwrap() {
        out.extend(part.expect("every batch completed"));
    }
    Ok(out)
}
