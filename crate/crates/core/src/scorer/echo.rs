//! In-repo echo sidecar used to test the protocol client.
//!
//! Each frame's score is the number in its asset's file stem over `divisor`
//! (`frames/3.jpg` with the default divisor 10 scores 0.3), falling back to
//! `index / divisor` when the stem is not numeric. Fault injection knobs make
//! the mock misbehave on a schedule counted over score requests (1-based).
//! Transient faults (errors and hangs) hit a given request body at most once,
//! so a retry of the same batch always goes through even when other batches
//! are in flight.

use std::collections::HashSet;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use super::protocol::{FrameScore, Message, PROTOCOL_VERSION};

#[derive(Debug, Clone, PartialEq)]
pub struct EchoConfig {
    pub divisor: f64,
    /// Every n-th request gets a retryable error (0 = never).
    pub fail_every: usize,
    /// Every n-th request is answered only after `hang_ms` (0 = never).
    pub hang_every: usize,
    pub hang_ms: u64,
    /// The n-th request gets a fatal error.
    pub fatal_at: Option<usize>,
    /// Answer in reverse frame order.
    pub reverse: bool,
    /// Leave the last frame of every batch out of the reply.
    pub drop_last: bool,
    /// Report a non-finite score for this frame index.
    pub nan_index: Option<usize>,
}

impl Default for EchoConfig {
    fn default() -> Self {
        Self {
            divisor: 10.0,
            fail_every: 0,
            hang_every: 0,
            hang_ms: 0,
            fatal_at: None,
            reverse: false,
            drop_last: false,
            nan_index: None,
        }
    }
}

/// A reply plus how long to sit on it.
#[derive(Debug, Clone, PartialEq)]
pub struct Reply {
    pub delay: Duration,
    pub message: Message,
}

impl Reply {
    fn now(message: Message) -> Self {
        Self {
            delay: Duration::ZERO,
            message,
        }
    }
}

#[derive(Debug)]
pub struct EchoScorer {
    config: EchoConfig,
    requests: usize,
    failed: HashSet<Vec<usize>>,
    hung: HashSet<Vec<usize>>,
}

fn echo_value(asset: &str, index: usize, divisor: f64) -> f64 {
    Path::new(asset)
        .file_stem()
        .and_then(|s| s.to_str())
        .and_then(|s| s.parse::<f64>().ok())
        .unwrap_or(index as f64)
        / divisor
}

impl EchoScorer {
    pub fn new(config: EchoConfig) -> Self {
        Self {
            config,
            requests: 0,
            failed: HashSet::new(),
            hung: HashSet::new(),
        }
    }

    pub fn requests_seen(&self) -> usize {
        self.requests
    }

    pub fn handle(&mut self, text: &str) -> Reply {
        let msg = match Message::parse(text) {
            Ok(m) => m,
            Err(e) => return Reply::now(Message::error(format!("malformed request: {e}"), true)),
        };
        match msg {
            Message::Hello { protocol } if protocol == PROTOCOL_VERSION => Reply::now(Message::ready()),
            Message::Hello { protocol } => {
                Reply::now(Message::error(format!("unsupported protocol {protocol}"), true))
            }
            Message::Score { frames, .. } => {
                self.requests += 1;
                let n = self.requests;
                let key: Vec<usize> = frames.iter().map(|f| f.index).collect();
                let c = &self.config;
                if c.fatal_at == Some(n) {
                    return Reply::now(Message::error(format!("injected fatal error on request {n}"), true));
                }
                if c.fail_every > 0 && n.is_multiple_of(c.fail_every) && self.failed.insert(key.clone()) {
                    return Reply::now(Message::error(format!("injected transient error on request {n}"), false));
                }
                let mut scores: Vec<FrameScore> = frames
                    .iter()
                    .map(|f| FrameScore {
                        index: f.index,
                        score: if c.nan_index == Some(f.index) {
                            None
                        } else {
                            Some(echo_value(&f.asset, f.index, c.divisor))
                        },
                    })
                    .collect();
                if c.drop_last {
                    scores.pop();
                }
                if c.reverse {
                    scores.reverse();
                }
                let delay = if c.hang_every > 0 && n.is_multiple_of(c.hang_every) && self.hung.insert(key) {
                    Duration::from_millis(c.hang_ms)
                } else {
                    Duration::ZERO
                };
                Reply {
                    delay,
                    message: Message::Scores { scores },
                }
            }
            other => Reply::now(Message::error(format!("unexpected message {other:?}"), true)),
        }
    }
}

/// Serves the line protocol until `input` closes.
pub fn serve_stdio(config: EchoConfig, input: impl BufRead, mut output: impl Write) -> std::io::Result<()> {
    let mut scorer = EchoScorer::new(config);
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = scorer.handle(&line);
        thread::sleep(reply.delay);
        writeln!(output, "{}", reply.message.to_line())?;
        output.flush()?;
    }
    Ok(())
}

/// An HTTP echo sidecar on a background thread.
pub struct EchoHttpServer {
    server: Arc<tiny_http::Server>,
    port: u16,
    handle: Option<thread::JoinHandle<()>>,
}

impl EchoHttpServer {
    /// Binds `addr` (use port 0 for an ephemeral port) and starts serving.
    pub fn start(config: EchoConfig, addr: &str) -> std::io::Result<Self> {
        let server = tiny_http::Server::http(addr).map_err(std::io::Error::other)?;
        let port = server
            .server_addr()
            .to_ip()
            .map(|a| a.port())
            .ok_or_else(|| std::io::Error::other("not an IP listener"))?;
        let server = Arc::new(server);
        let scorer = Arc::new(Mutex::new(EchoScorer::new(config)));
        let srv = Arc::clone(&server);
        let handle = thread::spawn(move || {
            for request in srv.incoming_requests() {
                let scorer = Arc::clone(&scorer);
                thread::spawn(move || respond(request, &scorer));
            }
        });
        Ok(Self {
            server,
            port,
            handle: Some(handle),
        })
    }

    pub fn port(&self) -> u16 {
        self.port
    }

    pub fn url(&self) -> String {
        format!("http://127.0.0.1:{}", self.port)
    }

    /// Blocks until the server stops.
    pub fn join(mut self) {
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

impl Drop for EchoHttpServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn respond(mut request: tiny_http::Request, scorer: &Mutex<EchoScorer>) {
    use tiny_http::{Header, Method, Response};

    let json = Header::from_bytes(&b"Content-Type"[..], &b"application/json"[..]).expect("static header");
    let method = request.method().clone();
    let url = request.url().to_owned();
    let result = match (method, url.as_str()) {
        (Method::Get, "/healthz") => request.respond(Response::from_string("ok")),
        (Method::Post, "/score") => {
            let mut body = String::new();
            if let Err(e) = request.as_reader().read_to_string(&mut body) {
                let msg = Message::error(format!("unreadable body: {e}"), false).to_line();
                let _ = request.respond(Response::from_string(msg).with_status_code(400).with_header(json));
                return;
            }
            let reply = scorer.lock().unwrap().handle(&body);
            thread::sleep(reply.delay);
            request.respond(Response::from_string(reply.message.to_line()).with_header(json))
        }
        _ => request.respond(Response::from_string("not found").with_status_code(404)),
    };
    if let Err(e) = result {
        log::debug!("echo sidecar: client went away: {e}");
    }
}
