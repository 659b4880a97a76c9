//! Scorer wire protocol. Every message is one UTF-8 JSON object tagged by
//! `type`; on the stdio transport each message is a single line.
//!
//! ```text
//! {"type":"hello","protocol":1}            client -> sidecar (stdio only)
//! {"type":"ready","protocol":1}            sidecar -> client (stdio only)
//! {"type":"score","query":"..","frames":[{"index":0,"asset":".."}]}
//! {"type":"scores","scores":[{"index":0,"score":0.5}]}
//! {"type":"error","message":"..","fatal":true}
//! ```
//!
//! Over HTTP the `score` message is the body of `POST /score` and the reply
//! is the response body; `GET /healthz` answers 200 when the sidecar is up.

use serde::{Deserialize, Serialize};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRef {
    pub index: usize,
    pub asset: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameScore {
    pub index: usize,
    /// `null` on the wire stands for a non-finite score.
    pub score: Option<f64>,
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Message {
    Hello {
        protocol: u32,
    },
    Ready {
        protocol: u32,
    },
    Score {
        query: String,
        frames: Vec<FrameRef>,
    },
    Scores {
        scores: Vec<FrameScore>,
    },
    Error {
        message: String,
        #[serde(default, skip_serializing_if = "is_false")]
        fatal: bool,
    },
}

impl Message {
    pub fn hello() -> Self {
        Message::Hello {
            protocol: PROTOCOL_VERSION,
        }
    }

    pub fn ready() -> Self {
        Message::Ready {
            protocol: PROTOCOL_VERSION,
        }
    }

    pub fn error(message: impl Into<String>, fatal: bool) -> Self {
        Message::Error {
            message: message.into(),
            fatal,
        }
    }

    /// Single-line JSON encoding.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("protocol messages serialize")
    }

    pub fn parse(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text.trim())
    }
}
