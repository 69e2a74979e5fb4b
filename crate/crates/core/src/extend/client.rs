//! Model clients.
//!
//! Every model sits behind one HTTP JSON contract:
//!
//! ```text
//! POST <endpoint>
//! {"prompt": "...", "image": "<base64>", "max_tokens": 256}   // "image" omitted for text
//! -> {"text": "..."}
//! ```
//!
//! [`ReplayClient`] answers from recorded responses instead, keyed by the
//! request's [`RequestTag`]; it never touches the network.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("transport error talking to {endpoint}: {message}")]
    Transport { endpoint: String, message: String },
    #[error("request to {endpoint} timed out")]
    Timeout { endpoint: String },
    #[error("bad response from {endpoint}: {message}")]
    BadResponse { endpoint: String, message: String },
    #[error("no recorded response for {0}")]
    NoReplayEntry(String),
    #[error("{0} requests need an image payload")]
    MissingImage(RequestKind),
}

impl ClientError {
    /// Transport failures and timeouts may succeed when retried.
    pub fn is_retriable(&self) -> bool {
        matches!(self, ClientError::Transport { .. } | ClientError::Timeout { .. })
    }
}

/// What a request asks for; also selects the client mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RequestKind {
    /// Entity extraction from a description.
    #[serde(rename = "text")]
    Text,
    /// Entity extraction from an image.
    #[serde(rename = "vision")]
    Vision,
    /// Yes/no question about an image.
    #[serde(rename = "vision-qa")]
    VisionQa,
    /// Yes/no question about a description.
    #[serde(rename = "text-qa")]
    TextQa,
}

impl RequestKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RequestKind::Text => "text",
            RequestKind::Vision => "vision",
            RequestKind::VisionQa => "vision-qa",
            RequestKind::TextQa => "text-qa",
        }
    }

    pub fn needs_image(self) -> bool {
        matches!(self, RequestKind::Vision | RequestKind::VisionQa)
    }
}

impl fmt::Display for RequestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Identifies a request independently of its prompt wording. Not sent over
/// the wire.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RequestTag {
    pub kind: RequestKind,
    pub subject: String,
    pub relation: String,
    /// The surface form asked about, for yes/no questions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate: Option<String>,
    /// 1 for the first query, 2 for the strict re-query.
    #[serde(default = "first_attempt")]
    pub attempt: u8,
}

fn first_attempt() -> u8 {
    1
}

impl fmt::Display for RequestTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.kind, self.subject, self.relation)?;
        if let Some(c) = &self.candidate {
            write!(f, " {c:?}")?;
        }
        write!(f, " attempt {}", self.attempt)
    }
}

#[derive(Debug, Clone)]
pub struct ModelRequest {
    pub tag: RequestTag,
    pub prompt: String,
    pub image: Option<Vec<u8>>,
    pub max_tokens: u32,
}

pub trait ModelClient: Send + Sync {
    fn complete(&self, request: &ModelRequest) -> Result<String, ClientError>;
}

impl<F> ModelClient for F
where
    F: Fn(&ModelRequest) -> Result<String, ClientError> + Send + Sync,
{
    fn complete(&self, request: &ModelRequest) -> Result<String, ClientError> {
        self(request)
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    prompt: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    image: Option<String>,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct WireResponse {
    text: String,
}

/// Blocking HTTP client for the JSON contract above.
#[derive(Debug, Clone)]
pub struct HttpClient {
    endpoint: String,
    token: Option<String>,
    http: reqwest::blocking::Client,
}

impl HttpClient {
    pub fn new(endpoint: impl Into<String>, token: Option<String>, timeout: Duration) -> Result<Self> {
        let http = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| Error::Config(format!("http client: {e}")))?;
        Ok(Self {
            endpoint: endpoint.into(),
            token,
            http,
        })
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }
}

impl ModelClient for HttpClient {
    fn complete(&self, request: &ModelRequest) -> Result<String, ClientError> {
        if request.tag.kind.needs_image() && request.image.is_none() {
            return Err(ClientError::MissingImage(request.tag.kind));
        }
        let body = WireRequest {
            prompt: &request.prompt,
            image: request
                .image
                .as_ref()
                .map(|b| base64::engine::general_purpose::STANDARD.encode(b)),
            max_tokens: request.max_tokens,
        };
        let mut req = self.http.post(&self.endpoint).json(&body);
        if let Some(token) = &self.token {
            req = req.bearer_auth(token);
        }
        let endpoint = || self.endpoint.clone();
        let resp = req.send().map_err(|e| {
            if e.is_timeout() {
                ClientError::Timeout { endpoint: endpoint() }
            } else {
                ClientError::Transport {
                    endpoint: endpoint(),
                    message: e.to_string(),
                }
            }
        })?;
        let status = resp.status();
        if status.is_server_error() {
            return Err(ClientError::Transport {
                endpoint: endpoint(),
                message: format!("HTTP {status}"),
            });
        }
        if !status.is_success() {
            return Err(ClientError::BadResponse {
                endpoint: endpoint(),
                message: format!("HTTP {status}"),
            });
        }
        let parsed: WireResponse = resp.json().map_err(|e| ClientError::BadResponse {
            endpoint: endpoint(),
            message: e.to_string(),
        })?;
        Ok(parsed.text)
    }
}

/// One line of a replay file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayRecord {
    #[serde(flatten)]
    pub tag: RequestTag,
    pub text: String,
}

/// Answers from recorded responses.
///
/// A replay directory holds `*.jsonl` files, one [`ReplayRecord`] per line,
/// read in file-name order; a later record for the same tag replaces an
/// earlier one.
#[derive(Debug, Clone, Default)]
pub struct ReplayClient {
    responses: HashMap<RequestTag, String>,
}

impl ReplayClient {
    pub fn from_records(records: impl IntoIterator<Item = ReplayRecord>) -> Self {
        Self {
            responses: records.into_iter().map(|r| (r.tag, r.text)).collect(),
        }
    }

    pub fn from_dir(dir: &Path) -> Result<Self> {
        let mut files: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(Error::Config(format!("no .jsonl replay files in {}", dir.display())));
        }
        let mut records = Vec::new();
        for path in files {
            records.extend(read_replay_file(&path)?);
        }
        Ok(Self::from_records(records))
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

pub fn read_replay_file(path: &Path) -> Result<Vec<ReplayRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::parse(path, i as u64 + 1, e.to_string())))
        .collect()
}

impl ModelClient for ReplayClient {
    fn complete(&self, request: &ModelRequest) -> Result<String, ClientError> {
        self.responses
            .get(&request.tag)
            .cloned()
            .ok_or_else(|| ClientError::NoReplayEntry(request.tag.to_string()))
    }
}
