//! Completion clients: a live OpenAI-style HTTP client, a replay client
//! backed by fixture files, and a scripted client for tests.

use std::collections::VecDeque;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// A text-completion backend. Implementations must be safe to call from
/// multiple generation workers at once.
pub trait CompletionClient: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String>;

    /// Deterministic clients replay canned responses; the pipeline omits
    /// wall-clock timestamps from their transcripts so runs stay
    /// byte-identical.
    fn deterministic(&self) -> bool {
        false
    }
}

/// Key used to store and look up replayed responses: the first 16 hex chars
/// of the SHA-256 of the prompt text. Model and decoding parameters are
/// deliberately excluded so fixture sets survive configuration tweaks.
pub fn request_hash(prompt: &str) -> String {
    let digest = Sha256::digest(prompt.as_bytes());
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    hex[..16].to_string()
}

/// Replays responses from a directory of `<request-hash>.txt` files.
pub struct MockCompletionClient {
    dir: PathBuf,
    calls: AtomicUsize,
}

impl MockCompletionClient {
    pub fn new(dir: impl AsRef<Path>) -> Self {
        Self { dir: dir.as_ref().to_path_buf(), calls: AtomicUsize::new(0) }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    /// Stores a canned response under the hash of its prompt. Used to build
    /// fixture directories.
    pub fn write_fixture(dir: impl AsRef<Path>, prompt: &str, response: &str) -> Result<String> {
        let hash = request_hash(prompt);
        fs::create_dir_all(dir.as_ref())?;
        fs::write(dir.as_ref().join(format!("{hash}.txt")), response)?;
        Ok(hash)
    }
}

impl CompletionClient for MockCompletionClient {
    fn complete(&self, prompt: &str) -> Result<String> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let hash = request_hash(prompt);
        let path = self.dir.join(format!("{hash}.txt"));
        fs::read_to_string(&path).map_err(|_| {
            let head: String = prompt.chars().take(60).collect();
            Error::unknown("mock response", format!("{hash} (prompt starts: {head:?})"))
        })
    }

    fn deterministic(&self) -> bool {
        true
    }
}

/// Returns queued responses in order. Only meaningful with sequential
/// pipeline execution (`jobs = 1`), since parallel workers would race for the
/// queue.
#[derive(Default)]
pub struct ScriptedCompletionClient {
    responses: Mutex<VecDeque<String>>,
    calls: AtomicUsize,
}

impl ScriptedCompletionClient {
    pub fn new(responses: impl IntoIterator<Item = String>) -> Self {
        Self {
            responses: Mutex::new(responses.into_iter().collect()),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl CompletionClient for ScriptedCompletionClient {
    fn complete(&self, _prompt: &str) -> Result<String> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.responses
            .lock()
            .expect("scripted client mutex poisoned")
            .pop_front()
            .ok_or_else(|| Error::Service { attempts: 1, message: "script exhausted".into() })
    }

    fn deterministic(&self) -> bool {
        true
    }
}

/// Chat-completions HTTP client for any OpenAI-compatible endpoint.
///
/// Decoding defaults to temperature 0 for reproducibility. Transient
/// failures are retried with exponential backoff up to `max_retries` extra
/// attempts.
pub struct HttpCompletionClient {
    base_url: String,
    model: String,
    api_key: Option<String>,
    temperature: f64,
    max_retries: u32,
    backoff: Duration,
    client: reqwest::blocking::Client,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    temperature: f64,
    messages: [ChatMessage<'a>; 1],
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatChoiceMessage,
}

#[derive(Deserialize)]
struct ChatChoiceMessage {
    content: String,
}

impl HttpCompletionClient {
    pub fn new(
        base_url: impl Into<String>,
        model: impl Into<String>,
        api_key: Option<String>,
    ) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(300))
            .build()
            .map_err(|e| Error::Service { attempts: 0, message: e.to_string() })?;
        Ok(Self {
            base_url: base_url.into(),
            model: model.into(),
            api_key,
            temperature: 0.0,
            max_retries: 3,
            backoff: Duration::from_millis(500),
            client,
        })
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn with_retries(mut self, max_retries: u32, backoff: Duration) -> Self {
        self.max_retries = max_retries;
        self.backoff = backoff;
        self
    }

    fn endpoint(&self) -> String {
        let base = self.base_url.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        }
    }

    fn request_once(&self, prompt: &str) -> std::result::Result<String, String> {
        let body = ChatRequest {
            model: &self.model,
            temperature: self.temperature,
            messages: [ChatMessage { role: "user", content: prompt }],
        };
        let mut req = self.client.post(self.endpoint()).json(&body);
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let resp = req.send().map_err(|e| e.to_string())?;
        let status = resp.status();
        if !status.is_success() {
            return Err(format!("HTTP {status}"));
        }
        let parsed: ChatResponse = resp.json().map_err(|e| e.to_string())?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| "response carried no choices".to_string())
    }
}

impl CompletionClient for HttpCompletionClient {
    fn complete(&self, prompt: &str) -> Result<String> {
        let attempts = self.max_retries + 1;
        let mut last_error = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(self.backoff * 2u32.pow(attempt - 1));
            }
            match self.request_once(prompt) {
                Ok(text) => return Ok(text),
                Err(message) => last_error = message,
            }
        }
        Err(Error::Service { attempts, message: last_error })
    }
}
