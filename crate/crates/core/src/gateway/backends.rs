use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{check_messages, ChatBackend, ChatMessage, CompletionParams, FixtureKey, GatewayError};

/// One line of a fixture file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureRecord {
    #[serde(flatten)]
    pub key: FixtureKey,
    pub text: String,
}

pub fn load_fixtures(path: &Path) -> Result<Vec<FixtureRecord>, GatewayError> {
    let text = fs::read_to_string(path)
        .map_err(|e| GatewayError::Fixture(format!("{}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            serde_json::from_str(l).map_err(|e| {
                GatewayError::Fixture(format!("{} line {}: {e}", path.display(), n + 1))
            })
        })
        .collect()
}

/// Writes records sorted by key so the file is independent of call order.
pub fn write_fixtures(path: &Path, records: &[FixtureRecord]) -> Result<(), GatewayError> {
    let io = |e: std::io::Error| GatewayError::Fixture(format!("{}: {e}", path.display()));
    let mut sorted: Vec<&FixtureRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.key.cmp(&b.key));
    let mut w = BufWriter::new(fs::File::create(path).map_err(io)?);
    for r in sorted {
        writeln!(w, "{}", serde_json::to_string(r).unwrap()).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Replays recorded replies keyed by [`FixtureKey`]; unknown keys are errors.
#[derive(Debug, Default)]
pub struct ScriptedBackend {
    table: HashMap<FixtureKey, String>,
}

impl ScriptedBackend {
    pub fn from_entries(entries: impl IntoIterator<Item = (FixtureKey, String)>) -> Self {
        Self {
            table: entries.into_iter().collect(),
        }
    }

    pub fn from_records(records: Vec<FixtureRecord>) -> Self {
        Self::from_entries(records.into_iter().map(|r| (r.key, r.text)))
    }

    pub fn from_file(path: &Path) -> Result<Self, GatewayError> {
        Ok(Self::from_records(load_fixtures(path)?))
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(
        &self,
        messages: &[ChatMessage],
        params: &CompletionParams,
    ) -> Result<String, GatewayError> {
        check_messages(messages)?;
        self.table
            .get(&params.key)
            .cloned()
            .ok_or_else(|| GatewayError::MissingFixture(params.key.clone()))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NullBackend;

impl ChatBackend for NullBackend {
    fn complete(&self, _: &[ChatMessage], _: &CompletionParams) -> Result<String, GatewayError> {
        Err(GatewayError::Disabled)
    }
}

/// Wraps a backend and keeps every reply it produced, keyed like fixtures.
pub struct RecordingBackend<B> {
    inner: B,
    log: Mutex<BTreeMap<FixtureKey, String>>,
}

impl<B: ChatBackend> RecordingBackend<B> {
    pub fn new(inner: B) -> Self {
        Self {
            inner,
            log: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn records(&self) -> Vec<FixtureRecord> {
        self.log
            .lock()
            .unwrap()
            .iter()
            .map(|(k, v)| FixtureRecord {
                key: k.clone(),
                text: v.clone(),
            })
            .collect()
    }
}

impl<B: ChatBackend> ChatBackend for RecordingBackend<B> {
    fn complete(
        &self,
        messages: &[ChatMessage],
        params: &CompletionParams,
    ) -> Result<String, GatewayError> {
        let text = self.inner.complete(messages, params)?;
        let previous = self
            .log
            .lock()
            .unwrap()
            .insert(params.key.clone(), text.clone());
        if previous.is_some_and(|p| p != text) {
            tracing::warn!(key = %params.key, "fixture key recorded twice with different text");
        }
        Ok(text)
    }

    fn deterministic(&self) -> bool {
        self.inner.deterministic()
    }
}

/// Per-process request limiter shared by all callers of one live backend.
#[derive(Debug)]
pub struct TokenBucket {
    capacity: f64,
    per_sec: f64,
    state: Mutex<(f64, Instant)>,
}

impl TokenBucket {
    pub fn per_minute(requests: u32) -> Self {
        let capacity = f64::from(requests.max(1));
        Self {
            capacity,
            per_sec: capacity / 60.0,
            state: Mutex::new((capacity, Instant::now())),
        }
    }

    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut s = self.state.lock().unwrap();
                let now = Instant::now();
                s.0 = (s.0 + now.duration_since(s.1).as_secs_f64() * self.per_sec)
                    .min(self.capacity);
                s.1 = now;
                if s.0 >= 1.0 {
                    s.0 -= 1.0;
                    return;
                }
                (1.0 - s.0) / self.per_sec
            };
            thread::sleep(Duration::from_secs_f64(wait));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiveSettings {
    pub base_url: String,
    pub model: String,
    #[serde(skip)]
    pub api_key: Option<String>,
    pub requests_per_minute: u32,
    pub timeout_secs: u64,
}

/// OpenAI-style `POST {base}/chat/completions`.
pub struct LiveBackend {
    settings: LiveSettings,
    agent: ureq::Agent,
    bucket: TokenBucket,
}

impl LiveBackend {
    pub const ATTEMPTS: usize = 3;

    pub fn new(settings: LiveSettings) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(settings.timeout_secs.max(1))))
            .build()
            .into();
        let bucket = TokenBucket::per_minute(settings.requests_per_minute);
        Self {
            settings,
            agent,
            bucket,
        }
    }

    fn request(
        &self,
        messages: &[ChatMessage],
        params: &CompletionParams,
    ) -> Result<String, String> {
        let url = format!("{}/chat/completions", self.settings.base_url.trim_end_matches('/'));
        let mut req = self.agent.post(url);
        if let Some(key) = &self.settings.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let body = json!({
            "model": self.settings.model,
            "messages": messages,
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
        });
        let mut resp = req.send_json(body).map_err(|e| e.to_string())?;
        let v: serde_json::Value = resp.body_mut().read_json().map_err(|e| e.to_string())?;
        match v["choices"][0]["message"]["content"].as_str() {
            Some(s) if !s.trim().is_empty() => Ok(s.to_string()),
            Some(_) => Err("empty completion".into()),
            None => Err("response lacks choices[0].message.content".into()),
        }
    }
}

impl ChatBackend for LiveBackend {
    fn complete(
        &self,
        messages: &[ChatMessage],
        params: &CompletionParams,
    ) -> Result<String, GatewayError> {
        check_messages(messages)?;
        let mut last = String::new();
        for attempt in 0..Self::ATTEMPTS {
            if attempt > 0 {
                thread::sleep(Duration::from_millis(500 << attempt));
            }
            self.bucket.acquire();
            match self.request(messages, params) {
                Ok(text) => return Ok(text),
                Err(e) => {
                    tracing::warn!(key = %params.key, attempt, error = %e, "live completion failed");
                    last = e;
                }
            }
        }
        Err(GatewayError::Http {
            attempts: Self::ATTEMPTS,
            message: last,
        })
    }

    fn deterministic(&self) -> bool {
        false
    }
}
