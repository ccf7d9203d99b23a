use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TranslateError {
    /// Worth retrying: rate limiting, server errors, timeouts.
    #[error("transient: {0}")]
    Transient(String),
    #[error("{0}")]
    Fatal(String),
}

impl TranslateError {
    pub fn is_transient(&self) -> bool {
        matches!(self, TranslateError::Transient(_))
    }
}

pub trait Translator: Send + Sync {
    fn translate(&self, text: &str, source: &str, target: &str) -> Result<String, TranslateError>;
}

/// Returns its input unchanged.
#[derive(Debug, Default)]
pub struct IdentityTranslator;

impl Translator for IdentityTranslator {
    fn translate(&self, text: &str, _source: &str, _target: &str) -> Result<String, TranslateError> {
        Ok(text.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MockBehavior {
    /// `text + "§" + target`
    Marker,
    Identity,
    /// Every call fails, transiently or fatally.
    Fail { transient: bool },
}

/// Deterministic offline translator that counts its calls.
#[derive(Debug)]
pub struct MockTranslator {
    behavior: MockBehavior,
    calls: AtomicUsize,
}

impl MockTranslator {
    pub fn new(behavior: MockBehavior) -> Self {
        MockTranslator {
            behavior,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn marker() -> Self {
        MockTranslator::new(MockBehavior::Marker)
    }

    pub fn identity() -> Self {
        MockTranslator::new(MockBehavior::Identity)
    }

    pub fn failing(transient: bool) -> Self {
        MockTranslator::new(MockBehavior::Fail { transient })
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn reset_calls(&self) {
        self.calls.store(0, Ordering::SeqCst);
    }
}

impl Translator for MockTranslator {
    fn translate(&self, text: &str, _source: &str, target: &str) -> Result<String, TranslateError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        match self.behavior {
            MockBehavior::Marker => Ok(format!("{text}§{target}")),
            MockBehavior::Identity => Ok(text.to_string()),
            MockBehavior::Fail { transient: true } => {
                Err(TranslateError::Transient("mock outage".into()))
            }
            MockBehavior::Fail { transient: false } => {
                Err(TranslateError::Fatal("mock rejected request".into()))
            }
        }
    }
}

#[derive(Serialize)]
struct TranslateRequest<'a> {
    q: &'a str,
    source: &'a str,
    target: &'a str,
    format: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    api_key: Option<&'a str>,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct TranslateResponse {
    translated_text: String,
}

/// Client for a JSON translation endpoint.
pub struct HttpTranslator {
    url: String,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl HttpTranslator {
    pub fn new(url: impl Into<String>, api_key: Option<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        HttpTranslator {
            url: url.into(),
            api_key,
            agent,
        }
    }

    /// Reads `TRANSLATE_API_URL` (required) and `TRANSLATE_API_KEY` (optional).
    pub fn from_env() -> Option<Self> {
        let url = std::env::var("TRANSLATE_API_URL").ok()?;
        let key = std::env::var("TRANSLATE_API_KEY").ok().filter(|k| !k.is_empty());
        Some(HttpTranslator::new(url, key, Duration::from_secs(30)))
    }
}

fn classify_http_error(err: ureq::Error) -> TranslateError {
    match err {
        ureq::Error::StatusCode(code) if code == 429 || code >= 500 => {
            TranslateError::Transient(format!("HTTP {code}"))
        }
        ureq::Error::StatusCode(code) => TranslateError::Fatal(format!("HTTP {code}")),
        e @ (ureq::Error::Timeout(_)
        | ureq::Error::Io(_)
        | ureq::Error::ConnectionFailed
        | ureq::Error::HostNotFound) => TranslateError::Transient(e.to_string()),
        e => TranslateError::Fatal(e.to_string()),
    }
}

impl Translator for HttpTranslator {
    fn translate(&self, text: &str, source: &str, target: &str) -> Result<String, TranslateError> {
        let request = TranslateRequest {
            q: text,
            source,
            target,
            format: "text",
            api_key: self.api_key.as_deref(),
        };
        let mut response = self
            .agent
            .post(&self.url)
            .send_json(&request)
            .map_err(classify_http_error)?;
        let body: TranslateResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| TranslateError::Fatal(format!("bad response body: {e}")))?;
        if body.translated_text.trim().is_empty() {
            return Err(TranslateError::Fatal("empty translation".into()));
        }
        Ok(body.translated_text)
    }
}
