//! Boundary for classifiers that live outside this process.
//!
//! Wire protocol, both transports: request `{"texts": [...]}`, response
//! `{"labels": [...]}` with integer codes. Over a subprocess pipe the
//! request is written as a single JSON line on stdin and the first
//! non-empty stdout line is the response.

use std::io::{BufRead, BufReader, Write};
use std::process::{Command, Stdio};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Serialize)]
struct ClassifyRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct ClassifyResponse {
    labels: Vec<i64>,
}

pub trait ExternalClassifier: Send + Sync {
    /// Raw labels, one per text, not yet validated.
    fn classify(&self, texts: &[&str]) -> Result<Vec<i64>>;
}

impl<F> ExternalClassifier for F
where
    F: Fn(&[&str]) -> Result<Vec<i64>> + Send + Sync,
{
    fn classify(&self, texts: &[&str]) -> Result<Vec<i64>> {
        self(texts)
    }
}

/// Where an external classifier can be reached.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    /// HTTP POST to this URL.
    Http(String),
    /// Program and arguments speaking the protocol over stdin/stdout.
    Command(Vec<String>),
}

impl Endpoint {
    /// `http(s)://...` is an HTTP endpoint; anything else is a
    /// whitespace-separated command line.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if spec.starts_with("http://") || spec.starts_with("https://") {
            return Ok(Endpoint::Http(spec.to_string()));
        }
        let argv: Vec<String> = spec.split_whitespace().map(str::to_string).collect();
        if argv.is_empty() {
            return Err(Error::InvalidConfig("empty external endpoint".into()));
        }
        Ok(Endpoint::Command(argv))
    }

    pub fn connect(&self) -> Box<dyn ExternalClassifier> {
        match self {
            Endpoint::Http(url) => Box::new(HttpClassifier { url: url.clone() }),
            Endpoint::Command(argv) => Box::new(SubprocessClassifier { argv: argv.clone() }),
        }
    }
}

impl std::fmt::Display for Endpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Endpoint::Http(url) => f.write_str(url),
            Endpoint::Command(argv) => f.write_str(&argv.join(" ")),
        }
    }
}

pub struct HttpClassifier {
    url: String,
}

impl ExternalClassifier for HttpClassifier {
    fn classify(&self, texts: &[&str]) -> Result<Vec<i64>> {
        let mut response = ureq::post(&self.url)
            .send_json(ClassifyRequest { texts })
            .map_err(|e| Error::External(format!("{} unreachable: {e}", self.url)))?;
        let body: ClassifyResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| Error::External(format!("bad response from {}: {e}", self.url)))?;
        Ok(body.labels)
    }
}

pub struct SubprocessClassifier {
    argv: Vec<String>,
}

impl ExternalClassifier for SubprocessClassifier {
    fn classify(&self, texts: &[&str]) -> Result<Vec<i64>> {
        let program = &self.argv[0];
        let mut child = Command::new(program)
            .args(&self.argv[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::External(format!("{program} unreachable: {e}")))?;

        let mut request = serde_json::to_string(&ClassifyRequest { texts })?;
        request.push('\n');
        {
            let mut stdin = child.stdin.take().expect("stdin is piped");
            stdin
                .write_all(request.as_bytes())
                .map_err(|e| Error::External(format!("writing to {program}: {e}")))?;
        }
        let stdout = child.stdout.take().expect("stdout is piped");
        let mut line = String::new();
        for l in BufReader::new(stdout).lines() {
            let l = l.map_err(|e| Error::External(format!("reading from {program}: {e}")))?;
            if !l.trim().is_empty() {
                line = l;
                break;
            }
        }
        let status = child
            .wait()
            .map_err(|e| Error::External(format!("{program}: {e}")))?;
        if line.is_empty() {
            return Err(Error::External(format!(
                "{program} produced no response ({status})"
            )));
        }
        let body: ClassifyResponse = serde_json::from_str(&line)
            .map_err(|e| Error::External(format!("bad response from {program}: {e}")))?;
        Ok(body.labels)
    }
}

/// Classify `texts` externally and check every label is in `allowed`.
pub fn predict_external(
    adapter: &dyn ExternalClassifier,
    texts: &[&str],
    allowed: &[u8],
) -> Result<Vec<u8>> {
    if texts.is_empty() {
        return Ok(Vec::new());
    }
    let labels = adapter.classify(texts)?;
    if labels.len() != texts.len() {
        return Err(Error::External(format!(
            "count mismatch: sent {} texts, got {} labels",
            texts.len(),
            labels.len()
        )));
    }
    labels
        .into_iter()
        .map(|l| {
            u8::try_from(l)
                .ok()
                .filter(|c| allowed.contains(c))
                .ok_or_else(|| {
                    Error::External(format!("invalid label {l}, expected one of {allowed:?}"))
                })
        })
        .collect()
}
