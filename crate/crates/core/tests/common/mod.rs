#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vitd_core::textproc::SparseVector;
use vitd_core::{Dataset, Label};

/// Linearly separable three-class text corpus: each class draws most of its
/// words from its own vocabulary, the rest from a shared pool.
pub fn synthetic_corpus(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let own = |prefix: &str| (0..10).map(|i| format!("{prefix}{i}")).collect::<Vec<_>>();
    let vocab = [own("shanti"), own("hushiyar"), own("akraman")];
    let shared = own("common");
    let labels = [Label::NonViolence, Label::PassiveViolence, Label::DirectViolence];
    let pairs = (0..n).map(|i| {
        let class = i % 3;
        let mut words: Vec<String> = (0..rng.gen_range(3..7))
            .map(|_| vocab[class].choose(&mut rng).unwrap().clone())
            .collect();
        words.extend((0..rng.gen_range(1..4)).map(|_| shared.choose(&mut rng).unwrap().clone()));
        words.shuffle(&mut rng);
        (words.join(" "), Some(labels[class]))
    });
    Dataset::from_pairs("train", pairs).unwrap()
}

/// Three well separated blobs in 4 dimensions.
pub fn blobs(n: usize, seed: u64) -> (Vec<SparseVector>, Vec<u8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = [[3.0, 0.0, 0.0, 0.5], [0.0, 3.0, 0.0, 0.5], [0.0, 0.0, 3.0, 0.5]];
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % 3;
        let point: Vec<f64> = centers[c]
            .iter()
            .map(|&m| m + rng.gen_range(-0.75..0.75))
            .collect();
        xs.push(SparseVector::from_dense(&point));
        ys.push(c as u8);
    }
    (xs, ys)
}

/// Macro F1 by direct counting, using F1 = 2TP / (2TP + FP + FN).
pub fn brute_force_macro_f1(gold: &[u8], pred: &[u8], classes: &[u8]) -> f64 {
    let mut total = 0.0;
    for &c in classes {
        let (mut tp, mut fp, mut fnn) = (0u32, 0u32, 0u32);
        for (&g, &p) in gold.iter().zip(pred) {
            match (g == c, p == c) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fnn += 1,
                (false, false) => {}
            }
        }
        let den = 2 * tp + fp + fnn;
        total += if den == 0 { 0.0 } else { 2.0 * tp as f64 / den as f64 };
    }
    total / classes.len() as f64
}

pub fn random_pairs(rng: &mut impl Rng, n: usize) -> (Vec<u8>, Vec<u8>) {
    let gold = (0..n).map(|_| rng.gen_range(0..3)).collect();
    let pred = (0..n).map(|_| rng.gen_range(0..3)).collect();
    (gold, pred)
}

pub struct StubServer {
    pub url: String,
    pub requests: Arc<Mutex<Vec<serde_json::Value>>>,
    handle: Option<JoinHandle<()>>,
}

impl StubServer {
    /// Serve `expected` requests, answering each JSON body with `respond(body)`
    /// as `(status, json)`.
    pub fn start(
        expected: usize,
        respond: impl Fn(&serde_json::Value) -> (u16, serde_json::Value) + Send + 'static,
    ) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/", listener.local_addr().unwrap());
        let requests = Arc::new(Mutex::new(Vec::new()));
        let log = Arc::clone(&requests);
        let handle = std::thread::spawn(move || {
            for _ in 0..expected {
                let (stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut content_length = 0usize;
                let mut chunked = false;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    let line = line.trim_end();
                    if line.is_empty() {
                        break;
                    }
                    let lower = line.to_ascii_lowercase();
                    if let Some(v) = lower.strip_prefix("content-length:") {
                        content_length = v.trim().parse().unwrap();
                    }
                    if lower.starts_with("transfer-encoding:") && lower.contains("chunked") {
                        chunked = true;
                    }
                }
                let body = if chunked {
                    let mut body = Vec::new();
                    loop {
                        let mut size = String::new();
                        reader.read_line(&mut size).unwrap();
                        let n = usize::from_str_radix(size.trim(), 16).unwrap();
                        let mut chunk = vec![0; n + 2];
                        reader.read_exact(&mut chunk).unwrap();
                        if n == 0 {
                            break;
                        }
                        body.extend_from_slice(&chunk[..n]);
                    }
                    body
                } else {
                    let mut body = vec![0; content_length];
                    reader.read_exact(&mut body).unwrap();
                    body
                };
                let json: serde_json::Value = serde_json::from_slice(&body).unwrap();
                let (status, reply) = respond(&json);
                log.lock().unwrap().push(json);
                let payload = reply.to_string();
                let mut stream = stream;
                write!(
                    stream,
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
                    payload.len()
                )
                .unwrap();
                stream.flush().unwrap();
            }
        });
        StubServer {
            url,
            requests,
            handle: Some(handle),
        }
    }

    pub fn join(mut self) -> Vec<serde_json::Value> {
        self.handle.take().unwrap().join().unwrap();
        let log = self.requests.lock().unwrap();
        log.clone()
    }
}
