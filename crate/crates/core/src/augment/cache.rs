//! Content-addressed translation cache.
//!
//! Keys are the SHA-256 of `source|target|text`. Disk-backed caches keep one
//! JSON file per key, named by the hex digest.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CacheEntry {
    source: String,
    target: String,
    input: String,
    output: String,
    timestamp: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
}

impl CacheStats {
    /// Fraction of lookups served from the cache; 1.0 when nothing was looked up.
    pub fn hit_ratio(&self) -> f64 {
        let total = self.hits + self.misses;
        if total == 0 {
            1.0
        } else {
            self.hits as f64 / total as f64
        }
    }
}

#[derive(Debug)]
pub struct TranslationCache {
    dir: Option<PathBuf>,
    memory: RwLock<HashMap<String, String>>,
    write_lock: Mutex<()>,
    hits: AtomicU64,
    misses: AtomicU64,
}

pub fn cache_key(source: &str, target: &str, text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(source.as_bytes());
    hasher.update(b"|");
    hasher.update(target.as_bytes());
    hasher.update(b"|");
    hasher.update(text.as_bytes());
    hex::encode(hasher.finalize())
}

impl TranslationCache {
    pub fn in_memory() -> Self {
        TranslationCache {
            dir: None,
            memory: RwLock::new(HashMap::new()),
            write_lock: Mutex::new(()),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }

    /// Open (creating if needed) a cache directory.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(TranslationCache {
            dir: Some(dir),
            ..TranslationCache::in_memory()
        })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn entry_path(&self, key: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{key}.json")))
    }

    /// Look up without touching the hit/miss counters.
    pub fn peek(&self, source: &str, target: &str, text: &str) -> Option<String> {
        let key = cache_key(source, target, text);
        if let Some(v) = self.memory.read().unwrap().get(&key) {
            return Some(v.clone());
        }
        let path = self.entry_path(&key)?;
        let raw = std::fs::read_to_string(path).ok()?;
        let entry: CacheEntry = serde_json::from_str(&raw).ok()?;
        if entry.source != source || entry.target != target || entry.input != text {
            return None;
        }
        self.memory.write().unwrap().insert(key, entry.output.clone());
        Some(entry.output)
    }

    /// Look up and record a hit or miss.
    pub fn get(&self, source: &str, target: &str, text: &str) -> Option<String> {
        let found = self.peek(source, target, text);
        let counter = if found.is_some() { &self.hits } else { &self.misses };
        counter.fetch_add(1, Ordering::Relaxed);
        found
    }

    pub fn put(&self, source: &str, target: &str, text: &str, output: &str) -> Result<()> {
        let key = cache_key(source, target, text);
        let _guard = self.write_lock.lock().unwrap();
        if let Some(path) = self.entry_path(&key) {
            let entry = CacheEntry {
                source: source.to_string(),
                target: target.to_string(),
                input: text.to_string(),
                output: output.to_string(),
                timestamp: SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map_or(0, |d| d.as_secs()),
            };
            let tmp = path.with_extension("json.tmp");
            std::fs::write(&tmp, serde_json::to_vec(&entry)?).map_err(|e| Error::io(&tmp, e))?;
            std::fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
        }
        self.memory.write().unwrap().insert(key, output.to_string());
        Ok(())
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            hits: self.hits.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
        }
    }

    pub fn reset_stats(&self) {
        self.hits.store(0, Ordering::Relaxed);
        self.misses.store(0, Ordering::Relaxed);
    }
}
