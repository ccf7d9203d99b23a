//! Translation-based augmentation.
//!
//! Two fan-outs are supported: translating every example into a set of
//! closely related languages, and back-translating through distant pivot
//! languages. Synthetic rows keep their parent's label and record where
//! they came from. Output order is always: originals, then one block per
//! language in config order, each block in original example order.

mod cache;
mod translator;

use std::collections::HashSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use cache::{cache_key, CacheStats, TranslationCache};
pub use translator::{
    HttpTranslator, IdentityTranslator, MockBehavior, MockTranslator, TranslateError, Translator,
};

use crate::corpus::{Dataset, Example, Provenance};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    pub source_lang: String,
    /// Targets for the multilingual fan-out.
    pub similar_langs: Vec<String>,
    /// Intermediaries for back-translation.
    pub pivot_langs: Vec<String>,
    pub dedup: bool,
    pub max_concurrency: usize,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            source_lang: "bn".into(),
            similar_langs: vec!["hi".into(), "ur".into(), "ta".into()],
            pivot_langs: vec!["zu".into(), "ps".into(), "az".into()],
            dedup: false,
            max_concurrency: 4,
        }
    }
}

fn is_primary_subtag(code: &str) -> bool {
    (2..=3).contains(&code.len()) && code.bytes().all(|b| b.is_ascii_lowercase())
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        let all = std::iter::once(&self.source_lang)
            .chain(&self.similar_langs)
            .chain(&self.pivot_langs);
        for code in all {
            if !is_primary_subtag(code) {
                return bad(format!("'{code}' is not a two- or three-letter language subtag"));
            }
        }
        for (what, list) in [("similar_langs", &self.similar_langs), ("pivot_langs", &self.pivot_langs)] {
            if list.contains(&self.source_lang) {
                return bad(format!("{what} contains the source language '{}'", self.source_lang));
            }
            let mut seen = HashSet::new();
            if let Some(dup) = list.iter().find(|l| !seen.insert(*l)) {
                return bad(format!("{what} lists '{dup}' twice"));
            }
        }
        if self.max_concurrency == 0 {
            return bad("max_concurrency must be >= 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    /// Retries after the first attempt, for transient errors only.
    pub max_retries: u32,
    /// Delay before the first retry; doubles on each subsequent one.
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            base_delay: Duration::from_millis(250),
        }
    }
}

impl RetryPolicy {
    pub fn no_delay() -> Self {
        RetryPolicy {
            base_delay: Duration::ZERO,
            ..Default::default()
        }
    }
}

/// A translator together with its cache and retry policy.
pub struct TranslationContext<'a> {
    pub translator: &'a dyn Translator,
    pub cache: &'a TranslationCache,
    pub retry: RetryPolicy,
}

impl<'a> TranslationContext<'a> {
    pub fn new(translator: &'a dyn Translator, cache: &'a TranslationCache) -> Self {
        TranslationContext {
            translator,
            cache,
            retry: RetryPolicy::default(),
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    /// Serve from the cache, or translate (retrying transient failures) and
    /// store. `id` names the example in errors.
    pub fn cached_translate(&self, id: &str, text: &str, source: &str, target: &str) -> Result<String> {
        if text.trim().is_empty() {
            return Err(Error::Translation {
                id: id.to_string(),
                message: "empty input".into(),
            });
        }
        if let Some(hit) = self.cache.get(source, target, text) {
            return Ok(hit);
        }
        let mut delay = self.retry.base_delay;
        let mut attempt = 0;
        let translated = loop {
            match self.translator.translate(text, source, target) {
                Ok(t) => break t,
                Err(e) if e.is_transient() && attempt < self.retry.max_retries => {
                    attempt += 1;
                    if !delay.is_zero() {
                        std::thread::sleep(delay);
                    }
                    delay *= 2;
                }
                Err(e) => {
                    let message = if e.is_transient() {
                        format!("{e} (gave up after {attempt} retries)")
                    } else {
                        e.to_string()
                    };
                    return Err(Error::Translation {
                        id: id.to_string(),
                        message,
                    });
                }
            }
        };
        if translated.trim().is_empty() {
            return Err(Error::Translation {
                id: id.to_string(),
                message: format!("translator returned empty text for {source}->{target}"),
            });
        }
        self.cache.put(source, target, text, &translated)?;
        Ok(translated)
    }
}

/// Free-function form of [`TranslationContext::cached_translate`].
pub fn cached_translate(
    ctx: &TranslationContext<'_>,
    id: &str,
    text: &str,
    source: &str,
    target: &str,
) -> Result<String> {
    ctx.cached_translate(id, text, source, target)
}

/// Map `f` over `items` with up to `workers` threads. Results come back in
/// input order; on failure the error of the lowest failing index is returned.
fn ordered_parallel_map<T, R, F>(items: &[T], workers: usize, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync,
{
    let workers = workers.clamp(1, items.len().max(1));
    if workers == 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let first_failure = AtomicUsize::new(usize::MAX);
    let slots: Mutex<Vec<Option<Result<R>>>> =
        Mutex::new(std::iter::repeat_with(|| None).take(items.len()).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= items.len() || i > first_failure.load(Ordering::SeqCst) {
                    break;
                }
                let result = f(&items[i]);
                if result.is_err() {
                    first_failure.fetch_min(i, Ordering::SeqCst);
                }
                slots.lock().unwrap()[i] = Some(result);
            });
        }
    });
    let slots = slots.into_inner().unwrap();
    let mut out = Vec::with_capacity(items.len());
    for slot in slots {
        match slot {
            Some(Ok(r)) => out.push(r),
            Some(Err(e)) => return Err(e),
            None => unreachable!("slots before the first failure are always filled"),
        }
    }
    Ok(out)
}

#[derive(Clone, Copy)]
enum Route<'l> {
    Translate(&'l str),
    BackTranslate(&'l str),
}

/// Synthetic rows for every (route, example) pair, routes outermost.
fn synthesize(
    ds: &Dataset,
    routes: &[Route<'_>],
    cfg: &AugmentConfig,
    ctx: &TranslationContext<'_>,
) -> Result<Vec<Example>> {
    cfg.validate()?;
    ds.labels()?;
    let tasks: Vec<(Route<'_>, &Example)> = routes
        .iter()
        .flat_map(|&r| ds.examples().iter().map(move |ex| (r, ex)))
        .collect();
    let src = cfg.source_lang.as_str();
    ordered_parallel_map(&tasks, cfg.max_concurrency, |&(route, ex)| match route {
        Route::Translate(lang) => {
            let text = ctx.cached_translate(&ex.id, &ex.text, src, lang)?;
            Ok(ex.derived(
                format!("{}#tr-{lang}", ex.id),
                text,
                Provenance::Translated(lang.to_string()),
            ))
        }
        Route::BackTranslate(pivot) => {
            let there = ctx.cached_translate(&ex.id, &ex.text, src, pivot)?;
            let back = ctx.cached_translate(&ex.id, &there, pivot, src)?;
            Ok(ex.derived(
                format!("{}#bt-{pivot}", ex.id),
                back,
                Provenance::BackTranslated(pivot.to_string()),
            ))
        }
    })
}

/// Language the example's text is written in.
fn text_language<'e>(ex: &'e Example, source_lang: &'e str) -> &'e str {
    match &ex.provenance {
        Provenance::Translated(lang) => lang,
        Provenance::Original | Provenance::BackTranslated(_) => source_lang,
    }
}

fn assemble(ds: &Dataset, synthetic: Vec<Example>, dedup_in: Option<&str>) -> Result<Dataset> {
    let mut examples = ds.examples().to_vec();
    match dedup_in {
        Some(source_lang) => {
            let key = |e: &Example| (text_language(e, source_lang).to_string(), e.text.clone(), e.label);
            let mut seen: HashSet<_> = examples.iter().map(key).collect();
            examples.extend(synthetic.into_iter().filter(|e| seen.insert(key(e))));
        }
        None => examples.extend(synthetic),
    }
    Dataset::new(ds.name(), examples)
}

/// Translated copy of every example into `target`, in input order. Used
/// for training on a machine-translated version of a corpus.
pub fn translate_dataset(
    ds: &Dataset,
    source: &str,
    target: &str,
    max_concurrency: usize,
    ctx: &TranslationContext<'_>,
) -> Result<Dataset> {
    let translated = ordered_parallel_map(ds.examples(), max_concurrency, |ex| {
        let text = ctx.cached_translate(&ex.id, &ex.text, source, target)?;
        Ok(ex.derived(
            format!("{}#tr-{target}", ex.id),
            text,
            Provenance::Translated(target.to_string()),
        ))
    })?;
    Dataset::new(format!("{}-{target}", ds.name()), translated)
}

/// Originals followed by one translated copy per similar language.
pub fn augment_multilingual(
    ds: &Dataset,
    cfg: &AugmentConfig,
    ctx: &TranslationContext<'_>,
) -> Result<Dataset> {
    let routes: Vec<_> = cfg.similar_langs.iter().map(|l| Route::Translate(l)).collect();
    let synthetic = synthesize(ds, &routes, cfg, ctx)?;
    assemble(ds, synthetic, None)
}

/// Originals followed by one back-translated copy per pivot language.
pub fn augment_backtranslate(
    ds: &Dataset,
    cfg: &AugmentConfig,
    ctx: &TranslationContext<'_>,
) -> Result<Dataset> {
    let routes: Vec<_> = cfg.pivot_langs.iter().map(|l| Route::BackTranslate(l)).collect();
    let synthetic = synthesize(ds, &routes, cfg, ctx)?;
    assemble(ds, synthetic, None)
}

/// Originals, then the multilingual block, then the back-translation block.
/// With `dedup`, a later row is dropped when an earlier row has the same
/// text and label in the same language.
pub fn build_combined_dataset(
    ds: &Dataset,
    cfg: &AugmentConfig,
    ctx: &TranslationContext<'_>,
) -> Result<Dataset> {
    let routes: Vec<_> = cfg
        .similar_langs
        .iter()
        .map(|l| Route::Translate(l))
        .chain(cfg.pivot_langs.iter().map(|l| Route::BackTranslate(l)))
        .collect();
    let synthetic = synthesize(ds, &routes, cfg, ctx)?;
    assemble(ds, synthetic, cfg.dedup.then_some(cfg.source_lang.as_str()))
}
