use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use vitd_core::augment::AugmentConfig;
use vitd_core::cascade::SelfTransferConfig;
use vitd_core::models::TrainConfig;
use vitd_core::store::TrainMode;
use vitd_core::textproc::TfidfConfig;
use vitd_core::{Error, ModelSpec, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TranslatorChoice {
    /// HTTP service at TRANSLATE_API_URL.
    Live,
    /// Offline marker translator: appends "§<target>".
    Mock,
    /// Returns text unchanged.
    Identity,
}

impl TranslatorChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            TranslatorChoice::Live => "live",
            TranslatorChoice::Mock => "mock",
            TranslatorChoice::Identity => "identity",
        }
    }
}

/// Everything a run can be configured with. Relative paths are resolved
/// against the directory holding the config file; command-line flags
/// override whatever the file says.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub translator: Option<TranslatorChoice>,
    pub mode: Option<TrainMode>,
    pub model1: Option<ModelSpec>,
    pub model2: Option<ModelSpec>,
    /// Accepted for forward compatibility; training is deterministic without it.
    pub seed: Option<u64>,
    pub tfidf: TfidfConfig,
    pub stage1: TrainConfig,
    pub stage2: TrainConfig,
    pub augment: AugmentConfig,
    pub self_transfer: SelfTransferConfig,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let raw = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let mut cfg: RunConfig = serde_json::from_str(&raw)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut cfg.train,
            &mut cfg.dev,
            &mut cfg.test,
            &mut cfg.out,
            &mut cfg.cache,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.tfidf.validate()?;
        self.stage1.validate()?;
        self.stage2.validate()?;
        self.augment.validate()
    }
}

/// `value` if set, else an error naming the missing flag.
pub fn required<T: Clone>(value: &Option<T>, flag: &str) -> Result<T> {
    value
        .clone()
        .ok_or_else(|| Error::InvalidConfig(format!("{flag} is required (flag or config file)")))
}

/// Fail early, naming the path, when an input file is missing.
pub fn check_input(path: &Path) -> Result<()> {
    if path.is_file() {
        return Ok(());
    }
    Err(Error::Io {
        path: path.to_path_buf(),
        source: std::io::Error::new(std::io::ErrorKind::NotFound, "input file not found"),
    })
}
