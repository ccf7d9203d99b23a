//! On-disk artifacts: model directories with a hashed manifest, and
//! prediction JSONL files.
//!
//! A flat model directory holds `manifest.json` plus the stage files at its
//! root. A cascade directory holds `manifest.json`, `stage1/` and `stage2/`.
//! Each stage is either `vectorizer.json` + `model.json`, or
//! `external.json` for an endpoint.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cascade::{CascadeModel, CascadePrediction};
use crate::classifier::TextModel;
use crate::corpus::{ClassLabel, Dataset, Label};
use crate::error::{Error, Result};
use crate::models::{Endpoint, LinearModel};
use crate::textproc::TfidfModel;

pub const MANIFEST_FILE: &str = "manifest.json";
const MANIFEST_VERSION: u32 = 1;
const VECTORIZER_FILE: &str = "vectorizer.json";
const MODEL_FILE: &str = "model.json";
const EXTERNAL_FILE: &str = "external.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of a value's JSON encoding.
pub fn json_hash<T: Serialize>(value: &T) -> Result<String> {
    Ok(sha256_hex(serde_json::to_string(value)?.as_bytes()))
}

/// Hash of a dataset's canonical TSV serialization.
pub fn dataset_hash<L: ClassLabel>(ds: &Dataset<L>) -> Result<String> {
    Ok(sha256_hex(ds.to_tsv_string()?.as_bytes()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrainMode {
    Flat,
    Cascade,
    SelfTransfer,
}

impl std::str::FromStr for TrainMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat" => Ok(TrainMode::Flat),
            "cascade" => Ok(TrainMode::Cascade),
            "self-transfer" => Ok(TrainMode::SelfTransfer),
            other => Err(Error::InvalidConfig(format!(
                "unknown mode '{other}' (expected flat, cascade or self-transfer)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum ModelBundle {
    /// A single three-class model (also what self-transfer produces).
    Flat(TextModel),
    Cascade(CascadeModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageEntry {
    pub kind: String,
    /// File name (relative to the stage directory) → SHA-256.
    pub files: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelManifest {
    pub format_version: u32,
    pub mode: TrainMode,
    /// Stage name ("model", "stage1", "stage2") → entry.
    pub stages: BTreeMap<String, StageEntry>,
    pub config: serde_json::Value,
    pub config_hash: String,
    pub data_hash: String,
    /// Wall-clock creation time; the only field that varies between identical runs.
    pub created_unix: u64,
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).map_err(|e| Error::io(path, e))
}

fn write_stage(dir: &Path, model: &TextModel) -> Result<StageEntry> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = BTreeMap::new();
    let kind = model.spec().to_string();
    let contents: Vec<(&str, String)> = match model {
        TextModel::Linear { vectorizer, model } => vec![
            (VECTORIZER_FILE, vectorizer.to_json()?),
            (MODEL_FILE, model.to_json()?),
        ],
        TextModel::External { endpoint } => {
            vec![(EXTERNAL_FILE, serde_json::to_string_pretty(endpoint)?)]
        }
    };
    for (name, content) in contents {
        write_file(&dir.join(name), &content)?;
        files.insert(name.to_string(), sha256_hex(content.as_bytes()));
    }
    Ok(StageEntry { kind, files })
}

fn read_verified(dir: &Path, entry: &StageEntry, name: &str) -> Result<String> {
    let expected = entry
        .files
        .get(name)
        .ok_or_else(|| Error::Integrity(format!("manifest does not list {name}")))?;
    let path = dir.join(name);
    let content = std::fs::read_to_string(&path)
        .map_err(|e| Error::Integrity(format!("{}: {e}", path.display())))?;
    if &sha256_hex(content.as_bytes()) != expected {
        return Err(Error::Integrity(format!(
            "{} does not match its manifest hash",
            path.display()
        )));
    }
    Ok(content)
}

fn integrity<T>(what: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Integrity(_) => e,
        other => Error::Integrity(format!("{what}: {other}")),
    })
}

fn read_stage(dir: &Path, entry: &StageEntry) -> Result<TextModel> {
    if entry.files.contains_key(EXTERNAL_FILE) {
        let raw = read_verified(dir, entry, EXTERNAL_FILE)?;
        let endpoint: Endpoint = integrity(EXTERNAL_FILE, serde_json::from_str(&raw).map_err(Error::from))?;
        return Ok(TextModel::External { endpoint });
    }
    let vectorizer = integrity(
        VECTORIZER_FILE,
        TfidfModel::from_json(&read_verified(dir, entry, VECTORIZER_FILE)?),
    )?;
    let model = integrity(
        MODEL_FILE,
        LinearModel::from_json(&read_verified(dir, entry, MODEL_FILE)?),
    )?;
    if model.feature_dim() != vectorizer.dim() {
        return Err(Error::Integrity(format!(
            "model expects {} features but the vectorizer produces {}",
            model.feature_dim(),
            vectorizer.dim()
        )));
    }
    if model.kind().as_str() != entry.kind {
        return Err(Error::Integrity(format!(
            "manifest says {} but model.json holds {}",
            entry.kind,
            model.kind().as_str()
        )));
    }
    Ok(TextModel::Linear { vectorizer, model })
}

/// Write a model directory. `config` and `data_hash` are recorded verbatim
/// in the manifest.
pub fn save_model_dir(
    dir: &Path,
    mode: TrainMode,
    bundle: &ModelBundle,
    config: serde_json::Value,
    data_hash: String,
) -> Result<ModelManifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut stages = BTreeMap::new();
    match bundle {
        ModelBundle::Flat(model) => {
            stages.insert("model".to_string(), write_stage(dir, model)?);
        }
        ModelBundle::Cascade(c) => {
            stages.insert("stage1".to_string(), write_stage(&dir.join("stage1"), &c.stage1)?);
            stages.insert("stage2".to_string(), write_stage(&dir.join("stage2"), &c.stage2)?);
        }
    }
    let manifest = ModelManifest {
        format_version: MANIFEST_VERSION,
        mode,
        stages,
        config_hash: json_hash(&config)?,
        config,
        data_hash,
        created_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
    };
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    write_file(&dir.join(MANIFEST_FILE), &json)?;
    Ok(manifest)
}

/// Read and verify a model directory.
pub fn load_model_dir(dir: &Path) -> Result<(ModelManifest, ModelBundle)> {
    let path = dir.join(MANIFEST_FILE);
    let raw = std::fs::read_to_string(&path)
        .map_err(|e| Error::Integrity(format!("{}: {e}", path.display())))?;
    let manifest: ModelManifest = serde_json::from_str(&raw)
        .map_err(|e| Error::Integrity(format!("corrupted manifest {}: {e}", path.display())))?;
    if manifest.format_version != MANIFEST_VERSION {
        return Err(Error::Integrity(format!(
            "unsupported manifest version {}",
            manifest.format_version
        )));
    }
    if json_hash(&manifest.config)? != manifest.config_hash {
        return Err(Error::Integrity("config does not match config_hash".into()));
    }
    let stage = |name: &str| {
        manifest
            .stages
            .get(name)
            .ok_or_else(|| Error::Integrity(format!("manifest has no '{name}' stage")))
    };
    let bundle = match manifest.mode {
        TrainMode::Flat | TrainMode::SelfTransfer => {
            ModelBundle::Flat(read_stage(dir, stage("model")?)?)
        }
        TrainMode::Cascade => ModelBundle::Cascade(CascadeModel {
            stage1: read_stage(&dir.join("stage1"), stage("stage1")?)?,
            stage2: read_stage(&dir.join("stage2"), stage("stage2")?)?,
        }),
    };
    Ok((manifest, bundle))
}

/// One line of a predictions file. `stage1`/`stage2` are only present for
/// cascade output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    #[serde(rename = "final")]
    pub final_label: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage1: Option<u8>,
    /// Outer `None`: field absent (flat). `Some(None)`: not routed to stage 2.
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        with = "nullable"
    )]
    pub stage2: Option<Option<u8>>,
}

mod nullable {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Option<u8>>, s: S) -> Result<S::Ok, S::Error> {
        v.flatten().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Option<u8>>, D::Error> {
        Option::<u8>::deserialize(d).map(Some)
    }
}

impl From<&CascadePrediction> for PredictionRecord {
    fn from(p: &CascadePrediction) -> Self {
        PredictionRecord {
            id: p.id.clone(),
            final_label: p.final_label.code(),
            stage1: Some(p.stage1.code()),
            stage2: Some(p.stage2.map(Label::code)),
        }
    }
}

impl PredictionRecord {
    pub fn flat(id: impl Into<String>, label: u8) -> Self {
        PredictionRecord {
            id: id.into(),
            final_label: label,
            stage1: None,
            stage2: None,
        }
    }
}

pub fn write_predictions_jsonl(records: &[PredictionRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn read_predictions_jsonl(input: &str) -> Result<Vec<PredictionRecord>> {
    input
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::MalformedRow {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}
