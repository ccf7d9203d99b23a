//! Text-in, label-out classifiers: a TF-IDF vectorizer feeding a linear
//! model, or an external endpoint.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::models::{predict_external, train, Endpoint, LinearModel, ModelKind, TrainConfig};
use crate::textproc::{TfidfConfig, TfidfModel};

/// Which classifier backs a stage: `logreg`, `svm` or `external:<endpoint>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelSpec {
    Linear(ModelKind),
    External(Endpoint),
}

impl std::str::FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.strip_prefix("external:") {
            Some(endpoint) => Ok(ModelSpec::External(Endpoint::parse(endpoint)?)),
            None => Ok(ModelSpec::Linear(s.parse()?)),
        }
    }
}

impl std::fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelSpec::Linear(kind) => f.write_str(kind.as_str()),
            ModelSpec::External(ep) => write!(f, "external:{ep}"),
        }
    }
}

impl Serialize for ModelSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ModelSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum TextModel {
    Linear {
        vectorizer: TfidfModel,
        model: LinearModel,
    },
    External {
        endpoint: Endpoint,
    },
}

impl TextModel {
    /// Fit a vectorizer on `texts` and train `spec` on the result. External
    /// specs are assumed to be trained elsewhere and are only recorded.
    pub fn train<S: AsRef<str>>(
        spec: &ModelSpec,
        texts: &[S],
        labels: &[u8],
        tfidf: &TfidfConfig,
        cfg: &TrainConfig,
    ) -> Result<Self> {
        match spec {
            ModelSpec::Linear(kind) => {
                if texts.len() != labels.len() {
                    return Err(Error::LengthMismatch {
                        left: texts.len(),
                        right: labels.len(),
                    });
                }
                let vectorizer = TfidfModel::fit(texts, tfidf)?;
                let xs = vectorizer.transform_all(texts);
                let model = train(*kind, &xs, labels, cfg)?;
                Ok(TextModel::Linear { vectorizer, model })
            }
            ModelSpec::External(endpoint) => Ok(TextModel::External {
                endpoint: endpoint.clone(),
            }),
        }
    }

    pub fn spec(&self) -> ModelSpec {
        match self {
            TextModel::Linear { model, .. } => ModelSpec::Linear(model.kind()),
            TextModel::External { endpoint } => ModelSpec::External(endpoint.clone()),
        }
    }

    /// Label every text; each label must be one of `allowed`.
    pub fn classify(&self, texts: &[&str], allowed: &[u8]) -> Result<Vec<u8>> {
        match self {
            TextModel::Linear { vectorizer, model } => {
                if let Some(c) = model.classes().iter().find(|c| !allowed.contains(c)) {
                    return Err(Error::Integrity(format!(
                        "model predicts class {c}, expected one of {allowed:?}"
                    )));
                }
                texts
                    .iter()
                    .map(|t| model.predict(&vectorizer.transform(t)).map(|p| p.label))
                    .collect()
            }
            TextModel::External { endpoint } => {
                predict_external(endpoint.connect().as_ref(), texts, allowed)
            }
        }
    }
}
