//! Two-step classification.
//!
//! Stage 1 separates violent from non-violent text; stage 2 only sees what
//! stage 1 called violent and decides passive versus direct. Predictions
//! are merged back in input order.

use serde::{Deserialize, Serialize};

use crate::augment::{translate_dataset, TranslationContext};
use crate::classifier::{ModelSpec, TextModel};
use crate::corpus::{BinaryLabel, ClassLabel, Dataset, Example, Label};
use crate::error::{Error, Result};
use crate::models::{train, LinearModel, ModelKind, TrainConfig};
use crate::textproc::{TfidfConfig, TfidfModel};

pub const STAGE1_CLASSES: [u8; 2] = [0, 1];
pub const STAGE2_CLASSES: [u8; 2] = [1, 2];
pub const FLAT_CLASSES: [u8; 3] = [0, 1, 2];

/// Relabel into violent (1) / non-violent (0).
pub fn make_binary_dataset(ds: &Dataset) -> Result<Dataset<BinaryLabel>> {
    ds.remap(&format!("{}-binary", ds.name()), Label::to_binary)
}

/// Keep only passive and direct violence, in original order.
pub fn make_violent_only_dataset(ds: &Dataset) -> Result<Dataset> {
    ds.labels()?;
    let violent = ds.filter(&format!("{}-violent", ds.name()), |e| {
        e.label.is_some_and(Label::is_violent)
    });
    if violent.is_empty() {
        return Err(Error::NoViolentExamples);
    }
    Ok(violent)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CascadeConfig {
    pub model1: ModelSpec,
    pub model2: ModelSpec,
    #[serde(default)]
    pub tfidf: TfidfConfig,
    #[serde(default)]
    pub stage1: TrainConfig,
    #[serde(default)]
    pub stage2: TrainConfig,
}

impl Default for CascadeConfig {
    fn default() -> Self {
        CascadeConfig {
            model1: ModelSpec::Linear(ModelKind::Logreg),
            model2: ModelSpec::Linear(ModelKind::Logreg),
            tfidf: TfidfConfig::default(),
            stage1: TrainConfig::default(),
            stage2: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeModel {
    pub stage1: TextModel,
    pub stage2: TextModel,
}

fn distinct(codes: &[u8]) -> usize {
    let mut c = codes.to_vec();
    c.sort_unstable();
    c.dedup();
    c.len()
}

/// Train both stages, each with its own vectorizer fitted on the texts it
/// sees: stage 1 on the whole relabeled corpus, stage 2 on the gold-violent
/// subset.
pub fn train_cascade(new_dataset: &Dataset, cfg: &CascadeConfig) -> Result<CascadeModel> {
    cfg.stage1.validate()?;
    cfg.stage2.validate()?;
    if new_dataset.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let labels = new_dataset.labels()?;
    let violent_codes: Vec<u8> = labels
        .iter()
        .filter(|l| l.is_violent())
        .map(|l| l.code())
        .collect();
    let found = distinct(&violent_codes);
    if found < 2 {
        return Err(Error::SingleClassStage { stage: 2, found });
    }
    if violent_codes.len() == labels.len() {
        return Err(Error::SingleClassStage { stage: 1, found: 1 });
    }

    let first = make_binary_dataset(new_dataset)?;
    let stage1 = TextModel::train(
        &cfg.model1,
        &first.texts(),
        &first.label_codes()?,
        &cfg.tfidf,
        &cfg.stage1,
    )?;

    let second = make_violent_only_dataset(new_dataset)?;
    let stage2 = TextModel::train(
        &cfg.model2,
        &second.texts(),
        &second.label_codes()?,
        &cfg.tfidf,
        &cfg.stage2,
    )?;
    Ok(CascadeModel { stage1, stage2 })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CascadePrediction {
    pub id: String,
    pub final_label: Label,
    pub stage1: BinaryLabel,
    /// Present exactly when stage 1 said violent.
    pub stage2: Option<Label>,
}

impl CascadePrediction {
    pub fn is_consistent(&self) -> bool {
        match (self.stage1, self.stage2) {
            (BinaryLabel::NonViolent, None) => self.final_label == Label::NonViolence,
            (BinaryLabel::Violent, Some(s2)) => s2.is_violent() && self.final_label == s2,
            _ => false,
        }
    }

    /// `{"id","final","stage1","stage2"}` with integer codes.
    pub fn to_json_line(&self) -> String {
        let row = crate::store::PredictionRecord::from(self);
        serde_json::to_string(&row).expect("prediction rows always serialize")
    }
}

/// Anything that labels a batch of texts; lets callers observe or replace
/// the stages of a cascade.
pub trait StageClassifier {
    fn classify(&self, texts: &[&str]) -> Result<Vec<u8>>;
}

impl<F> StageClassifier for F
where
    F: Fn(&[&str]) -> Result<Vec<u8>>,
{
    fn classify(&self, texts: &[&str]) -> Result<Vec<u8>> {
        self(texts)
    }
}

fn stage_error(stage: u8, inputs: &[&Example], err: Error) -> Error {
    let ids: Vec<&str> = inputs.iter().take(5).map(|e| e.id.as_str()).collect();
    let more = if inputs.len() > 5 { ", ..." } else { "" };
    match err {
        Error::External(msg) => Error::External(format!(
            "stage {stage} failed on [{}{more}]: {msg}",
            ids.join(", ")
        )),
        other => other,
    }
}

fn check_stage_output(stage: u8, out: &[u8], expected: usize, allowed: &[u8]) -> Result<()> {
    if out.len() != expected {
        return Err(Error::External(format!(
            "stage {stage} returned {} labels for {expected} texts",
            out.len()
        )));
    }
    if let Some(bad) = out.iter().find(|c| !allowed.contains(c)) {
        return Err(Error::External(format!(
            "stage {stage} returned label {bad}, expected one of {allowed:?}"
        )));
    }
    Ok(())
}

/// Stage 1 over everything, stage 2 over the texts stage 1 called violent
/// (skipped entirely when there are none), merged in input order.
pub fn route_cascade(
    stage1: &dyn StageClassifier,
    stage2: &dyn StageClassifier,
    inputs: &[Example],
) -> Result<Vec<CascadePrediction>> {
    let all: Vec<&Example> = inputs.iter().collect();
    let texts: Vec<&str> = inputs.iter().map(|e| e.text.as_str()).collect();
    let first = stage1
        .classify(&texts)
        .map_err(|e| stage_error(1, &all, e))?;
    check_stage_output(1, &first, inputs.len(), &STAGE1_CLASSES)?;

    let routed: Vec<usize> = (0..inputs.len()).filter(|&i| first[i] == 1).collect();
    let second = if routed.is_empty() {
        Vec::new()
    } else {
        let routed_examples: Vec<&Example> = routed.iter().map(|&i| &inputs[i]).collect();
        let routed_texts: Vec<&str> = routed.iter().map(|&i| texts[i]).collect();
        let out = stage2
            .classify(&routed_texts)
            .map_err(|e| stage_error(2, &routed_examples, e))?;
        check_stage_output(2, &out, routed.len(), &STAGE2_CLASSES)?;
        out
    };

    let mut second = second.into_iter();
    Ok(inputs
        .iter()
        .zip(&first)
        .map(|(ex, &s1)| {
            let stage1 = BinaryLabel::from_code(s1).expect("checked above");
            let stage2 = (stage1 == BinaryLabel::Violent)
                .then(|| Label::from_code(second.next().expect("one label per routed text")))
                .flatten();
            CascadePrediction {
                id: ex.id.clone(),
                final_label: stage2.unwrap_or(Label::NonViolence),
                stage1,
                stage2,
            }
        })
        .collect())
}

pub fn predict_cascade(model: &CascadeModel, inputs: &[Example]) -> Result<Vec<CascadePrediction>> {
    let s1 = |t: &[&str]| model.stage1.classify(t, &STAGE1_CLASSES);
    let s2 = |t: &[&str]| model.stage2.classify(t, &STAGE2_CLASSES);
    route_cascade(&s1, &s2, inputs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelfTransferConfig {
    pub source_lang: String,
    /// Language of the intermediate training copy.
    pub transfer_lang: String,
    pub max_concurrency: usize,
}

impl Default for SelfTransferConfig {
    fn default() -> Self {
        SelfTransferConfig {
            source_lang: "bn".into(),
            transfer_lang: "en".into(),
            max_concurrency: 4,
        }
    }
}

/// Train on a translated copy of `train`, then keep training from there on
/// the original texts. One vectorizer is fitted on both text sets so the two
/// phases share a feature space; each phase runs `cfg.epochs` updates.
pub fn self_transfer_train(
    train_set: &Dataset,
    ctx: &TranslationContext<'_>,
    kind: ModelKind,
    tfidf: &TfidfConfig,
    cfg: &TrainConfig,
    st: &SelfTransferConfig,
) -> Result<TextModel> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let labels = train_set.label_codes()?;
    let translated =
        translate_dataset(train_set, &st.source_lang, &st.transfer_lang, st.max_concurrency, ctx)?;

    let original_texts = train_set.texts();
    let transfer_texts = translated.texts();
    let union: Vec<&str> = transfer_texts.iter().chain(&original_texts).copied().collect();
    let vectorizer = TfidfModel::fit(&union, tfidf)?;

    let phase1 = train(kind, &vectorizer.transform_all(&transfer_texts), &labels, cfg)?;
    let phase2_cfg = TrainConfig {
        warm_start: Some(phase1),
        ..cfg.clone()
    };
    let model: LinearModel = train(kind, &vectorizer.transform_all(&original_texts), &labels, &phase2_cfg)?;
    Ok(TextModel::Linear { vectorizer, model })
}
