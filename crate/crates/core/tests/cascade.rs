mod common;

use std::cell::Cell;

use vitd_core::augment::{IdentityTranslator, MockTranslator, TranslationCache, TranslationContext};
use vitd_core::cascade::{
    predict_cascade, route_cascade, self_transfer_train, train_cascade, CascadeConfig,
    SelfTransferConfig,
};
use vitd_core::eval::macro_f1;
use vitd_core::models::{ModelKind, TrainConfig};
use vitd_core::store::{load_model_dir, save_model_dir, ModelBundle, TrainMode};
use vitd_core::textproc::TfidfConfig;
use vitd_core::{BinaryLabel, Dataset, Error, ErrorCategory, Label, Result};

fn codes(preds: &[vitd_core::cascade::CascadePrediction]) -> Vec<u8> {
    preds.iter().map(|p| p.final_label as u8).collect()
}

#[test]
fn cascade_fits_a_small_separable_corpus() {
    let ds = common::synthetic_corpus(20, 8);
    let model = train_cascade(&ds, &CascadeConfig::default()).unwrap();
    let preds = predict_cascade(&model, ds.examples()).unwrap();
    assert!(preds.iter().all(|p| p.is_consistent()));
    let f1 = macro_f1(&ds.label_codes().unwrap(), &codes(&preds), &[0, 1, 2]).unwrap();
    assert!(f1 >= 0.95, "macro F1 {f1}");
}

#[test]
fn stage2_sees_exactly_the_violent_subset() {
    let ds = common::synthetic_corpus(12, 9);
    let s1_calls = Cell::new(0);
    let s2_seen = Cell::new(0);
    let stage1 = |texts: &[&str]| -> Result<Vec<u8>> {
        s1_calls.set(s1_calls.get() + 1);
        Ok(texts.iter().map(|t| u8::from(!t.contains("shanti"))).collect())
    };
    let stage2 = |texts: &[&str]| -> Result<Vec<u8>> {
        s2_seen.set(s2_seen.get() + texts.len());
        Ok(texts.iter().map(|t| if t.contains("akraman") { 2 } else { 1 }).collect())
    };
    let preds = route_cascade(&stage1, &stage2, ds.examples()).unwrap();
    assert_eq!(s1_calls.get(), 1);
    let routed = preds.iter().filter(|p| p.stage1 == BinaryLabel::Violent).count();
    assert_eq!(s2_seen.get(), routed);
    assert_eq!(codes(&preds), ds.label_codes().unwrap());
    for (p, e) in preds.iter().zip(ds.examples()) {
        assert_eq!(p.id, e.id);
    }
}

#[test]
fn nothing_routed_means_stage2_never_runs() {
    let ds = common::synthetic_corpus(6, 1);
    let stage1 = |texts: &[&str]| -> Result<Vec<u8>> { Ok(vec![0; texts.len()]) };
    let stage2 = |_: &[&str]| -> Result<Vec<u8>> { panic!("stage 2 must not be called") };
    let preds = route_cascade(&stage1, &stage2, ds.examples()).unwrap();
    assert!(preds.iter().all(|p| p.final_label == Label::NonViolence && p.stage2.is_none()));
    assert_eq!(preds[0].to_json_line(), r#"{"id":"train-0","final":0,"stage1":0,"stage2":null}"#);
}

#[test]
fn stage_errors_name_the_failing_ids() {
    let ds = common::synthetic_corpus(3, 1);
    let stage1 = |texts: &[&str]| -> Result<Vec<u8>> { Ok(vec![1; texts.len()]) };
    let stage2 = |_: &[&str]| -> Result<Vec<u8>> { Err(Error::External("down".into())) };
    let err = route_cascade(&stage1, &stage2, ds.examples()).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("train-0") && msg.contains("train-2"), "{msg}");

    let bad = |texts: &[&str]| -> Result<Vec<u8>> { Ok(vec![2; texts.len()]) };
    assert!(route_cascade(&bad, &stage2, ds.examples()).is_err());
}

#[test]
fn training_preconditions() {
    let empty = Dataset::from_pairs("e", Vec::<(String, Option<Label>)>::new()).unwrap();
    assert!(matches!(train_cascade(&empty, &CascadeConfig::default()), Err(Error::EmptyCorpus)));

    let calm = Dataset::from_pairs("c", [("a", Some(Label::NonViolence)), ("b", Some(Label::NonViolence))]).unwrap();
    let err = train_cascade(&calm, &CascadeConfig::default()).unwrap_err();
    assert_eq!(err.category(), ErrorCategory::Training);
    assert!(err.to_string().contains("single-class stage 2"), "{err}");

    let violent = Dataset::from_pairs(
        "v",
        [("a", Some(Label::PassiveViolence)), ("b", Some(Label::DirectViolence))],
    )
    .unwrap();
    let err = train_cascade(&violent, &CascadeConfig::default()).unwrap_err();
    assert!(err.to_string().contains("single-class stage 1"), "{err}");
}

#[test]
fn self_transfer_depends_on_the_translation() {
    let ds = common::synthetic_corpus(24, 12);
    let cache = TranslationCache::in_memory();
    let cfg = TrainConfig::default();
    let st = SelfTransferConfig::default();

    let identity = IdentityTranslator;
    let ctx = TranslationContext::new(&identity, &cache);
    let a = self_transfer_train(&ds, &ctx, ModelKind::Logreg, &TfidfConfig::default(), &cfg, &st).unwrap();

    let marker = MockTranslator::marker();
    let cache = TranslationCache::in_memory();
    let ctx = TranslationContext::new(&marker, &cache);
    let b = self_transfer_train(&ds, &ctx, ModelKind::Logreg, &TfidfConfig::default(), &cfg, &st).unwrap();
    assert_eq!(marker.calls(), 24);
    assert_ne!(a, b);

    let texts = ds.texts();
    let preds = b.classify(&texts, &[0, 1, 2]).unwrap();
    let f1 = macro_f1(&ds.label_codes().unwrap(), &preds, &[0, 1, 2]).unwrap();
    assert!(f1 >= 0.95, "macro F1 {f1}");
}

#[test]
fn model_dir_round_trip_and_tamper_detection() {
    let ds = common::synthetic_corpus(30, 4);
    let cfg = CascadeConfig {
        model2: "svm".parse().unwrap(),
        ..Default::default()
    };
    let model = train_cascade(&ds, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let bundle = ModelBundle::Cascade(model.clone());
    let config = serde_json::to_value(&cfg).unwrap();
    save_model_dir(dir.path(), TrainMode::Cascade, &bundle, config, "abc".into()).unwrap();

    let (manifest, loaded) = load_model_dir(dir.path()).unwrap();
    assert_eq!(manifest.mode, TrainMode::Cascade);
    assert_eq!(manifest.data_hash, "abc");
    let ModelBundle::Cascade(loaded) = loaded else { panic!("expected a cascade") };
    assert_eq!(loaded, model);
    assert_eq!(
        predict_cascade(&loaded, ds.examples()).unwrap(),
        predict_cascade(&model, ds.examples()).unwrap()
    );

    let weights = dir.path().join("stage2").join("model.json");
    let mut text = std::fs::read_to_string(&weights).unwrap();
    text.push(' ');
    std::fs::write(&weights, text).unwrap();
    let err = load_model_dir(dir.path()).unwrap_err();
    assert_eq!(err.category(), ErrorCategory::Integrity);

    std::fs::write(dir.path().join("manifest.json"), "{ not json").unwrap();
    assert_eq!(load_model_dir(dir.path()).unwrap_err().category(), ErrorCategory::Integrity);
}
