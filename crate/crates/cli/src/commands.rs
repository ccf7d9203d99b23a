use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;

use vitd_core::augment::{
    build_combined_dataset, HttpTranslator, IdentityTranslator, MockTranslator, TranslationCache,
    TranslationContext, Translator,
};
use vitd_core::cascade::{
    predict_cascade, self_transfer_train, train_cascade, CascadeConfig, FLAT_CLASSES,
};
use vitd_core::classifier::TextModel;
use vitd_core::corpus::load_dataset;
use vitd_core::eval::{
    emit_report, evaluate as score, length_bucket_analysis, macro_f1, render_bucket_csv,
    DEFAULT_BINS, REPORT_CSV,
};
use vitd_core::models::ModelKind;
use vitd_core::store::{
    dataset_hash, load_model_dir, read_predictions_jsonl, save_model_dir, write_predictions_jsonl,
    ModelBundle, PredictionRecord, TrainMode,
};
use vitd_core::{Dataset, Error, Example, ModelSpec, Result};

use crate::config::{check_input, required, RunConfig, TranslatorChoice};
use crate::{AugmentArgs, EvalArgs, PredictArgs, TrainArgs, TranslatorArgs};

fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| io_error(parent, e))?;
    }
    std::fs::write(path, content).map_err(|e| io_error(path, e))
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn set<T>(slot: &mut Option<T>, flag: Option<T>) {
    if flag.is_some() {
        *slot = flag;
    }
}

fn apply_translator_flags(cfg: &mut RunConfig, flags: TranslatorArgs) {
    set(&mut cfg.translator, flags.translator);
    set(&mut cfg.cache, flags.cache);
}

fn make_translator(choice: TranslatorChoice) -> Result<Box<dyn Translator>> {
    Ok(match choice {
        TranslatorChoice::Live => Box::new(HttpTranslator::from_env().ok_or_else(|| {
            Error::InvalidConfig(
                "live translation needs TRANSLATE_API_URL; use --translator mock or identity to run offline"
                    .into(),
            )
        })?),
        TranslatorChoice::Mock => Box::new(MockTranslator::marker()),
        TranslatorChoice::Identity => Box::new(IdentityTranslator),
    })
}

fn open_cache(dir: Option<&Path>) -> Result<TranslationCache> {
    match dir {
        Some(d) => TranslationCache::open(d),
        None => Ok(TranslationCache::in_memory()),
    }
}

pub fn augment(args: AugmentArgs) -> Result<()> {
    let mut cfg = RunConfig::load(args.config.config.as_deref())?;
    set(&mut cfg.train, args.train);
    set(&mut cfg.out, args.out);
    set(&mut cfg.seed, args.seed);
    apply_translator_flags(&mut cfg, args.translator);
    cfg.validate()?;
    let train_path = required(&cfg.train, "--train")?;
    let out = required(&cfg.out, "--out")?;
    check_input(&train_path)?;

    let started = Instant::now();
    let ds = load_dataset(&train_path, "train", true)?;
    let choice = cfg.translator.unwrap_or(TranslatorChoice::Live);
    let translator = make_translator(choice)?;
    let cache_dir = cfg.cache.clone().unwrap_or_else(|| out.join("cache"));
    let cache = TranslationCache::open(&cache_dir)?;
    let ctx = TranslationContext::new(translator.as_ref(), &cache);
    let augmented = build_combined_dataset(&ds, &cfg.augment, &ctx)?;

    let data_path = out.join("augmented.tsv");
    write_file(&data_path, &augmented.to_tsv_string()?)?;

    let mut per_language: BTreeMap<String, usize> = BTreeMap::new();
    for ex in augmented.examples() {
        *per_language.entry(ex.provenance.to_string()).or_default() += 1;
    }
    let stats = cache.stats();
    let manifest = json!({
        "input": train_path,
        "input_hash": dataset_hash(&ds)?,
        "output": data_path,
        "output_hash": dataset_hash(&augmented)?,
        "rows_in": ds.len(),
        "rows_out": augmented.len(),
        "per_language": per_language,
        "translator": choice.as_str(),
        "augment": cfg.augment,
        "cache": {
            "dir": cache_dir,
            "hits": stats.hits,
            "misses": stats.misses,
            "hit_ratio": stats.hit_ratio(),
        },
        "wall_time_secs": started.elapsed().as_secs_f64(),
    });
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    write_file(&out.join("augment_manifest.json"), &text)?;

    eprintln!(
        "augmented {} -> {} rows (cache hit ratio {:.3}) into {}",
        ds.len(),
        augmented.len(),
        stats.hit_ratio(),
        data_path.display()
    );
    Ok(())
}

fn linear_kind(spec: &ModelSpec, mode: &str) -> Result<ModelKind> {
    match spec {
        ModelSpec::Linear(kind) => Ok(*kind),
        ModelSpec::External(_) => Err(Error::InvalidConfig(format!(
            "{mode} mode trains the model itself; external models are not supported"
        ))),
    }
}

pub fn train(args: TrainArgs) -> Result<()> {
    let mut cfg = RunConfig::load(args.config.config.as_deref())?;
    set(&mut cfg.train, args.train);
    set(&mut cfg.dev, args.dev);
    set(&mut cfg.out, args.out);
    set(&mut cfg.mode, args.mode);
    set(&mut cfg.model1, args.model1);
    set(&mut cfg.model2, args.model2);
    set(&mut cfg.seed, args.seed);
    apply_translator_flags(&mut cfg, args.translator);
    cfg.validate()?;
    let train_path = required(&cfg.train, "--train")?;
    let out = required(&cfg.out, "--out")?;
    check_input(&train_path)?;
    if let Some(dev) = &cfg.dev {
        check_input(dev)?;
    }

    let mode = cfg.mode.unwrap_or(TrainMode::Cascade);
    let model1 = cfg.model1.clone().unwrap_or(ModelSpec::Linear(ModelKind::Logreg));
    let model2 = cfg.model2.clone().unwrap_or(ModelSpec::Linear(ModelKind::Logreg));
    let ds = load_dataset(&train_path, "train", true)?;

    let (bundle, record) = match mode {
        TrainMode::Flat => {
            let texts = ds.texts();
            let model = TextModel::train(&model1, &texts, &ds.label_codes()?, &cfg.tfidf, &cfg.stage1)?;
            let record = json!({
                "mode": mode,
                "model": model1,
                "tfidf": cfg.tfidf,
                "train": cfg.stage1,
            });
            (ModelBundle::Flat(model), record)
        }
        TrainMode::Cascade => {
            let cascade_cfg = CascadeConfig {
                model1,
                model2,
                tfidf: cfg.tfidf.clone(),
                stage1: cfg.stage1.clone(),
                stage2: cfg.stage2.clone(),
            };
            let model = train_cascade(&ds, &cascade_cfg)?;
            let mut record = serde_json::to_value(&cascade_cfg)?;
            record["mode"] = json!(mode);
            (ModelBundle::Cascade(model), record)
        }
        TrainMode::SelfTransfer => {
            let kind = linear_kind(&model1, "self-transfer")?;
            let choice = cfg.translator.unwrap_or(TranslatorChoice::Live);
            let translator = make_translator(choice)?;
            let cache = open_cache(cfg.cache.as_deref())?;
            let ctx = TranslationContext::new(translator.as_ref(), &cache);
            let model = self_transfer_train(&ds, &ctx, kind, &cfg.tfidf, &cfg.stage1, &cfg.self_transfer)?;
            let record = json!({
                "mode": mode,
                "model": model1,
                "tfidf": cfg.tfidf,
                "train": cfg.stage1,
                "self_transfer": cfg.self_transfer,
                "translator": choice.as_str(),
            });
            (ModelBundle::Flat(model), record)
        }
    };

    let manifest = save_model_dir(&out, mode, &bundle, record, dataset_hash(&ds)?)?;
    eprintln!(
        "trained {} model on {} rows into {} (data {})",
        serde_json::to_value(manifest.mode)?.as_str().unwrap_or("?"),
        ds.len(),
        out.display(),
        &manifest.data_hash[..12]
    );

    if let Some(dev_path) = &cfg.dev {
        let dev = load_dataset(dev_path, "dev", true)?;
        let preds: Vec<u8> = predict_records(&bundle, &dev)?.iter().map(|r| r.final_label).collect();
        let f1 = macro_f1(&dev.label_codes()?, &preds, &FLAT_CLASSES)?;
        println!("dev macro_f1={f1:.4}");
    }
    Ok(())
}

fn predict_records(bundle: &ModelBundle, ds: &Dataset) -> Result<Vec<PredictionRecord>> {
    Ok(match bundle {
        ModelBundle::Cascade(model) => predict_cascade(model, ds.examples())?
            .iter()
            .map(PredictionRecord::from)
            .collect(),
        ModelBundle::Flat(model) => {
            let labels = model.classify(&ds.texts(), &FLAT_CLASSES)?;
            ds.examples()
                .iter()
                .zip(labels)
                .map(|(e, l)| PredictionRecord::flat(e.id.clone(), l))
                .collect()
        }
    })
}

pub fn predict(args: PredictArgs) -> Result<()> {
    let mut cfg = RunConfig::load(args.config.config.as_deref())?;
    set(&mut cfg.test, args.test);
    set(&mut cfg.out, args.out);
    let input = required(&cfg.test, "--test")?;
    check_input(&input)?;

    let (_, bundle) = load_model_dir(&args.model)?;
    let ds = load_dataset(&input, "test", false)?;
    let records = predict_records(&bundle, &ds)?;
    let jsonl = write_predictions_jsonl(&records)?;
    match &cfg.out {
        Some(out) => {
            let path = out.join("predictions.jsonl");
            write_file(&path, &jsonl)?;
            eprintln!("wrote {} predictions to {}", records.len(), path.display());
        }
        None => print!("{jsonl}"),
    }
    Ok(())
}

/// Gold examples and predicted codes in gold order, matched by id.
fn aligned(gold_path: &Path, pred_path: &Path) -> Result<(Vec<Example>, Vec<u8>)> {
    check_input(gold_path)?;
    check_input(pred_path)?;
    let gold = load_dataset(gold_path, "gold", true)?;
    let raw = std::fs::read_to_string(pred_path).map_err(|e| io_error(pred_path, e))?;
    let records = read_predictions_jsonl(&raw)?;

    let mut by_id: HashMap<&str, u8> = HashMap::new();
    let mut offending: Vec<String> = Vec::new();
    for r in &records {
        if by_id.insert(r.id.as_str(), r.final_label).is_some() {
            offending.push(format!("{} (duplicate prediction)", r.id));
        }
    }
    let gold_ids: HashSet<&str> = gold.examples().iter().map(|e| e.id.as_str()).collect();
    for e in gold.examples() {
        if !by_id.contains_key(e.id.as_str()) {
            offending.push(format!("{} (no prediction)", e.id));
        }
    }
    for r in &records {
        if !gold_ids.contains(r.id.as_str()) {
            offending.push(format!("{} (not in gold)", r.id));
        }
    }
    if !offending.is_empty() {
        let shown: Vec<&str> = offending.iter().take(5).map(String::as_str).collect();
        return Err(Error::Alignment(format!(
            "gold and predictions do not align by id ({} problem(s)); first: {}",
            offending.len(),
            shown.join(", ")
        )));
    }
    let preds = gold.examples().iter().map(|e| by_id[e.id.as_str()]).collect();
    Ok((gold.into_examples(), preds))
}

pub fn evaluate(args: EvalArgs) -> Result<()> {
    let mut cfg = RunConfig::load(args.config.config.as_deref())?;
    set(&mut cfg.out, args.out);
    let (examples, preds) = aligned(&args.gold, &args.pred)?;
    let report = score(&examples, &preds)?;
    if let Some(out) = &cfg.out {
        let written: Vec<PathBuf> = emit_report(&report, out)?;
        eprintln!("wrote {} report files to {}", written.len(), out.display());
    }
    println!("macro_f1={:.4}", report.macro_f1);
    Ok(())
}

pub fn analyze_length(args: EvalArgs) -> Result<()> {
    let mut cfg = RunConfig::load(args.config.config.as_deref())?;
    set(&mut cfg.out, args.out);
    let (examples, preds) = aligned(&args.gold, &args.pred)?;
    let rows = length_bucket_analysis(&examples, &preds, &DEFAULT_BINS)?;
    println!("| Text Length | Macro F1 | Count | Percentage |");
    println!("|---|---:|---:|---:|");
    for r in &rows {
        let f1 = r.macro_f1.map_or_else(|| "-".to_string(), |f| format!("{f:.3}"));
        println!("| {} | {} | {} | {:.3} |", r.bucket, f1, r.count, r.percentage);
    }
    if let Some(out) = &cfg.out {
        write_file(&out.join(REPORT_CSV), &render_bucket_csv(&rows))?;
    }
    Ok(())
}
