mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::TranslatorChoice;
use vitd_core::store::TrainMode;
use vitd_core::{Error, ErrorCategory, ModelSpec};

#[derive(Parser, Debug)]
#[command(name = "vitd", version, about = "Violence-inciting text detection pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Grow a labeled training set with translated and back-translated copies.
    Augment(AugmentArgs),
    /// Train a flat, cascade or self-transfer model into a model directory.
    Train(TrainArgs),
    /// Label a TSV file with a trained model, writing predictions.jsonl.
    Predict(PredictArgs),
    /// Score predictions against gold labels and write report files.
    Evaluate(EvalArgs),
    /// Macro F1 broken down by text length.
    AnalyzeLength(EvalArgs),
}

#[derive(Args, Debug)]
struct ConfigArg {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TranslatorArgs {
    #[arg(long, value_enum)]
    translator: Option<TranslatorChoice>,
    /// Translation cache directory.
    #[arg(long)]
    cache: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AugmentArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    train: Option<PathBuf>,
    /// Output directory (augmented.tsv, augment_manifest.json; cache/ unless --cache is given).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    translator: TranslatorArgs,
    /// Reserved.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    train: Option<PathBuf>,
    /// Labeled dev set; when given, its macro F1 is printed after training.
    #[arg(long)]
    dev: Option<PathBuf>,
    /// Model directory to create.
    #[arg(long)]
    out: Option<PathBuf>,
    /// flat, cascade or self-transfer.
    #[arg(long)]
    mode: Option<TrainMode>,
    /// Stage-1 model (or the only model in flat / self-transfer mode):
    /// logreg, svm or external:<endpoint>.
    #[arg(long)]
    model1: Option<ModelSpec>,
    /// Stage-2 model for cascade mode.
    #[arg(long)]
    model2: Option<ModelSpec>,
    #[command(flatten)]
    translator: TranslatorArgs,
    /// Reserved.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Model directory written by `train`.
    #[arg(long)]
    model: PathBuf,
    /// TSV file to label.
    #[arg(long)]
    test: Option<PathBuf>,
    /// Output directory for predictions.jsonl.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Labeled TSV file.
    #[arg(long)]
    gold: PathBuf,
    /// predictions.jsonl written by `predict`.
    #[arg(long)]
    pred: PathBuf,
    /// Directory for report files.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code(err: &Error) -> u8 {
    match err.category() {
        ErrorCategory::Input => 2,
        ErrorCategory::Training => 3,
        ErrorCategory::Integrity => 4,
        ErrorCategory::Alignment => 5,
        ErrorCategory::Other => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Augment(args) => commands::augment(args),
        Command::Train(args) => commands::train(args),
        Command::Predict(args) => commands::predict(args),
        Command::Evaluate(args) => commands::evaluate(args),
        Command::AnalyzeLength(args) => commands::analyze_length(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
