//! Confusion matrices, per-class and macro-averaged F1, length-bucket
//! analysis, and report files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::corpus::{distribution_of, word_count, ClassLabel, Example, Label, LabelDistribution};
use crate::error::{Error, Result};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Counts with rows = gold and columns = predicted, in `classes` order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    classes: Vec<u8>,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn classes(&self) -> &[u8] {
        &self.classes
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn cell(&self, gold: usize, pred: usize) -> u64 {
        self.counts[gold][pred]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    pub fn col_sum(&self, j: usize) -> u64 {
        self.counts.iter().map(|r| r[j]).sum()
    }
}

fn position(classes: &[u8], label: u8) -> Result<usize> {
    classes
        .iter()
        .position(|&c| c == label)
        .ok_or_else(|| Error::UnknownClass {
            label: label as i64,
            classes: classes.to_vec(),
        })
}

pub fn confusion_matrix(gold: &[u8], pred: &[u8], classes: &[u8]) -> Result<ConfusionMatrix> {
    if gold.len() != pred.len() {
        return Err(Error::LengthMismatch {
            left: gold.len(),
            right: pred.len(),
        });
    }
    if gold.is_empty() {
        return Err(Error::EmptyReport("no (gold, predicted) pairs".into()));
    }
    let k = classes.len();
    let mut counts = vec![vec![0u64; k]; k];
    for (&g, &p) in gold.iter().zip(pred) {
        counts[position(classes, g)?][position(classes, p)?] += 1;
    }
    Ok(ConfusionMatrix {
        classes: classes.to_vec(),
        counts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassScore {
    pub class: u8,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub per_class: Vec<ClassScore>,
}

impl ClassMetrics {
    pub fn macro_f1(&self) -> f64 {
        if self.per_class.is_empty() {
            return 0.0;
        }
        self.per_class.iter().map(|c| c.f1).sum::<f64>() / self.per_class.len() as f64
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Precision, recall and F1 per class; any 0/0 is taken as 0.
pub fn per_class_metrics(cm: &ConfusionMatrix) -> ClassMetrics {
    let per_class = cm
        .classes
        .iter()
        .enumerate()
        .map(|(i, &class)| {
            let tp = cm.cell(i, i);
            let precision = ratio(tp, cm.col_sum(i));
            let recall = ratio(tp, cm.row_sum(i));
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassScore {
                class,
                precision,
                recall,
                f1,
                support: cm.row_sum(i),
            }
        })
        .collect();
    ClassMetrics { per_class }
}

/// Unweighted mean F1 over every class in `classes`, including classes
/// absent from both gold and predictions.
pub fn macro_f1(gold: &[u8], pred: &[u8], classes: &[u8]) -> Result<f64> {
    Ok(per_class_metrics(&confusion_matrix(gold, pred, classes)?).macro_f1())
}

/// Half-open word-count interval `(lower, upper]`; `upper = None` is unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bin {
    pub lower: usize,
    pub upper: Option<usize>,
}

impl Bin {
    pub const fn new(lower: usize, upper: usize) -> Self {
        Bin {
            lower,
            upper: Some(upper),
        }
    }

    pub fn contains(&self, words: usize) -> bool {
        words > self.lower && self.upper.is_none_or(|u| words <= u)
    }

    pub fn label(&self) -> String {
        match self.upper {
            Some(u) => format!("({}, {}]", self.lower, u),
            None => format!("({}, inf)", self.lower),
        }
    }
}

pub const DEFAULT_BINS: [Bin; 8] = [
    Bin::new(0, 10),
    Bin::new(10, 20),
    Bin::new(20, 50),
    Bin::new(50, 100),
    Bin::new(100, 200),
    Bin::new(200, 300),
    Bin::new(300, 500),
    Bin::new(500, 1000),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BucketKind {
    Regular,
    /// Above the last bin's upper edge.
    Overflow,
    /// Zero-word texts.
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LengthBucketRow {
    pub bucket: String,
    pub kind: BucketKind,
    pub lower: usize,
    /// `None` for the overflow bucket.
    pub upper: Option<usize>,
    /// `None` when the bucket is empty.
    pub macro_f1: Option<f64>,
    pub count: usize,
    pub percentage: f64,
}

/// `count / total · 100`, rounded to three decimals.
pub fn percentage(count: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    (count as f64 / total as f64 * 100.0 * 1000.0).round() / 1000.0
}

/// Bucket examples by word count and score each bucket.
///
/// Every bin in `bins` produces a row, empty or not. Texts longer than the
/// last bin go to an overflow row and zero-word texts to a `(0)` row; both
/// are emitted only when non-empty.
pub fn length_bucket_analysis(
    examples: &[Example],
    preds: &[u8],
    bins: &[Bin],
) -> Result<Vec<LengthBucketRow>> {
    if examples.len() != preds.len() {
        return Err(Error::LengthMismatch {
            left: examples.len(),
            right: preds.len(),
        });
    }
    let gold = examples
        .iter()
        .map(|e| e.require_label().map(Label::code))
        .collect::<Result<Vec<_>>>()?;
    let classes = Label::codes();
    let total = examples.len();
    let overflow_from = bins.iter().filter_map(|b| b.upper).max().unwrap_or(0);

    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); bins.len()];
    let mut empty = Vec::new();
    let mut overflow = Vec::new();
    let mut unbinned = Vec::new();
    for (i, ex) in examples.iter().enumerate() {
        let words = word_count(&ex.text);
        if words == 0 {
            empty.push(i);
        } else if let Some(b) = bins.iter().position(|b| b.contains(words)) {
            groups[b].push(i);
        } else if words > overflow_from {
            overflow.push(i);
        } else {
            unbinned.push(i);
        }
    }
    if let Some(&i) = unbinned.first() {
        return Err(Error::InvalidConfig(format!(
            "bins leave a gap: example '{}' with {} words falls in no bin",
            examples[i].id,
            word_count(&examples[i].text)
        )));
    }

    let score = |idx: &[usize]| -> Result<Option<f64>> {
        if idx.is_empty() {
            return Ok(None);
        }
        let g: Vec<u8> = idx.iter().map(|&i| gold[i]).collect();
        let p: Vec<u8> = idx.iter().map(|&i| preds[i]).collect();
        macro_f1(&g, &p, &classes).map(Some)
    };

    let mut rows = Vec::new();
    if !empty.is_empty() {
        rows.push(LengthBucketRow {
            bucket: "(0)".into(),
            kind: BucketKind::Empty,
            lower: 0,
            upper: Some(0),
            macro_f1: score(&empty)?,
            count: empty.len(),
            percentage: percentage(empty.len(), total),
        });
    }
    for (bin, idx) in bins.iter().zip(&groups) {
        rows.push(LengthBucketRow {
            bucket: bin.label(),
            kind: BucketKind::Regular,
            lower: bin.lower,
            upper: bin.upper,
            macro_f1: score(idx)?,
            count: idx.len(),
            percentage: percentage(idx.len(), total),
        });
    }
    if !overflow.is_empty() {
        let bin = Bin {
            lower: overflow_from,
            upper: None,
        };
        rows.push(LengthBucketRow {
            bucket: bin.label(),
            kind: BucketKind::Overflow,
            lower: overflow_from,
            upper: None,
            macro_f1: score(&overflow)?,
            count: overflow.len(),
            percentage: percentage(overflow.len(), total),
        });
    }
    Ok(rows)
}

/// Everything an evaluation run reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub total: usize,
    pub gold_distribution: LabelDistribution,
    pub predicted_distribution: LabelDistribution,
    pub confusion_matrix: ConfusionMatrix,
    pub metrics: ClassMetrics,
    pub macro_f1: f64,
    pub length_buckets: Vec<LengthBucketRow>,
}

/// Score predictions against labeled examples over the three-class set.
pub fn evaluate(examples: &[Example], preds: &[u8]) -> Result<EvalReport> {
    if examples.len() != preds.len() {
        return Err(Error::LengthMismatch {
            left: examples.len(),
            right: preds.len(),
        });
    }
    let gold_labels = examples
        .iter()
        .map(Example::require_label)
        .collect::<Result<Vec<_>>>()?;
    let pred_labels = preds
        .iter()
        .map(|&p| {
            Label::from_code(p).ok_or_else(|| Error::UnknownClass {
                label: p as i64,
                classes: Label::codes(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let gold: Vec<u8> = gold_labels.iter().map(|l| l.code()).collect();
    let cm = confusion_matrix(&gold, preds, &Label::codes())?;
    let metrics = per_class_metrics(&cm);
    Ok(EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        total: examples.len(),
        gold_distribution: distribution_of(&gold_labels),
        predicted_distribution: distribution_of(&pred_labels),
        macro_f1: metrics.macro_f1(),
        confusion_matrix: cm,
        metrics,
        length_buckets: length_bucket_analysis(examples, preds, &DEFAULT_BINS)?,
    })
}

fn class_name(code: u8) -> String {
    Label::from_code(code).map_or_else(|| code.to_string(), |l| l.name().to_string())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |f| format!("{f:.3}"))
}

pub fn render_markdown(report: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Evaluation report\n");
    let _ = writeln!(out, "examples: {}", report.total);
    let _ = writeln!(out, "macro_f1: {:.4}\n", report.macro_f1);

    let _ = writeln!(out, "## Label distribution\n");
    let _ = writeln!(out, "| Label | Gold | Gold % | Predicted | Predicted % |");
    let _ = writeln!(out, "|---|---:|---:|---:|---:|");
    for (g, p) in report
        .gold_distribution
        .labels
        .iter()
        .zip(&report.predicted_distribution.labels)
    {
        let _ = writeln!(
            out,
            "| {} | {} | {:.4} | {} | {:.4} |",
            g.name, g.count, g.proportion, p.count, p.proportion
        );
    }

    let _ = writeln!(out, "\n## Per-class metrics\n");
    let _ = writeln!(out, "| Class | Precision | Recall | F1 | Support |");
    let _ = writeln!(out, "|---|---:|---:|---:|---:|");
    for c in &report.metrics.per_class {
        let _ = writeln!(
            out,
            "| {} ({}) | {:.4} | {:.4} | {:.4} | {} |",
            class_name(c.class),
            c.class,
            c.precision,
            c.recall,
            c.f1,
            c.support
        );
    }

    let cm = &report.confusion_matrix;
    let _ = writeln!(out, "\n## Confusion matrix (rows = gold, columns = predicted)\n");
    let header: Vec<String> = cm.classes().iter().map(|c| c.to_string()).collect();
    let _ = writeln!(out, "| gold \\ pred | {} |", header.join(" | "));
    let _ = writeln!(out, "|---|{}", "---:|".repeat(header.len()));
    for (i, row) in cm.counts().iter().enumerate() {
        let cells: Vec<String> = row.iter().map(u64::to_string).collect();
        let _ = writeln!(out, "| {} | {} |", cm.classes()[i], cells.join(" | "));
    }

    let _ = writeln!(out, "\n## Performance by text length (words)\n");
    let _ = writeln!(out, "| Text Length | Macro F1 | Count | Percentage |");
    let _ = writeln!(out, "|---|---:|---:|---:|");
    for row in &report.length_buckets {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {:.3} |",
            row.bucket,
            fmt_opt(row.macro_f1),
            row.count,
            row.percentage
        );
    }
    out
}

/// Plot data: `bucket_label,upper_edge,macro_f1,count,percentage`.
pub fn render_bucket_csv(rows: &[LengthBucketRow]) -> String {
    let mut out = String::from("bucket_label,upper_edge,macro_f1,count,percentage\n");
    for row in rows {
        let upper = row.upper.map_or_else(|| "inf".to_string(), |u| u.to_string());
        let f1 = row.macro_f1.map_or_else(String::new, |f| format!("{f:.6}"));
        let _ = writeln!(
            out,
            "\"{}\",{},{},{},{:.3}",
            row.bucket, upper, f1, row.count, row.percentage
        );
    }
    out
}

pub const REPORT_MARKDOWN: &str = "report.md";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_CSV: &str = "length_buckets.csv";

/// Write `report.md`, `report.json` and `length_buckets.csv` into `out_dir`.
pub fn emit_report(report: &EvalReport, out_dir: &Path) -> Result<Vec<PathBuf>> {
    if report.total == 0 || report.metrics.per_class.is_empty() {
        return Err(Error::EmptyReport("no metrics computed".into()));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    let files = [
        (REPORT_MARKDOWN, render_markdown(report)),
        (REPORT_JSON, json),
        (REPORT_CSV, render_bucket_csv(&report.length_buckets)),
    ];
    let mut written = Vec::new();
    for (name, content) in files {
        let path = out_dir.join(name);
        std::fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
