//! Data model for the three-class violence corpus: labels, examples,
//! datasets, the TSV file format and label distribution statistics.
//!
//! TSV layout: UTF-8, first line is a header naming the columns. `text` is
//! required; `label`, `id`, `provenance` and `parent_id` are optional and
//! may appear in any order. Fields are tab separated, so texts must not
//! contain tabs or line breaks.

use std::collections::HashSet;
use std::fmt;
use std::fmt::Write as _;
use std::hash::Hash;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A closed set of class labels with fixed integer codes and file spellings.
pub trait ClassLabel: Copy + Eq + Ord + Hash + fmt::Debug + Send + Sync + 'static {
    /// Every label, in code order.
    const ALL: &'static [Self];

    fn code(self) -> u8;

    /// Spelling used in TSV files.
    fn name(self) -> &'static str;

    fn from_code(code: u8) -> Option<Self> {
        Self::ALL.iter().copied().find(|l| l.code() == code)
    }

    /// Case-sensitive lookup of the file spelling.
    fn from_name(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|l| l.name() == name)
    }

    fn codes() -> Vec<u8> {
        Self::ALL.iter().map(|l| l.code()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    NonViolence,
    PassiveViolence,
    DirectViolence,
}

impl ClassLabel for Label {
    const ALL: &'static [Self] = &[
        Label::NonViolence,
        Label::PassiveViolence,
        Label::DirectViolence,
    ];

    fn code(self) -> u8 {
        match self {
            Label::NonViolence => 0,
            Label::PassiveViolence => 1,
            Label::DirectViolence => 2,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Label::NonViolence => "Non-Violence",
            Label::PassiveViolence => "Passive-Violence",
            Label::DirectViolence => "Direct-Violence",
        }
    }
}

impl Label {
    pub fn is_violent(self) -> bool {
        self != Label::NonViolence
    }

    pub fn to_binary(self) -> BinaryLabel {
        if self.is_violent() {
            BinaryLabel::Violent
        } else {
            BinaryLabel::NonViolent
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BinaryLabel {
    NonViolent,
    Violent,
}

impl ClassLabel for BinaryLabel {
    const ALL: &'static [Self] = &[BinaryLabel::NonViolent, BinaryLabel::Violent];

    fn code(self) -> u8 {
        match self {
            BinaryLabel::NonViolent => 0,
            BinaryLabel::Violent => 1,
        }
    }

    fn name(self) -> &'static str {
        match self {
            BinaryLabel::NonViolent => "Non-Violent",
            BinaryLabel::Violent => "Violent",
        }
    }
}

/// Where an example came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub enum Provenance {
    #[default]
    Original,
    /// Translated into the given target language.
    Translated(String),
    /// Round-tripped through the given pivot language.
    BackTranslated(String),
}

impl Provenance {
    pub fn is_original(&self) -> bool {
        matches!(self, Provenance::Original)
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Original => f.write_str("original"),
            Provenance::Translated(lang) => write!(f, "translated:{lang}"),
            Provenance::BackTranslated(lang) => write!(f, "backtranslated:{lang}"),
        }
    }
}

impl FromStr for Provenance {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.split_once(':') {
            None if s == "original" || s.is_empty() => Ok(Provenance::Original),
            Some(("translated", lang)) if !lang.is_empty() => {
                Ok(Provenance::Translated(lang.to_string()))
            }
            Some(("backtranslated", lang)) if !lang.is_empty() => {
                Ok(Provenance::BackTranslated(lang.to_string()))
            }
            _ => Err(format!("unknown provenance '{s}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example<L = Label> {
    pub id: String,
    pub text: String,
    /// Absent for blind test data.
    pub label: Option<L>,
    pub provenance: Provenance,
    /// Id of the original example this row was derived from.
    pub parent_id: Option<String>,
}

impl<L: ClassLabel> Example<L> {
    pub fn original(id: impl Into<String>, text: impl Into<String>, label: Option<L>) -> Self {
        Example {
            id: id.into(),
            text: text.into(),
            label,
            provenance: Provenance::Original,
            parent_id: None,
        }
    }

    /// Derive a synthetic row from `self` with the same label.
    pub fn derived(&self, id: String, text: String, provenance: Provenance) -> Self {
        Example {
            id,
            text,
            label: self.label,
            provenance,
            parent_id: Some(self.parent_id.clone().unwrap_or_else(|| self.id.clone())),
        }
    }

    pub fn with_label<M: ClassLabel>(&self, label: Option<M>) -> Example<M> {
        Example {
            id: self.id.clone(),
            text: self.text.clone(),
            label,
            provenance: self.provenance.clone(),
            parent_id: self.parent_id.clone(),
        }
    }

    pub fn require_label(&self) -> Result<L> {
        self.label.ok_or_else(|| Error::Unlabeled {
            id: self.id.clone(),
        })
    }

    fn validate(&self) -> Result<()> {
        let invalid = |message: &str| Error::InvalidExample {
            id: self.id.clone(),
            message: message.to_string(),
        };
        if self.id.is_empty() {
            return Err(invalid("empty id"));
        }
        if self.text.trim().is_empty() {
            return Err(invalid("text is empty"));
        }
        if self.provenance.is_original() != self.parent_id.is_none() {
            return Err(invalid(
                "parent_id must be present exactly for augmented rows",
            ));
        }
        Ok(())
    }
}

/// An ordered, named collection of examples with unique ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset<L = Label> {
    name: String,
    examples: Vec<Example<L>>,
}

impl<L: ClassLabel> Dataset<L> {
    pub fn new(name: impl Into<String>, examples: Vec<Example<L>>) -> Result<Self> {
        let name = name.into();
        let mut seen = HashSet::with_capacity(examples.len());
        for ex in &examples {
            ex.validate()?;
            if !seen.insert(ex.id.as_str()) {
                return Err(Error::DuplicateId {
                    id: ex.id.clone(),
                    dataset: name,
                });
            }
        }
        Ok(Dataset { name, examples })
    }

    /// Build an all-original dataset from (text, label) pairs, ids `<name>-<i>`.
    pub fn from_pairs<S: Into<String>>(
        name: &str,
        pairs: impl IntoIterator<Item = (S, Option<L>)>,
    ) -> Result<Self> {
        let examples = pairs
            .into_iter()
            .enumerate()
            .map(|(i, (text, label))| Example::original(format!("{name}-{i}"), text, label))
            .collect();
        Dataset::new(name, examples)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn examples(&self) -> &[Example<L>] {
        &self.examples
    }

    pub fn into_examples(self) -> Vec<Example<L>> {
        self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn texts(&self) -> Vec<&str> {
        self.examples.iter().map(|e| e.text.as_str()).collect()
    }

    /// All labels, or an error naming the first unlabeled example.
    pub fn labels(&self) -> Result<Vec<L>> {
        self.examples.iter().map(Example::require_label).collect()
    }

    pub fn label_codes(&self) -> Result<Vec<u8>> {
        Ok(self.labels()?.into_iter().map(ClassLabel::code).collect())
    }

    pub fn is_labeled(&self) -> bool {
        self.examples.iter().all(|e| e.label.is_some())
    }

    /// Keep the examples matching `keep`, preserving order.
    pub fn filter(&self, name: &str, keep: impl Fn(&Example<L>) -> bool) -> Dataset<L> {
        Dataset {
            name: name.to_string(),
            examples: self.examples.iter().filter(|e| keep(e)).cloned().collect(),
        }
    }

    /// Map every label through `f`; fails on the first unlabeled example.
    pub fn remap<M: ClassLabel>(&self, name: &str, f: impl Fn(L) -> M) -> Result<Dataset<M>> {
        let examples = self
            .examples
            .iter()
            .map(|e| Ok(e.with_label(Some(f(e.require_label()?)))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset {
            name: name.to_string(),
            examples,
        })
    }

    pub fn rename(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Parse the TSV format. Ids default to `<name>-<row index>`.
    pub fn from_tsv_str(name: &str, input: &str, has_labels: bool) -> Result<Self> {
        let mut lines = input.split('\n').enumerate().map(|(i, l)| {
            (i + 1, l.strip_suffix('\r').unwrap_or(l))
        });
        let (_, header) = lines.next().ok_or(Error::MalformedRow {
            line: 1,
            message: "missing header".into(),
        })?;
        if header.is_empty() {
            return Err(Error::MalformedRow {
                line: 1,
                message: "missing header".into(),
            });
        }
        let columns = Columns::parse(header, has_labels)?;

        let mut examples = Vec::new();
        for (line_no, line) in lines {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != columns.width {
                return Err(Error::MalformedRow {
                    line: line_no,
                    message: format!(
                        "expected {} column(s), found {}",
                        columns.width,
                        fields.len()
                    ),
                });
            }
            let row = examples.len();
            let id = match columns.id {
                Some(c) => fields[c].to_string(),
                None => format!("{name}-{row}"),
            };
            let label = match columns.label {
                Some(c) if has_labels => Some(L::from_name(fields[c]).ok_or_else(|| {
                    Error::UnknownLabel {
                        value: fields[c].to_string(),
                        line: line_no,
                    }
                })?),
                _ => None,
            };
            let provenance = match columns.provenance {
                Some(c) => fields[c].parse().map_err(|message| Error::MalformedRow {
                    line: line_no,
                    message,
                })?,
                None => Provenance::Original,
            };
            let parent_id = columns
                .parent_id
                .map(|c| fields[c])
                .filter(|p| !p.is_empty())
                .map(str::to_string);
            let example = Example {
                id,
                text: fields[columns.text].to_string(),
                label,
                provenance,
                parent_id,
            };
            example.validate().map_err(|e| Error::MalformedRow {
                line: line_no,
                message: e.to_string(),
            })?;
            examples.push(example);
        }
        Dataset::new(name, examples)
    }

    /// Serialize to TSV with an `id` column, plus `label` when the data is
    /// labeled and provenance columns when any row is synthetic.
    pub fn to_tsv_string(&self) -> Result<String> {
        let any_label = self.examples.iter().any(|e| e.label.is_some());
        if any_label && !self.is_labeled() {
            let first = self.examples.iter().find(|e| e.label.is_none()).unwrap();
            return Err(Error::Unlabeled {
                id: first.id.clone(),
            });
        }
        let augmented = self.examples.iter().any(|e| !e.provenance.is_original());

        let mut out = String::from("id\ttext");
        if any_label {
            out.push_str("\tlabel");
        }
        if augmented {
            out.push_str("\tprovenance\tparent_id");
        }
        out.push('\n');
        for ex in &self.examples {
            for field in [&ex.id, &ex.text] {
                if field.contains(['\t', '\n', '\r']) {
                    return Err(Error::InvalidExample {
                        id: ex.id.clone(),
                        message: "tabs and line breaks cannot be written to TSV".into(),
                    });
                }
            }
            out.push_str(&ex.id);
            out.push('\t');
            out.push_str(&ex.text);
            if let Some(label) = ex.label {
                out.push('\t');
                out.push_str(label.name());
            }
            if augmented {
                let _ = write!(
                    out,
                    "\t{}\t{}",
                    ex.provenance,
                    ex.parent_id.as_deref().unwrap_or("")
                );
            }
            out.push('\n');
        }
        Ok(out)
    }

    pub fn read_tsv(path: &Path, name: &str, has_labels: bool) -> Result<Self> {
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Dataset::from_tsv_str(name, &content, has_labels)
    }

    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let content = self.to_tsv_string()?;
        std::fs::write(path, content).map_err(|e| Error::io(path, e))
    }
}

struct Columns {
    width: usize,
    text: usize,
    label: Option<usize>,
    id: Option<usize>,
    provenance: Option<usize>,
    parent_id: Option<usize>,
}

impl Columns {
    fn parse(header: &str, has_labels: bool) -> Result<Self> {
        let names: Vec<&str> = header.split('\t').collect();
        let malformed = |message: String| Error::MalformedRow { line: 1, message };
        let mut seen = HashSet::new();
        for n in &names {
            if !matches!(*n, "text" | "label" | "id" | "provenance" | "parent_id") {
                return Err(malformed(format!("unknown column '{n}'")));
            }
            if !seen.insert(*n) {
                return Err(malformed(format!("duplicate column '{n}'")));
            }
        }
        let find = |n: &str| names.iter().position(|c| *c == n);
        let text = find("text").ok_or_else(|| malformed("missing 'text' column".into()))?;
        let label = find("label");
        if has_labels && label.is_none() {
            return Err(malformed("missing 'label' column".into()));
        }
        Ok(Columns {
            width: names.len(),
            text,
            label,
            id: find("id"),
            provenance: find("provenance"),
            parent_id: find("parent_id"),
        })
    }
}

/// Load a three-class dataset from a TSV file.
pub fn load_dataset(path: &Path, split_name: &str, has_labels: bool) -> Result<Dataset> {
    Dataset::read_tsv(path, split_name, has_labels)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelCount {
    pub code: u8,
    pub name: &'static str,
    pub count: usize,
    pub proportion: f64,
}

/// Per-label counts and proportions, one entry per label in code order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabelDistribution {
    pub total: usize,
    pub labels: Vec<LabelCount>,
}

impl LabelDistribution {
    pub fn count(&self, code: u8) -> usize {
        self.entry(code).map_or(0, |e| e.count)
    }

    pub fn proportion(&self, code: u8) -> f64 {
        self.entry(code).map_or(0.0, |e| e.proportion)
    }

    fn entry(&self, code: u8) -> Option<&LabelCount> {
        self.labels.iter().find(|e| e.code == code)
    }
}

pub fn label_distribution<L: ClassLabel>(ds: &Dataset<L>) -> Result<LabelDistribution> {
    let labels = ds.labels()?;
    Ok(distribution_of(&labels))
}

pub(crate) fn distribution_of<L: ClassLabel>(labels: &[L]) -> LabelDistribution {
    let total = labels.len();
    let labels = L::ALL
        .iter()
        .map(|&l| {
            let count = labels.iter().filter(|&&x| x == l).count();
            LabelCount {
                code: l.code(),
                name: l.name(),
                count,
                proportion: if total == 0 {
                    0.0
                } else {
                    count as f64 / total as f64
                },
            }
        })
        .collect();
    LabelDistribution { total, labels }
}

/// Number of maximal runs of non-whitespace characters.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}
