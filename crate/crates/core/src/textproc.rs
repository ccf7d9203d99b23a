//! Tokenization and TF-IDF vectorization.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use unicode_properties::{GeneralCategoryGroup, UnicodeGeneralCategory};

use crate::corpus::{ClassLabel, Dataset};
use crate::error::{Error, Result};

const FORMAT_VERSION: u32 = 1;

fn is_word_char(c: char) -> bool {
    matches!(
        c.general_category_group(),
        GeneralCategoryGroup::Letter | GeneralCategoryGroup::Mark | GeneralCategoryGroup::Number
    )
}

/// Split into maximal runs of letters, digits and combining marks.
///
/// Everything else (punctuation, symbols, whitespace, format characters)
/// separates tokens. Lowercasing leaves caseless scripts untouched.
pub fn tokenize(text: &str, lowercase: bool) -> Vec<String> {
    text.split(|c: char| !is_word_char(c))
        .filter(|t| !t.is_empty())
        .map(|t| if lowercase { t.to_lowercase() } else { t.to_string() })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TfidfConfig {
    pub min_df: usize,
    pub max_features: Option<usize>,
    pub lowercase: bool,
    pub sublinear_tf: bool,
}

impl Default for TfidfConfig {
    fn default() -> Self {
        TfidfConfig {
            min_df: 1,
            max_features: None,
            lowercase: true,
            sublinear_tf: false,
        }
    }
}

impl TfidfConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_df < 1 {
            return Err(Error::InvalidConfig("min_df must be >= 1".into()));
        }
        if self.max_features == Some(0) {
            return Err(Error::InvalidConfig("max_features must be >= 1".into()));
        }
        Ok(())
    }
}

/// Sparse vector with strictly increasing indices and non-zero values.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    dim: usize,
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    /// Build from arbitrary pairs; zero values are dropped and indices must
    /// be unique and in range.
    pub fn new(dim: usize, mut entries: Vec<(usize, f64)>) -> Result<Self> {
        entries.retain(|&(_, v)| v != 0.0);
        entries.sort_by_key(|&(i, _)| i);
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidConfig(format!(
                    "duplicate sparse index {}",
                    w[0].0
                )));
            }
        }
        if let Some(&(i, _)) = entries.last() {
            if i >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: i + 1,
                });
            }
        }
        if entries.iter().any(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidConfig("non-finite sparse value".into()));
        }
        Ok(SparseVector { dim, entries })
    }

    pub fn zeros(dim: usize) -> Self {
        SparseVector {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn from_dense(values: &[f64]) -> Self {
        SparseVector {
            dim: values.len(),
            entries: values
                .iter()
                .copied()
                .enumerate()
                .filter(|&(_, v)| v != 0.0)
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map_or(0.0, |k| self.entries[k].1)
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| v * dense[i]).sum()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    doc_freq: Vec<usize>,
    n_docs: usize,
}

impl Vocabulary {
    fn from_parts(tokens: Vec<String>, doc_freq: Vec<usize>, n_docs: usize) -> Result<Self> {
        if tokens.len() != doc_freq.len() {
            return Err(Error::Integrity("vocabulary/df length mismatch".into()));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::Integrity(format!("duplicate vocabulary token '{t}'")));
            }
        }
        if doc_freq.iter().any(|&df| df < 1 || df > n_docs) {
            return Err(Error::Integrity("document frequency out of range".into()));
        }
        Ok(Vocabulary {
            tokens,
            index,
            doc_freq,
            n_docs,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, index: usize) -> &str {
        &self.tokens[index]
    }

    pub fn doc_freq(&self, index: usize) -> usize {
        self.doc_freq[index]
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TfidfModel {
    vocabulary: Vocabulary,
    idf: Vec<f64>,
    config: TfidfConfig,
}

fn smoothed_idf(n_docs: usize, df: usize) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0
}

impl TfidfModel {
    /// Fit on raw texts.
    ///
    /// Tokens with `df < min_df` are dropped, the rest are ranked by df
    /// descending then token ascending and cut to `max_features`. Feature
    /// indices follow lexicographic token order.
    pub fn fit<S: AsRef<str>>(texts: &[S], config: &TfidfConfig) -> Result<Self> {
        config.validate()?;
        if texts.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for text in texts {
            let mut tokens = tokenize(text.as_ref(), config.lowercase);
            tokens.sort_unstable();
            tokens.dedup();
            for t in tokens {
                *df.entry(t).or_default() += 1;
            }
        }
        let mut kept: Vec<(String, usize)> =
            df.into_iter().filter(|&(_, f)| f >= config.min_df).collect();
        if let Some(cap) = config.max_features {
            if kept.len() > cap {
                kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
                kept.truncate(cap);
                kept.sort_by(|a, b| a.0.cmp(&b.0));
            }
        }
        if kept.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        let n_docs = texts.len();
        let idf = kept.iter().map(|&(_, f)| smoothed_idf(n_docs, f)).collect();
        let (tokens, doc_freq) = kept.into_iter().unzip();
        Ok(TfidfModel {
            vocabulary: Vocabulary::from_parts(tokens, doc_freq, n_docs)?,
            idf,
            config: config.clone(),
        })
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn config(&self) -> &TfidfConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.vocabulary.len()
    }

    /// L2-normalized tf-idf vector; out-of-vocabulary tokens are ignored.
    pub fn transform(&self, text: &str) -> SparseVector {
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for t in tokenize(text, self.config.lowercase) {
            if let Some(i) = self.vocabulary.index_of(&t) {
                *counts.entry(i).or_default() += 1;
            }
        }
        let mut entries: Vec<(usize, f64)> = counts
            .into_iter()
            .map(|(i, c)| {
                let tf = if self.config.sublinear_tf {
                    1.0 + (c as f64).ln()
                } else {
                    c as f64
                };
                (i, tf * self.idf[i])
            })
            .collect();
        let norm = entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, v) in &mut entries {
                *v /= norm;
            }
        }
        SparseVector {
            dim: self.dim(),
            entries,
        }
    }

    pub fn transform_all<S: AsRef<str>>(&self, texts: &[S]) -> Vec<SparseVector> {
        texts.iter().map(|t| self.transform(t.as_ref())).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let file = TfidfFile {
            format_version: FORMAT_VERSION,
            config: self.config.clone(),
            n_docs: self.vocabulary.n_docs,
            vocabulary: self
                .vocabulary
                .tokens
                .iter()
                .zip(&self.vocabulary.doc_freq)
                .map(|(token, &df)| VocabEntry {
                    token: token.clone(),
                    df,
                })
                .collect(),
            idf: self.idf.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(input: &str) -> Result<Self> {
        let file: TfidfFile = serde_json::from_str(input)?;
        if file.format_version != FORMAT_VERSION {
            return Err(Error::Integrity(format!(
                "unsupported vectorizer format version {}",
                file.format_version
            )));
        }
        file.config.validate()?;
        if file.idf.len() != file.vocabulary.len() {
            return Err(Error::Integrity("idf/vocabulary length mismatch".into()));
        }
        if file.idf.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::Integrity("idf weights must be positive".into()));
        }
        let (tokens, doc_freq) = file.vocabulary.into_iter().map(|e| (e.token, e.df)).unzip();
        Ok(TfidfModel {
            vocabulary: Vocabulary::from_parts(tokens, doc_freq, file.n_docs)?,
            idf: file.idf,
            config: file.config,
        })
    }
}

/// Fit a vectorizer on the texts of a dataset.
pub fn fit_tfidf<L: ClassLabel>(corpus: &Dataset<L>, config: &TfidfConfig) -> Result<TfidfModel> {
    TfidfModel::fit(&corpus.texts(), config)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TfidfFile {
    format_version: u32,
    config: TfidfConfig,
    n_docs: usize,
    vocabulary: Vec<VocabEntry>,
    idf: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VocabEntry {
    token: String,
    df: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tokenize_basic() {
        assert_eq!(tokenize("Hello, world!", true), vec!["hello", "world"]);
        assert!(tokenize("", true).is_empty());
        assert_eq!(tokenize("Hello", false), vec!["Hello"]);
    }

    #[test]
    fn tokenize_bangla_keeps_marks() {
        // virama and vowel signs are combining marks and must stay inside the word
        let text = "রক্ত ঝরবে।";
        let tokens = tokenize(text, true);
        assert_eq!(tokens, vec!["রক্ত", "ঝরবে"]);
        assert_eq!(tokenize(text, false), tokens);
    }

    #[test]
    fn single_doc_idf_is_one() {
        let m = TfidfModel::fit(&["a b a"], &TfidfConfig::default()).unwrap();
        assert_eq!(m.dim(), 2);
        assert_eq!(m.vocabulary().doc_freq(0), 1);
        assert_eq!(m.idf(), &[1.0, 1.0]);
    }

    #[test]
    fn min_df_filters() {
        let cfg = TfidfConfig {
            min_df: 2,
            ..Default::default()
        };
        let m = TfidfModel::fit(&["a b", "a c"], &cfg).unwrap();
        assert_eq!(m.dim(), 1);
        assert_eq!(m.vocabulary().token(0), "a");
    }

    #[test]
    fn max_features_tie_breaks_lexicographically() {
        let cfg = TfidfConfig {
            max_features: Some(1),
            ..Default::default()
        };
        let m = TfidfModel::fit(&["a b", "a b"], &cfg).unwrap();
        assert_eq!(m.dim(), 1);
        assert_eq!(m.vocabulary().token(0), "a");
    }

    #[test]
    fn max_features_prefers_high_df() {
        let cfg = TfidfConfig {
            max_features: Some(1),
            ..Default::default()
        };
        let m = TfidfModel::fit(&["a z", "z"], &cfg).unwrap();
        assert_eq!(m.vocabulary().token(0), "z");
    }

    #[test]
    fn fit_errors() {
        let empty: [&str; 0] = [];
        assert!(matches!(
            TfidfModel::fit(&empty, &TfidfConfig::default()),
            Err(Error::EmptyCorpus)
        ));
        assert!(matches!(
            TfidfModel::fit(&["!!! ..."], &TfidfConfig::default()),
            Err(Error::EmptyVocabulary)
        ));
        let bad = TfidfConfig {
            min_df: 0,
            ..Default::default()
        };
        assert!(TfidfModel::fit(&["a"], &bad).is_err());
    }

    #[test]
    fn transform_examples() {
        let m = TfidfModel::fit(&["a b a"], &TfidfConfig::default()).unwrap();
        let v = m.transform("a b");
        let half_sqrt = 1.0 / 2f64.sqrt();
        assert_eq!(v.nnz(), 2);
        assert!((v.get(0) - half_sqrt).abs() < 1e-12);
        assert!((v.get(1) - half_sqrt).abs() < 1e-12);

        assert!(m.transform("zzz").is_zero());
        let one = m.transform("a a");
        assert_eq!(one.entries(), &[(0, 1.0)]);
    }

    #[test]
    fn transform_weights_by_idf() {
        // N=2: idf(a) = ln(3/3)+1 = 1, idf(b) = ln(3/2)+1
        let m = TfidfModel::fit(&["a b", "a"], &TfidfConfig::default()).unwrap();
        let v = m.transform("a b");
        let idf_b = (1.5f64).ln() + 1.0;
        let norm = (1.0 + idf_b * idf_b).sqrt();
        assert!((v.get(0) - 1.0 / norm).abs() < 1e-12);
        assert!((v.get(1) - idf_b / norm).abs() < 1e-12);
    }

    #[test]
    fn sublinear_tf() {
        let cfg = TfidfConfig {
            sublinear_tf: true,
            ..Default::default()
        };
        let m = TfidfModel::fit(&["a b"], &cfg).unwrap();
        let v = m.transform("a a a b");
        let ta = 1.0 + 3f64.ln();
        let norm = (ta * ta + 1.0).sqrt();
        assert!((v.get(0) - ta / norm).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let m = TfidfModel::fit(&["x y z", "y z", "z"], &TfidfConfig::default()).unwrap();
        let json = m.to_json().unwrap();
        let back = TfidfModel::from_json(&json).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_json().unwrap(), json);
    }

    #[test]
    fn json_rejects_bad_version() {
        let m = TfidfModel::fit(&["x"], &TfidfConfig::default()).unwrap();
        let json = m.to_json().unwrap().replace("\"format_version\": 1", "\"format_version\": 9");
        assert!(matches!(TfidfModel::from_json(&json), Err(Error::Integrity(_))));
    }

    #[test]
    fn sparse_vector_validation() {
        assert!(SparseVector::new(2, vec![(2, 1.0)]).is_err());
        assert!(SparseVector::new(3, vec![(1, 1.0), (1, 2.0)]).is_err());
        let v = SparseVector::new(3, vec![(2, 1.0), (0, 0.0), (1, -2.0)]).unwrap();
        assert_eq!(v.entries(), &[(1, -2.0), (2, 1.0)]);
    }

    fn word() -> impl Strategy<Value = String> {
        prop::sample::select(vec!["ক", "খগ", "alpha", "Beta", "gamma", "7", "রক্ত", "x"])
            .prop_map(str::to_string)
    }

    fn doc() -> impl Strategy<Value = String> {
        prop::collection::vec(word(), 0..8).prop_map(|w| w.join(" "))
    }

    proptest! {
        #[test]
        fn transformed_vectors_are_unit_or_zero(docs in prop::collection::vec(doc(), 1..10), probe in doc()) {
            prop_assume!(docs.iter().any(|d| !d.is_empty()));
            let m = TfidfModel::fit(&docs, &TfidfConfig::default()).unwrap();
            let v = m.transform(&probe);
            prop_assert!(v.is_zero() || (v.norm() - 1.0).abs() < 1e-9);
            for w in v.entries().windows(2) {
                prop_assert!(w[0].0 < w[1].0);
            }
        }

        #[test]
        fn nnz_bounded_by_distinct_tokens(docs in prop::collection::vec(doc(), 1..10)) {
            prop_assume!(docs.iter().any(|d| !d.is_empty()));
            let m = TfidfModel::fit(&docs, &TfidfConfig::default()).unwrap();
            for d in &docs {
                let mut distinct = tokenize(d, true);
                distinct.sort();
                distinct.dedup();
                prop_assert!(m.transform(d).nnz() <= distinct.len());
            }
        }

        #[test]
        fn fit_is_order_independent(docs in prop::collection::vec(doc(), 1..10), probe in doc()) {
            prop_assume!(docs.iter().any(|d| !d.is_empty()));
            let m1 = TfidfModel::fit(&docs, &TfidfConfig::default()).unwrap();
            let mut rev = docs.clone();
            rev.reverse();
            let m2 = TfidfModel::fit(&rev, &TfidfConfig::default()).unwrap();
            prop_assert_eq!(m1.to_json().unwrap(), m2.to_json().unwrap());
            prop_assert_eq!(m1.transform(&probe), m2.transform(&probe));
        }
    }
}
