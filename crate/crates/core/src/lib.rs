//! Violence-inciting text classification toolkit.
//!
//! - [`corpus`]: labels, examples, datasets and the TSV format
//! - [`textproc`]: tokenizer and TF-IDF vectorizer
//! - [`models`]: logistic regression and one-vs-rest linear SVM, plus the
//!   external classifier protocol
//! - [`augment`]: translation and back-translation augmentation with a
//!   content-addressed cache
//! - [`cascade`]: two-step violent / violence-type classification and
//!   self-transfer training
//! - [`eval`]: confusion matrix, macro F1, length-bucket analysis, reports
//! - [`store`]: model directories and prediction files

pub mod augment;
pub mod cascade;
pub mod classifier;
pub mod corpus;
mod error;
pub mod eval;
pub mod models;
pub mod store;
pub mod textproc;

pub use classifier::{ModelSpec, TextModel};
pub use corpus::{BinaryLabel, ClassLabel, Dataset, Example, Label, Provenance};
pub use error::{Error, ErrorCategory, Result};
