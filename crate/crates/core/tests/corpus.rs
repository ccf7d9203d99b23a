use proptest::prelude::*;

use vitd_core::corpus::{label_distribution, load_dataset, word_count};
use vitd_core::{ClassLabel, Dataset, Error, Label};

fn text_strategy() -> impl Strategy<Value = String> {
    // printable text with Bengali, Latin and punctuation, no tabs or newlines
    "[a-zA-Z0-9 .,!?\u{0980}-\u{09FF}]{0,40}".prop_filter("non-blank", |s| !s.trim().is_empty())
}

fn label_strategy() -> impl Strategy<Value = Label> {
    (0u8..3).prop_map(|c| Label::from_code(c).unwrap())
}

proptest! {
    #[test]
    fn tsv_round_trip(rows in prop::collection::vec((text_strategy(), label_strategy()), 1..30)) {
        let ds = Dataset::from_pairs("train", rows.into_iter().map(|(t, l)| (t, Some(l)))).unwrap();
        let written = ds.to_tsv_string().unwrap();
        let back = Dataset::<Label>::from_tsv_str("train", &written, true).unwrap();
        prop_assert_eq!(&back, &ds);
        prop_assert_eq!(back.to_tsv_string().unwrap(), written);
    }

    #[test]
    fn distribution_sums_to_one(labels in prop::collection::vec(label_strategy(), 1..200)) {
        let ds = Dataset::from_pairs("d", labels.iter().map(|&l| ("t", Some(l)))).unwrap();
        let dist = label_distribution(&ds).unwrap();
        let total: f64 = dist.labels.iter().map(|c| c.proportion).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert_eq!(dist.labels.iter().map(|c| c.count).sum::<usize>(), labels.len());
    }

    #[test]
    fn word_count_ignores_whitespace_layout(words in prop::collection::vec("[a-z\u{0995}-\u{09A8}]{1,6}", 0..20), pad in 1usize..4) {
        let single = words.join(" ");
        let spread = words.join(&" \t ".repeat(pad));
        prop_assert_eq!(word_count(&single), words.len());
        prop_assert_eq!(word_count(&format!("  {spread}\n")), words.len());
    }
}

#[test]
fn columns_in_any_order_and_ids_synthesized() {
    let input = "label\ttext\nDirect-Violence\tআমি\nNon-Violence\tতুমি\n";
    let ds = Dataset::<Label>::from_tsv_str("dev", input, true).unwrap();
    assert_eq!(ds.examples()[1].id, "dev-1");
    assert_eq!(ds.label_codes().unwrap(), vec![2, 0]);
}

#[test]
fn unknown_label_reports_line() {
    let input = "text\tlabel\nক\tnon-violence\n";
    let err = Dataset::<Label>::from_tsv_str("train", input, true).unwrap_err();
    assert!(matches!(err, Error::UnknownLabel { line: 2, .. }), "{err}");
}

#[test]
fn missing_file_names_the_path() {
    let err = load_dataset(std::path::Path::new("/nonexistent/train.tsv"), "train", true).unwrap_err();
    assert!(err.to_string().contains("/nonexistent/train.tsv"), "{err}");
}

#[test]
fn unlabeled_test_split() {
    let ds = Dataset::<Label>::from_tsv_str("test", "id\ttext\na\tক খ\n", false).unwrap();
    assert!(!ds.is_labeled());
    assert!(ds.labels().is_err());
}
