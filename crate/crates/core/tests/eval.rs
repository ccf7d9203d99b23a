mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use vitd_core::eval::{
    confusion_matrix, emit_report, evaluate, length_bucket_analysis, macro_f1, percentage,
    render_markdown, DEFAULT_BINS,
};
use vitd_core::{Example, Label};

#[test]
fn macro_f1_matches_counting_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    for n in 1..=200 {
        let (gold, pred) = common::random_pairs(&mut rng, n);
        let got = macro_f1(&gold, &pred, &[0, 1, 2]).unwrap();
        let want = common::brute_force_macro_f1(&gold, &pred, &[0, 1, 2]);
        assert!((got - want).abs() <= 1e-12, "n={n}: {got} vs {want}");
    }
}

#[test]
fn absent_classes_count_as_zero() {
    // class 2 never appears: its F1 of 0 still enters the average
    let f1 = macro_f1(&[0, 1], &[0, 1], &[0, 1, 2]).unwrap();
    assert!((f1 - 2.0 / 3.0).abs() < 1e-15);
}

proptest! {
    #[test]
    fn permutation_invariant(pairs in prop::collection::vec((0u8..3, 0u8..3), 1..80), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut shuffled = pairs.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let (g1, p1): (Vec<u8>, Vec<u8>) = pairs.into_iter().unzip();
        let (g2, p2): (Vec<u8>, Vec<u8>) = shuffled.into_iter().unzip();
        let a = macro_f1(&g1, &p1, &[0, 1, 2]).unwrap();
        let b = macro_f1(&g2, &p2, &[0, 1, 2]).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn confusion_margins(pairs in prop::collection::vec((0u8..3, 0u8..3), 1..80)) {
        let (gold, pred): (Vec<u8>, Vec<u8>) = pairs.into_iter().unzip();
        let cm = confusion_matrix(&gold, &pred, &[0, 1, 2]).unwrap();
        prop_assert_eq!(cm.total() as usize, gold.len());
        for c in 0..3u8 {
            prop_assert_eq!(cm.row_sum(c as usize) as usize, gold.iter().filter(|&&g| g == c).count());
            prop_assert_eq!(cm.col_sum(c as usize) as usize, pred.iter().filter(|&&p| p == c).count());
        }
    }

    #[test]
    fn bucket_counts_partition_the_input(lengths in prop::collection::vec(0usize..1500, 1..60)) {
        let examples: Vec<Example> = lengths
            .iter()
            .enumerate()
            .map(|(i, &n)| Example::original(format!("t-{i}"), vec!["w"; n].join(" "), Some(Label::NonViolence)))
            .collect();
        let preds = vec![0u8; examples.len()];
        let rows = length_bucket_analysis(&examples, &preds, &DEFAULT_BINS).unwrap();
        prop_assert_eq!(rows.iter().map(|r| r.count).sum::<usize>(), examples.len());
        let pct: f64 = rows.iter().map(|r| r.percentage).sum();
        prop_assert!((pct - 100.0).abs() <= 0.0005 * rows.len() as f64 + 1e-9);
    }
}

#[test]
fn percentages_round_to_three_decimals() {
    assert_eq!(percentage(1, 3), 33.333);
    assert_eq!(percentage(2, 3), 66.667);
    assert_eq!(percentage(0, 0), 0.0);
}

fn golden_examples() -> (Vec<Example>, Vec<u8>) {
    let rows = [
        ("one two three", Label::NonViolence, 0),
        ("a b c d e f g h i j k l", Label::NonViolence, 1),
        ("x", Label::PassiveViolence, 1),
        ("p q r s t", Label::PassiveViolence, 2),
        ("m n", Label::DirectViolence, 2),
        ("", Label::DirectViolence, 0),
    ];
    let examples = rows
        .iter()
        .enumerate()
        .map(|(i, (t, l, _))| Example::original(format!("test-{i}"), *t, Some(*l)))
        .collect();
    (examples, rows.iter().map(|r| r.2).collect())
}

#[test]
fn report_matches_golden_file() {
    let (examples, preds) = golden_examples();
    let report = evaluate(&examples, &preds).unwrap();
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/golden_report.md");
    let rendered = render_markdown(&report);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &rendered).unwrap();
    }
    assert_eq!(rendered, std::fs::read_to_string(&path).unwrap());
}

#[test]
fn report_files_written() {
    let (examples, preds) = golden_examples();
    let report = evaluate(&examples, &preds).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = emit_report(&report, dir.path()).unwrap();
    assert_eq!(files.len(), 3);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["total"], 6);
    let csv = std::fs::read_to_string(dir.path().join("length_buckets.csv")).unwrap();
    assert!(csv.starts_with("bucket_label,upper_edge,macro_f1,count,percentage\n"));
    assert!(csv.contains("\"(0)\",0,"));
}
