//! Shared inputs for the benchmarks under `benches/`.

use vitd_core::{ClassLabel, Dataset, Label};

const STEMS: [&str; 3] = ["shanti", "hushiyar", "akraman"];

/// Deterministic three-class corpus of `n` rows, about `words` words each.
pub fn corpus(n: usize, words: usize) -> Dataset {
    let rows = (0..n).map(|i| {
        let class = i % 3;
        let text: Vec<String> = (0..words)
            .map(|w| {
                // mostly class words, every fourth one shared
                let k = (i * 31 + w * 17) % 50;
                if w % 4 == 3 {
                    format!("common{k}")
                } else {
                    format!("{}{k}", STEMS[class])
                }
            })
            .collect();
        (text.join(" "), Label::from_code(class as u8))
    });
    Dataset::from_pairs("bench", rows).expect("generated rows are valid")
}

/// `n` predictions against `n` gold labels, roughly 70% correct.
pub fn label_pairs(n: usize) -> (Vec<u8>, Vec<u8>) {
    let gold: Vec<u8> = (0..n).map(|i| (i % 3) as u8).collect();
    let pred = gold
        .iter()
        .enumerate()
        .map(|(i, &g)| if i % 10 < 7 { g } else { (g + 1) % 3 })
        .collect();
    (gold, pred)
}
