#![allow(dead_code)]

use quadline::quadrics::QuadricParams;
use serde::Deserialize;

#[derive(Deserialize)]
struct Entry {
    c: [f64; 6],
    d: [f64; 3],
}

#[derive(Deserialize)]
struct Corpus {
    sets: Vec<Entry>,
}

/// Parameter sets in `tests/data/corpus.json`.
pub fn corpus() -> Vec<QuadricParams> {
    let text = include_str!("../data/corpus.json");
    let corpus: Corpus = serde_json::from_str(text).expect("corpus parses");
    corpus.sets.into_iter().map(|e| QuadricParams::new(e.c, e.d)).collect()
}
