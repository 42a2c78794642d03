//! Token counts of a fixed sample, checked against values produced by an
//! independent tokenizer implementation.

use std::collections::BTreeMap;

use r2c_core::tokenize::{counter_by_name, BpeCounter, TokenCounter};

const SAMPLE: &str = include_str!("data/sample_1k.txt");
const COUNTS: &str = include_str!("data/sample_1k.counts.json");

fn expected() -> BTreeMap<String, usize> {
    serde_json::from_str(COUNTS).unwrap()
}

#[test]
fn sample_is_at_least_one_kib() {
    assert!(SAMPLE.len() >= 1024);
}

#[test]
fn golden_counts() {
    for (name, count) in expected() {
        let counter = counter_by_name(&name).unwrap();
        assert_eq!(counter.count(SAMPLE), count, "{name}");
    }
}

#[test]
fn token_starts_are_sorted_byte_offsets() {
    let counter = BpeCounter::cl100k();
    let starts = counter.token_starts(SAMPLE);
    assert_eq!(starts.len(), expected()["cl100k"]);
    assert!(starts.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(starts[0], 0);
    assert!(starts.iter().all(|&s| s < SAMPLE.len()));
}
