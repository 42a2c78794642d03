//! Rule-based sentence boundary detection.
//!
//! A boundary is placed after a run of terminal punctuation (plus any closing
//! quotes or brackets) when it is followed by whitespace and then by a
//! character that can open a sentence. Periods after known abbreviations and
//! dotted initialisms (`e.g.`, `U.S.`) never end a sentence.

use std::collections::HashSet;
use std::fmt;

const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "inc", "ltd", "co", "corp", "jan",
    "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec", "fig", "gen",
    "gov", "sen", "rep", "rev", "capt", "col", "lt", "sgt", "mt", "ft", "approx", "dept", "est",
];

/// Abbreviations that only bind to a following number (`No. 5`, `pp. 12`).
const NUMERIC_ABBREVIATIONS: &[&str] = &["no", "nos", "pp", "vol", "ch", "sec"];

const CLOSERS: &[char] = &['"', '\'', ')', ']', '}', '\u{201d}', '\u{2019}', '\u{bb}'];

pub trait SentenceSplitter: Send + Sync + fmt::Debug {
    /// Byte offsets where each sentence tile starts. The first entry is
    /// always 0 and offsets are strictly increasing.
    fn tile_starts(&self, text: &str) -> Vec<usize>;
}

#[derive(Debug, Clone)]
pub struct RuleSplitter {
    abbreviations: HashSet<String>,
}

impl Default for RuleSplitter {
    fn default() -> Self {
        RuleSplitter {
            abbreviations: ABBREVIATIONS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl RuleSplitter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_abbreviation(mut self, abbreviation: &str) -> Self {
        self.abbreviations
            .insert(abbreviation.trim_end_matches('.').to_lowercase());
        self
    }

    fn is_abbreviation(&self, text: &str, period: usize, next: char) -> bool {
        let before = &text[..period];
        let word_start = before
            .rfind(char::is_whitespace)
            .map(|i| i + before[i..].chars().next().map_or(1, char::len_utf8))
            .unwrap_or(0);
        let word = before[word_start..]
            .trim_start_matches(|c: char| !c.is_alphanumeric())
            .to_lowercase();
        if word.is_empty() {
            return false;
        }
        if self.abbreviations.contains(&word) {
            return true;
        }
        if NUMERIC_ABBREVIATIONS.contains(&word.as_str()) && next.is_ascii_digit() {
            return true;
        }
        // Dotted initialisms: "e.g", "u.s", "ph.d".
        word.contains('.')
            && word
                .split('.')
                .all(|part| !part.is_empty() && part.len() <= 2 && part.chars().all(char::is_alphabetic))
    }
}

impl SentenceSplitter for RuleSplitter {
    fn tile_starts(&self, text: &str) -> Vec<usize> {
        let mut starts = vec![0];
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let mut i = 0;
        while i < chars.len() {
            let (pos, ch) = chars[i];
            if !matches!(ch, '.' | '!' | '?' | '\u{2026}') {
                i += 1;
                continue;
            }
            let run_start = i;
            while i < chars.len() && matches!(chars[i].1, '.' | '!' | '?' | '\u{2026}') {
                i += 1;
            }
            let single_period = i - run_start == 1 && ch == '.';
            while i < chars.len() && CLOSERS.contains(&chars[i].1) {
                i += 1;
            }
            if i >= chars.len() || !chars[i].1.is_whitespace() {
                continue;
            }
            let end = chars[i].0;
            let Some(&(_, next)) = chars[i..].iter().find(|(_, c)| !c.is_whitespace()) else {
                break;
            };
            if next.is_lowercase() {
                continue;
            }
            if single_period && self.is_abbreviation(text, pos, next) {
                continue;
            }
            starts.push(end);
        }
        starts
    }
}

/// Splits `text` into trimmed sentences, one per tile.
pub fn split_text(splitter: &dyn SentenceSplitter, text: &str) -> Vec<String> {
    let starts = splitter.tile_starts(text);
    starts
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let e = starts.get(i + 1).copied().unwrap_or(text.len());
            text[s..e].trim().to_string()
        })
        .collect()
}
