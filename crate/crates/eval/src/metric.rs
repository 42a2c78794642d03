//! Span exact match.

/// Lowercases, drops ASCII punctuation and the articles a/an/the, and
/// collapses whitespace.
pub fn normalize_answer(text: &str) -> String {
    let lowered = text.to_lowercase();
    let stripped: String = lowered.chars().filter(|c| !c.is_ascii_punctuation()).collect();
    stripped
        .split_whitespace()
        .filter(|w| !matches!(*w, "a" | "an" | "the"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// 1 when any gold answer, normalized, occurs inside the normalized
/// prediction; 0 otherwise. Answers that normalize to nothing never match.
pub fn span_em<S: AsRef<str>>(prediction: &str, answers: &[S]) -> u8 {
    let pred = normalize_answer(prediction);
    if pred.is_empty() {
        return 0;
    }
    let hit = answers.iter().any(|a| {
        let gold = normalize_answer(a.as_ref());
        !gold.is_empty() && pred.contains(&gold)
    });
    u8::from(hit)
}
