//! Seeded synthetic long-context records.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::EvalRecord;

const WORDS: &[&str] = &[
    "river", "market", "engine", "garden", "signal", "harbor", "winter", "copper", "lantern", "meadow", "orbit",
    "pilot", "quartz", "saddle", "timber", "valley", "willow", "anchor", "beacon", "canyon", "delta", "ember",
    "falcon", "glacier", "hollow", "island", "jungle", "kettle", "ledger", "marble", "needle", "oyster", "prairie",
    "quiver", "ribbon", "summit", "tunnel", "umbrella", "velvet", "wagon", "yarrow", "zephyr", "bridge", "castle",
    "the", "of", "and", "with", "near", "under", "across", "before", "after", "quietly", "rapidly", "old", "new",
    "bright", "dark", "small", "large", "northern", "southern", "was", "became", "remained", "carried", "found",
];

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub seed: u64,
    pub records: usize,
    /// Approximate whitespace tokens of context per record.
    pub context_tokens: usize,
    /// Inclusive range of paragraph lengths in sentences.
    pub sentences_per_paragraph: (usize, usize),
    /// Inclusive range of sentence lengths in words.
    pub words_per_sentence: (usize, usize),
}

impl Default for SyntheticCorpus {
    fn default() -> Self {
        SyntheticCorpus {
            seed: 0,
            records: 10,
            context_tokens: 10_000,
            sentences_per_paragraph: (2, 8),
            words_per_sentence: (5, 25),
        }
    }
}

impl SyntheticCorpus {
    pub fn generate(&self) -> Vec<EvalRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.records).map(|i| self.record(i, &mut rng)).collect()
    }

    fn record(&self, index: usize, rng: &mut ChaCha8Rng) -> EvalRecord {
        let mut paragraphs = Vec::new();
        let mut tokens = 0;
        while tokens < self.context_tokens {
            let n = rng.gen_range(self.sentences_per_paragraph.0..=self.sentences_per_paragraph.1);
            let sentences: Vec<String> = (0..n).map(|_| self.sentence(rng, &mut tokens)).collect();
            paragraphs.push(sentences.join(" "));
        }
        let question: Vec<&str> = WORDS[..44].choose_multiple(rng, 3).copied().collect();
        EvalRecord {
            id: format!("synthetic-{index}"),
            question: format!("what about the {}?", question.join(" ")),
            answers: vec![question[0].to_string()],
            context_units: vec![paragraphs.join("\n\n")],
            task_tag: "other".into(),
            dataset: "synthetic".into(),
        }
    }

    fn sentence(&self, rng: &mut ChaCha8Rng, tokens: &mut usize) -> String {
        let n = rng.gen_range(self.words_per_sentence.0..=self.words_per_sentence.1);
        *tokens += n;
        let words: Vec<&str> = (0..n).map(|_| *WORDS.choose(rng).unwrap_or(&"word")).collect();
        let mut s = words.join(" ");
        if let Some(first) = s.get(..1) {
            let upper = first.to_ascii_uppercase();
            s.replace_range(..1, &upper);
        }
        s.push('.');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_sized() {
        let corpus = SyntheticCorpus { records: 2, ..Default::default() };
        let a = corpus.generate();
        assert_eq!(a, corpus.generate());
        for r in &a {
            let n = r.context_units[0].split_whitespace().count();
            assert!((10_000..10_200).contains(&n), "{n}");
        }
        assert_ne!(a[0].context_units, a[1].context_units);
    }
}
