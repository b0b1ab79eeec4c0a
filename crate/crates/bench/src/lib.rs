//! Seeded workloads shared by the benchmarks.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tagmark_core::skyline::MetricPoint;
use tagmark_core::{Sentence, Token};

const LEXICON: &[(&str, &[&str])] = &[
    ("DET", &["the", "a", "this", "that"]),
    ("ADJ", &["big", "small", "red", "old", "fast", "light"]),
    (
        "NOUN",
        &[
            "dog", "cat", "run", "house", "light", "walk", "book", "Paris",
        ],
    ),
    (
        "VERB",
        &["runs", "sees", "run", "walk", "book", "likes", "reads"],
    ),
    ("ADV", &["quickly", "often", "fast", "never"]),
    ("ADP", &["in", "on", "near", "that"]),
    ("PRON", &["she", "they", "it", "that"]),
    ("PUNCT", &[".", "!"]),
];

fn words(tag: &str) -> &'static [&'static str] {
    LEXICON
        .iter()
        .find(|(t, _)| *t == tag)
        .map(|(_, w)| *w)
        .unwrap_or(&[])
}

fn noun_phrase(rng: &mut impl Rng, tags: &mut Vec<&'static str>) {
    if rng.gen_bool(0.3) {
        tags.push("PRON");
    } else {
        tags.push("DET");
        if rng.gen_bool(0.5) {
            tags.push("ADJ");
        }
        tags.push("NOUN");
    }
}

/// `n` tagged sentences from a small grammar with ambiguous words and
/// about 5% rare words.
pub fn synthetic_corpus(seed: u64, n: usize) -> Vec<Sentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut tags = Vec::new();
            noun_phrase(&mut rng, &mut tags);
            if rng.gen_bool(0.3) {
                tags.push("ADV");
            }
            tags.push("VERB");
            if rng.gen_bool(0.7) {
                noun_phrase(&mut rng, &mut tags);
            }
            if rng.gen_bool(0.4) {
                tags.push("ADP");
                noun_phrase(&mut rng, &mut tags);
            }
            tags.push("PUNCT");
            let tokens = tags
                .iter()
                .map(|&tag| {
                    let form = if rng.gen_bool(0.05) {
                        let suffix = ["ing", "ed", "s", "ly"]
                            .choose(&mut rng)
                            .copied()
                            .unwrap_or("s");
                        format!("w{}{suffix}", rng.gen_range(0..500))
                    } else {
                        words(tag)
                            .choose(&mut rng)
                            .copied()
                            .unwrap_or("x")
                            .to_string()
                    };
                    Token::new(form, tag)
                })
                .collect();
            Sentence::new(tokens)
        })
        .collect()
}

/// `n` random (size, accuracy) points for one language.
pub fn random_points(seed: u64, n: usize) -> Vec<MetricPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            MetricPoint::new(
                &format!("t{i}"),
                "xx",
                rng.gen_range(1.0..1e6),
                rng.gen_range(0.0..1.0),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_seeded() {
        let a = synthetic_corpus(1, 20);
        assert_eq!(a, synthetic_corpus(1, 20));
        assert_eq!(a.len(), 20);
        assert!(a
            .iter()
            .all(|s| s.tokens.last().is_some_and(|t| t.tag == "PUNCT")));
    }

    #[test]
    fn points_are_valid() {
        assert!(random_points(2, 100).iter().all(|p| p.validate().is_ok()));
    }
}
