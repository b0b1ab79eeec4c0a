//! Brute-force reference implementations and fixture generators shared by
//! the integration tests and the acceptance suite.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use tagmark_core::corpus::{Sentence, Token};
use tagmark_core::taggers::{
    quantize, BrillModel, BrillRule, HmmModel, RuleContext, Score, Template, TntModel,
};
use tagmark_core::TagSet;

/// Every tag sequence of length `len` over `tags` tags, in colex order
/// (first position varies fastest).
fn sequences(len: usize, tags: usize) -> Vec<Vec<usize>> {
    let total = tags.pow(len as u32);
    (0..total)
        .map(|mut code| {
            (0..len)
                .map(|_| {
                    let t = code % tags;
                    code /= tags;
                    t
                })
                .collect()
        })
        .collect()
}

/// Highest-scoring sequence under fixed-point path scores; among equal
/// scores the first in colex order.
fn argmax(len: usize, tags: usize, terms: impl Fn(&[usize]) -> Vec<f64>) -> Vec<usize> {
    let mut best: Option<(Score, Vec<usize>)> = None;
    for seq in sequences(len, tags) {
        let score: Score = terms(&seq).into_iter().map(quantize).sum();
        if best.as_ref().is_none_or(|(b, _)| score > *b) {
            best = Some((score, seq));
        }
    }
    best.map(|(_, s)| s).unwrap_or_default()
}

/// Exhaustive first-order HMM decoding.
pub fn brute_hmm(model: &HmmModel, forms: &[&str]) -> Vec<usize> {
    if forms.is_empty() {
        return Vec::new();
    }
    argmax(forms.len(), model.num_tags(), |seq| {
        let mut terms = vec![
            model.log_initial(seq[0]),
            model.log_emission(forms[0], seq[0]),
        ];
        for i in 1..seq.len() {
            terms.push(model.log_transition(seq[i - 1], seq[i]));
            terms.push(model.log_emission(forms[i], seq[i]));
        }
        terms
    })
}

/// Exhaustive second-order TnT decoding including the end-of-sentence
/// transition.
pub fn brute_tnt(model: &TntModel, forms: &[&str]) -> Vec<usize> {
    if forms.is_empty() {
        return Vec::new();
    }
    let bos = model.boundary();
    let lexical: Vec<Vec<f64>> = forms.iter().map(|f| model.log_lexical(f)).collect();
    argmax(forms.len(), model.num_tags(), |seq| {
        let (mut a, mut b) = (bos, bos);
        let mut terms = Vec::with_capacity(2 * seq.len() + 1);
        for (i, &c) in seq.iter().enumerate() {
            terms.push(model.log_trigram(a, b, c));
            terms.push(lexical[i][c]);
            a = b;
            b = c;
        }
        terms.push(model.log_trigram(a, b, bos));
        terms
    })
}

/// O(n²) dominance filter: indices dominated by no other coordinate.
pub fn all_pairs_skyline(coords: &[(f64, f64)]) -> BTreeSet<usize> {
    let dominates =
        |p: (f64, f64), q: (f64, f64)| p.0 <= q.0 && p.1 >= q.1 && (p.0 < q.0 || p.1 > q.1);
    (0..coords.len())
        .filter(|&i| !coords.iter().any(|&p| dominates(p, coords[i])))
        .collect()
}

/// Up to `max_n` points on a coarse grid so duplicates and collinear runs are
/// common.
pub fn random_points<R: Rng>(rng: &mut R, max_n: usize) -> Vec<(f64, f64)> {
    let n = rng.gen_range(1..=max_n);
    let grid = rng.gen_range(2..=20);
    (0..n)
        .map(|_| {
            let size = f64::from(rng.gen_range(1..=grid)) * 10.0;
            let acc = f64::from(rng.gen_range(0..=grid)) / f64::from(grid);
            (size, acc)
        })
        .collect()
}

/// A small random training corpus plus a test sentence of at most five
/// tokens over at most four tags, mixing known and unknown words.
pub fn random_decoder_case<R: Rng>(rng: &mut R) -> (Vec<Sentence>, Vec<String>) {
    const TAGS: [&str; 4] = ["ADJ", "DET", "NOUN", "VERB"];
    const WORDS: [&str; 8] = ["a", "b", "c", "d", "Ea", "fa", "gab", "Hb"];
    let n_tags = rng.gen_range(1..=4);
    let tags = &TAGS[..n_tags];
    let sentences = (0..rng.gen_range(1..=6))
        .map(|_| {
            let tokens = (0..rng.gen_range(1..=5))
                .map(|_| Token::new(*WORDS.choose(rng).unwrap(), *tags.choose(rng).unwrap()))
                .collect();
            Sentence::new(tokens)
        })
        .collect();
    let unknown = ["zz", "Qa", "xab", "b2"];
    let sentence = (0..rng.gen_range(1..=5))
        .map(|_| {
            if rng.gen_bool(0.3) {
                unknown.choose(rng).unwrap().to_string()
            } else {
                WORDS.choose(rng).unwrap().to_string()
            }
        })
        .collect();
    (sentences, sentence)
}

/// Sentences from a small stochastic grammar with ambiguous words, so every
/// built-in tagger has something to learn.
pub fn synthetic_corpus<R: Rng>(rng: &mut R, n: usize) -> Vec<Sentence> {
    let lexicon: &[(&str, &[&str])] = &[
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
    let words = |tag: &str| lexicon.iter().find(|(t, _)| *t == tag).unwrap().1;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut tags: Vec<&str> = Vec::new();
        let noun_phrase = |rng: &mut R, tags: &mut Vec<&str>| {
            if rng.gen_bool(0.3) {
                tags.push("PRON");
            } else {
                tags.push("DET");
                if rng.gen_bool(0.5) {
                    tags.push("ADJ");
                }
                tags.push("NOUN");
            }
        };
        noun_phrase(rng, &mut tags);
        if rng.gen_bool(0.3) {
            tags.push("ADV");
        }
        tags.push("VERB");
        if rng.gen_bool(0.7) {
            noun_phrase(rng, &mut tags);
        }
        if rng.gen_bool(0.4) {
            tags.push("ADP");
            noun_phrase(rng, &mut tags);
        }
        tags.push("PUNCT");
        let tokens = tags
            .iter()
            .map(|&t| {
                let form = if rng.gen_bool(0.05) {
                    // occasional rare word
                    format!(
                        "w{}{}",
                        rng.gen_range(0..500),
                        ["ing", "ed", "s", "ly"].choose(rng).unwrap()
                    )
                } else {
                    words(t).choose(rng).unwrap().to_string()
                };
                Token::new(form, t)
            })
            .collect();
        out.push(Sentence::new(tokens));
    }
    out
}

/// Every rule instantiable over the corpus' tags and words.
pub fn all_rules(train: &[Sentence]) -> Vec<BrillRule> {
    let tagset = TagSet::from_sentences(train);
    let tags: Vec<Option<String>> = std::iter::once(None)
        .chain(tagset.labels().iter().cloned().map(Some))
        .collect();
    let words: BTreeSet<&str> = train
        .iter()
        .flat_map(|s| s.tokens.iter().map(|t| t.form.as_str()))
        .collect();
    let words: Vec<Option<String>> = std::iter::once(None)
        .chain(words.into_iter().map(|w| Some(w.to_string())))
        .collect();
    let mut rules = Vec::new();
    for from in tagset.labels() {
        for to in tagset.labels() {
            if from == to {
                continue;
            }
            for template in Template::ALL {
                let contexts: Vec<RuleContext> = if template.is_lexical() {
                    words.iter().cloned().map(RuleContext::Word).collect()
                } else if template.is_pair() {
                    tags.iter()
                        .flat_map(|a| {
                            tags.iter()
                                .map(move |b| RuleContext::TagPair(a.clone(), b.clone()))
                        })
                        .collect()
                } else {
                    tags.iter().cloned().map(RuleContext::Tag).collect()
                };
                for context in contexts {
                    rules.push(BrillRule {
                        template,
                        from: from.clone(),
                        to: to.clone(),
                        context,
                    });
                }
            }
        }
    }
    rules
}

/// Whether `rule` fires at position `i`, judged on `tags` (independent of
/// the library's compiled representation).
fn fires(rule: &BrillRule, tags: &[String], forms: &[&str], i: usize) -> bool {
    if tags[i] != rule.from {
        return false;
    }
    let tag = |o: isize| -> Option<String> {
        let j = i as isize + o;
        (j >= 0 && (j as usize) < tags.len()).then(|| tags[j as usize].clone())
    };
    let word = |o: isize| -> Option<String> {
        let j = i as isize + o;
        (j >= 0 && (j as usize) < forms.len()).then(|| forms[j as usize].to_string())
    };
    match (&rule.context, rule.template) {
        (RuleContext::Tag(c), Template::PrevTag) => tag(-1) == *c,
        (RuleContext::Tag(c), Template::NextTag) => tag(1) == *c,
        (RuleContext::Tag(c), Template::Prev2Tag) => tag(-2) == *c,
        (RuleContext::Tag(c), Template::Next2Tag) => tag(2) == *c,
        (RuleContext::Tag(c), Template::AnyPrev2) => (1..=2).any(|k| tag(-k) == *c),
        (RuleContext::Tag(c), Template::AnyNext2) => (1..=2).any(|k| tag(k) == *c),
        (RuleContext::Tag(c), Template::AnyPrev3) => (1..=3).any(|k| tag(-k) == *c),
        (RuleContext::Tag(c), Template::AnyNext3) => (1..=3).any(|k| tag(k) == *c),
        (RuleContext::TagPair(a, b), Template::Surrounding) => tag(-1) == *a && tag(1) == *b,
        (RuleContext::TagPair(a, b), Template::PrevBigram) => tag(-2) == *a && tag(-1) == *b,
        (RuleContext::TagPair(a, b), Template::NextBigram) => tag(1) == *a && tag(2) == *b,
        (RuleContext::Word(w), Template::PrevWord) => word(-1) == *w,
        (RuleContext::Word(w), Template::NextWord) => word(1) == *w,
        _ => false,
    }
}

/// Applies one rule with start-of-pass trigger semantics.
pub fn apply_rule(rule: &BrillRule, tags: &mut [String], forms: &[&str]) {
    let fired: Vec<usize> = (0..tags.len())
        .filter(|&i| fires(rule, tags, forms, i))
        .collect();
    for i in fired {
        tags[i] = rule.to.clone();
    }
}

/// Net change in correct tags from applying `rule` to `current`.
pub fn rule_gain(rule: &BrillRule, train: &[Sentence], current: &[Vec<String>]) -> i64 {
    let mut gain = 0i64;
    for (sentence, tags) in train.iter().zip(current) {
        let forms = sentence.forms();
        let mut after = tags.clone();
        apply_rule(rule, &mut after, &forms);
        for ((token, before), after) in sentence.tokens.iter().zip(tags).zip(&after) {
            gain += i64::from(*after == token.tag) - i64::from(*before == token.tag);
        }
    }
    gain
}

/// Initial unigram annotation of a Brill model's training corpus.
pub fn initial_annotation(model: &BrillModel, train: &[Sentence]) -> Vec<Vec<String>> {
    train
        .iter()
        .map(|s| {
            s.forms()
                .iter()
                .map(|f| model.initial().tag_one(f).to_string())
                .collect()
        })
        .collect()
}

/// The corpus where "PART→TO before a VERB" fixes 5 errors and breaks none.
pub fn part_to_corpus() -> Vec<Sentence> {
    let mut out = Vec::new();
    for verb in ["go", "eat", "sleep", "swim", "read"] {
        out.push(Sentence::from_pairs(&format!(
            "I/PRON want/VERB to/TO {verb}/VERB ./PUNCT"
        )));
    }
    for noun in ["school", "work", "town", "bed", "church", "sea"] {
        out.push(Sentence::from_pairs(&format!(
            "I/PRON went/VERB to/PART {noun}/NOUN ./PUNCT"
        )));
    }
    out
}

/// Token errors of `tags` against the gold corpus.
pub fn errors(train: &[Sentence], predicted: &[Vec<usize>], tagset: &TagSet) -> usize {
    train
        .iter()
        .zip(predicted)
        .map(|(s, p)| {
            s.tokens
                .iter()
                .zip(p)
                .filter(|(t, &i)| tagset.label(i) != t.tag)
                .count()
        })
        .sum()
}
