//! Brill training against brute-force rule scoring.

mod oracles;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tagmark_core::corpus::Sentence;
use tagmark_core::taggers::{brill_train, RuleContext, Template};

#[test]
fn part_to_rule_is_learned_first_with_gain_5() {
    let train = oracles::part_to_corpus();
    let model = brill_train(&train, 1, 10).unwrap();
    assert_eq!(model.initial().tag_one("to"), "PART");

    let current = oracles::initial_annotation(&model, &train);
    let scored: Vec<_> = oracles::all_rules(&train)
        .into_iter()
        .map(|r| (oracles::rule_gain(&r, &train, &current), r))
        .collect();
    let best = scored.iter().map(|(g, _)| *g).max().unwrap();
    assert_eq!(best, 5);
    // ties go to the earliest template
    let first_template = scored
        .iter()
        .filter(|(g, _)| *g == best)
        .map(|(_, r)| r.template)
        .min()
        .unwrap();
    assert_eq!(first_template, Template::NextTag);

    let first = &model.rules()[0];
    assert_eq!(model.gains()[0], 5);
    assert_eq!(first.template, Template::NextTag);
    assert_eq!((first.from.as_str(), first.to.as_str()), ("PART", "TO"));
    assert_eq!(first.context, RuleContext::Tag(Some("VERB".into())));
    assert_eq!(oracles::rule_gain(first, &train, &current), 5);
}

#[test]
fn first_rule_gain_matches_brute_force_on_random_corpora() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for case in 0..15 {
        let train = oracles::synthetic_corpus(&mut rng, 12);
        let model = brill_train(&train, 1, 1).unwrap();
        let current = oracles::initial_annotation(&model, &train);
        let best = oracles::all_rules(&train)
            .iter()
            .map(|r| oracles::rule_gain(r, &train, &current))
            .max()
            .unwrap();
        if best < 1 {
            assert_eq!(model.num_rules(), 0, "case {case}");
            continue;
        }
        assert_eq!(model.num_rules(), 1, "case {case}");
        assert_eq!(i64::from(model.gains()[0]), best, "case {case}");
        assert_eq!(
            oracles::rule_gain(&model.rules()[0], &train, &current),
            best,
            "case {case}"
        );
    }
}

#[test]
fn every_learned_gain_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let train = oracles::synthetic_corpus(&mut rng, 300);
    let model = brill_train(&train, 1, 60).unwrap();
    assert!(model.num_rules() > 0);
    let mut current = oracles::initial_annotation(&model, &train);
    for (i, rule) in model.rules().iter().enumerate() {
        assert_eq!(
            oracles::rule_gain(rule, &train, &current),
            i64::from(model.gains()[i]),
            "rule {i}: {rule}"
        );
        for (sentence, tags) in train.iter().zip(current.iter_mut()) {
            oracles::apply_rule(rule, tags, &sentence.forms());
        }
    }
}

#[test]
fn training_error_is_non_increasing() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let train = oracles::synthetic_corpus(&mut rng, 400);
    let model = brill_train(&train, 1, 100).unwrap();
    let mut previous = usize::MAX;
    for k in 0..=model.num_rules() {
        let prefix = model.truncated(k);
        let predicted: Vec<Vec<usize>> = train.iter().map(|s| prefix.decode(&s.forms())).collect();
        let errors = oracles::errors(&train, &predicted, model.tagset());
        assert!(
            errors <= previous,
            "error rose after rule {k}: {errors} > {previous}"
        );
        previous = errors;
    }
}

#[test]
fn unambiguous_corpus_learns_no_rules() {
    let train: Vec<Sentence> = (0..20)
        .map(|_| Sentence::from_pairs("the/DET dog/NOUN runs/VERB ./PUNCT"))
        .collect();
    assert_eq!(brill_train(&train, 1, 100).unwrap().num_rules(), 0);
}
