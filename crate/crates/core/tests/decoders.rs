//! Viterbi decoders against exhaustive enumeration, and TnT's deleted
//! interpolation against a hand trace.

mod oracles;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tagmark_core::corpus::Sentence;
use tagmark_core::taggers::tnt::TntConfig;
use tagmark_core::taggers::{hmm_train, tnt::tnt_train_with, Tagger};

#[test]
fn hmm_matches_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..500 {
        let (train, sentence) = oracles::random_decoder_case(&mut rng);
        let model = hmm_train(&train).unwrap();
        let forms: Vec<&str> = sentence.iter().map(String::as_str).collect();
        assert_eq!(
            model.decode(&forms),
            oracles::brute_hmm(&model, &forms),
            "case {case}: {forms:?}"
        );
    }
}

#[test]
fn tnt_matches_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let config = TntConfig::unbounded();
    for case in 0..500 {
        let (train, sentence) = oracles::random_decoder_case(&mut rng);
        let model = tnt_train_with(&train, &config).unwrap();
        let forms: Vec<&str> = sentence.iter().map(String::as_str).collect();
        assert_eq!(
            model.decode(&forms),
            oracles::brute_tnt(&model, &forms),
            "case {case}: {forms:?}"
        );
    }
}

#[test]
fn default_beam_never_prunes_small_tagsets() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..100 {
        let (train, sentence) = oracles::random_decoder_case(&mut rng);
        let bounded = tnt_train_with(&train, &TntConfig::default()).unwrap();
        let unbounded = tnt_train_with(&train, &TntConfig::unbounded()).unwrap();
        let forms: Vec<&str> = sentence.iter().map(String::as_str).collect();
        assert_eq!(bounded.decode(&forms), unbounded.decode(&forms));
    }
}

#[test]
fn deleted_interpolation_hand_trace() {
    // Tag sequences with boundaries: B B X Y E (twice) and B B Y E.
    // unigram X:2 Y:3 E:3 (N = 8); bigram BX:2 XY:2 YE:3 BY:1;
    // trigram BBX:2 BXY:2 XYE:2 BBY:1 BYE:1.
    //   BBX f=2: uni 1/7, bi 1/2, tri 1/2  -> tie, bi +1 tri +1
    //   BXY f=2: uni 2/7, bi 1,   tri 1    -> tie, bi +1 tri +1
    //   XYE f=2: uni 2/7, bi 1,   tri 1    -> tie, bi +1 tri +1
    //   BBY f=1: uni 2/7, bi 0,   tri 0    -> uni +1
    //   BYE f=1: uni 2/7, bi 1,   tri 0/0  -> bi +1
    // weights 1 : 4 : 3
    let train: Vec<Sentence> = ["a/X b/Y", "a/X b/Y", "c/Y"]
        .iter()
        .map(|s| Sentence::from_pairs(s))
        .collect();
    let model = tnt_train_with(&train, &TntConfig::default()).unwrap();
    let [l1, l2, l3] = model.lambdas();
    assert!((l1 - 1.0 / 8.0).abs() < 1e-12, "{l1}");
    assert!((l2 - 4.0 / 8.0).abs() < 1e-12, "{l2}");
    assert!((l3 - 3.0 / 8.0).abs() < 1e-12, "{l3}");
}

proptest! {
    #[test]
    fn taggers_emit_one_tag_per_token(seed in any::<u64>(), forms in prop::collection::vec("[a-zA-Z]{1,6}", 0..12)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let train = oracles::synthetic_corpus(&mut rng, 20);
        let forms: Vec<&str> = forms.iter().map(String::as_str).collect();
        let hmm = hmm_train(&train).unwrap();
        let tnt = tnt_train_with(&train, &TntConfig::default()).unwrap();
        prop_assert_eq!(hmm.tag(&forms).len(), forms.len());
        prop_assert_eq!(tnt.tag(&forms).len(), forms.len());
    }
}
