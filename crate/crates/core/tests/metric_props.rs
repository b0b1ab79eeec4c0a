//! Accuracy and size metric properties.

use std::path::PathBuf;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tagmark_core::metrics::{
    accuracy, compressed_size, model_size, sentence_accuracy, token_accuracy,
};
use tagmark_core::taggers::{BrillConfig, HmmConfig, TntConfig};
use tagmark_core::BuiltinSpec;

mod oracles;

fn labelled() -> impl Strategy<Value = Vec<(Vec<String>, Vec<String>)>> {
    let tag = prop::sample::select(vec!["A".to_string(), "B".to_string(), "C".to_string()]);
    prop::collection::vec(
        (1usize..6).prop_flat_map(move |n| {
            (
                prop::collection::vec(tag.clone(), n),
                prop::collection::vec(tag.clone(), n),
            )
        }),
        1..12,
    )
}

proptest! {
    #[test]
    fn accuracy_is_permutation_invariant(pairs in labelled(), seed in any::<u64>()) {
        let (gold, pred): (Vec<_>, Vec<_>) = pairs.iter().cloned().unzip();
        let before = accuracy(&gold, &pred).unwrap();
        let mut shuffled = pairs.clone();
        use rand::seq::SliceRandom;
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let (gold2, pred2): (Vec<_>, Vec<_>) = shuffled.into_iter().unzip();
        let after = accuracy(&gold2, &pred2).unwrap();
        prop_assert_eq!(before.token_count, after.token_count);
        prop_assert!((before.token_accuracy - after.token_accuracy).abs() < 1e-12);
        prop_assert!((before.sentence_accuracy - after.sentence_accuracy).abs() < 1e-12);
    }

    #[test]
    fn identity_scores_one(pairs in labelled()) {
        let gold: Vec<Vec<String>> = pairs.into_iter().map(|(g, _)| g).collect();
        prop_assert_eq!(token_accuracy(&gold, &gold).unwrap(), 1.0);
        prop_assert_eq!(sentence_accuracy(&gold, &gold).unwrap(), 1.0);
    }

    #[test]
    fn model_size_is_additive(lengths in prop::collection::vec(0usize..5000, 1..6)) {
        let dir = tempfile::tempdir().unwrap();
        let paths: Vec<PathBuf> = lengths
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                let p = dir.path().join(format!("f{i}"));
                std::fs::write(&p, vec![b'x'; n]).unwrap();
                p
            })
            .collect();
        let whole = model_size(&paths).unwrap();
        let parts: f64 = paths.iter().map(|p| model_size(std::slice::from_ref(p)).unwrap()).sum();
        prop_assert!((whole - parts).abs() < 1e-9);
        prop_assert!((whole - lengths.iter().sum::<usize>() as f64 / 1000.0).abs() < 1e-9);
    }
}

#[test]
fn plain_text_models_compress_below_container_overhead() {
    let train = oracles::synthetic_corpus(&mut ChaCha8Rng::seed_from_u64(51), 300);
    for spec in [
        BuiltinSpec::Unigram,
        BuiltinSpec::Hmm(HmmConfig::default()),
        BuiltinSpec::Tnt(TntConfig::default()),
        BuiltinSpec::Brill(BrillConfig::default()),
    ] {
        let dir = tempfile::tempdir().unwrap();
        let files = spec
            .train(&train, &[])
            .unwrap()
            .serialize(dir.path())
            .unwrap();
        let raw = model_size(&files).unwrap();
        let xz = compressed_size(&files, 6).unwrap();
        assert!(xz <= raw + 1.0, "{}: {xz} kB vs {raw} kB", spec.kind());
    }
}
