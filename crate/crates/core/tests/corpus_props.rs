//! Corpus parsing and curation on fixtures, plus parser properties.

mod oracles;

use std::collections::HashMap;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tagmark_core::corpus::{curate, parse_conllu_str, write_conllu, CurationOptions};
use tagmark_core::taggers::train_unigram;
use tagmark_core::TagSet;

fn conllu(sentences: &[Vec<(&str, &str)>]) -> String {
    let mut out = String::new();
    for (k, rows) in sentences.iter().enumerate() {
        out += &format!("# sent_id = {k}\n");
        for (i, (form, tag)) in rows.iter().enumerate() {
            out += &format!("{}\t{form}\t_\t{tag}\t_\t_\t_\t_\t_\t_\n", i + 1);
        }
        out.push('\n');
    }
    out
}

#[test]
fn curation_drops_exactly_the_placeholder_tokens() {
    let mut sentences: Vec<Vec<(&str, &str)>> = (0..10)
        .map(|_| vec![("the", "DET"), ("dog", "NOUN"), ("barks", "VERB")])
        .collect();
    sentences[3][1].1 = "_";
    sentences[7][0].1 = "_";
    let parsed = parse_conllu_str(&conllu(&sentences)).unwrap();
    assert_eq!(parsed.iter().map(|s| s.len()).sum::<usize>(), 30);
    let curated = curate(parsed, &CurationOptions::default());
    assert_eq!(curated.len(), 10);
    assert_eq!(curated.iter().map(|s| s.len()).sum::<usize>(), 28);
    assert!(curated.iter().flat_map(|s| &s.tokens).all(|t| t.tag != "_"));
}

#[test]
fn unigram_lexicon_matches_frequency_table() {
    let train = oracles::synthetic_corpus(&mut ChaCha8Rng::seed_from_u64(41), 50);
    let tagset = TagSet::from_sentences(&train);
    let mut table: HashMap<&str, Vec<usize>> = HashMap::new();
    for token in train.iter().flat_map(|s| &s.tokens) {
        table
            .entry(&token.form)
            .or_insert_with(|| vec![0; tagset.len()])[tagset.index_of(&token.tag).unwrap()] += 1;
    }
    let model = train_unigram(&train).unwrap();
    assert_eq!(model.lexicon_len(), table.len());
    for (form, counts) in &table {
        let max = *counts.iter().max().unwrap();
        let expected = tagset.label(counts.iter().position(|&c| c == max).unwrap());
        assert_eq!(model.lookup(form), Some(expected), "{form}: {counts:?}");
    }
}

fn arb_token() -> impl Strategy<Value = (String, String)> {
    (
        "[a-z]{1,5}",
        prop::sample::select(vec!["NOUN", "VERB", "DET", "_"]),
    )
        .prop_map(|(f, t)| (f, t.to_string()))
}

proptest! {
    /// Range and empty-node lines never surface as tokens.
    #[test]
    fn parse_never_yields_range_tokens(
        sentences in prop::collection::vec(prop::collection::vec((arb_token(), any::<bool>(), any::<bool>()), 1..6), 1..5)
    ) {
        let mut text = String::new();
        let mut expected = Vec::new();
        for sentence in &sentences {
            let mut forms = Vec::new();
            for (i, ((form, tag), range, empty)) in sentence.iter().enumerate() {
                let id = i + 1;
                if *range && id < sentence.len() {
                    text += &format!("{id}-{}\t{form}{form}\t_\t_\t_\t_\t_\t_\t_\t_\n", id + 1);
                }
                text += &format!("{id}\t{form}\t_\t{tag}\t_\t_\t_\t_\t_\t_\n");
                if *empty {
                    text += &format!("{id}.1\tghost\t_\tNOUN\t_\t_\t_\t_\t_\t_\n");
                }
                forms.push(form.clone());
            }
            text.push('\n');
            expected.push(forms);
        }
        let parsed = parse_conllu_str(&text).unwrap();
        let forms: Vec<Vec<String>> = parsed.iter().map(|s| s.tokens.iter().map(|t| t.form.clone()).collect()).collect();
        prop_assert_eq!(forms, expected);
        // writing and re-parsing is lossless
        let mut again = Vec::new();
        write_conllu(&mut again, &parsed).unwrap();
        prop_assert_eq!(parse_conllu_str(std::str::from_utf8(&again).unwrap()).unwrap(), parsed);
    }
}
