//! Trigram HMM tagger in the style of TnT.
//!
//! Transition probabilities interpolate unigram, bigram and trigram relative
//! frequencies with weights set by deleted interpolation. Known words emit
//! from the lexicon; unknown words emit from a suffix model trained on rare
//! words, with separate suffix tables for capitalized and lower-case forms.
//! Decoding is second-order Viterbi with a bounded number of hypotheses per
//! position.
//!
//! Tag indices `0..T` are the real tags. Index `T` is the sentence boundary:
//! it means BOS when used as context and EOS when predicted.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::format::{self, format_error, Reader};
use super::{
    log_prob, quantize, Score, Tagger, TaggerError, TaggerKind, LOG_FLOOR, UNDETERMINED_LANGUAGE,
};
use crate::corpus::{Sentence, TagSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TntConfig {
    /// Longest suffix consulted for unknown words.
    pub suffix_length: usize,
    /// Words seen at most this often feed the suffix model.
    pub rare_cutoff: u64,
    /// Hypotheses kept per position; 0 keeps all of them.
    pub beam: usize,
}

impl Default for TntConfig {
    fn default() -> Self {
        TntConfig {
            suffix_length: 10,
            rare_cutoff: 10,
            beam: 1000,
        }
    }
}

impl TntConfig {
    pub fn unbounded() -> Self {
        TntConfig {
            beam: 0,
            ..TntConfig::default()
        }
    }
}

#[derive(Debug, Clone, Default)]
struct SuffixModel {
    /// Successive-abstraction distribution per suffix (length 0 included).
    probs: HashMap<String, Vec<f64>>,
}

impl SuffixModel {
    fn build<'a>(
        words: impl Iterator<Item = (&'a str, &'a [(usize, u64)])>,
        tags: usize,
        max_len: usize,
        theta: f64,
    ) -> Self {
        let mut counts: BTreeMap<(usize, String), Vec<u64>> = BTreeMap::new();
        for (word, pairs) in words {
            let chars: Vec<char> = word.chars().collect();
            for len in 0..=max_len.min(chars.len()) {
                let suffix: String = chars[chars.len() - len..].iter().collect();
                let slot = counts.entry((len, suffix)).or_insert_with(|| vec![0; tags]);
                for &(t, c) in pairs {
                    slot[t] += c;
                }
            }
        }
        let mut probs: HashMap<String, Vec<f64>> = HashMap::with_capacity(counts.len());
        // BTreeMap order visits shorter suffixes first, so parents exist.
        for ((len, suffix), c) in counts {
            let total: u64 = c.iter().sum();
            let mle: Vec<f64> = c.iter().map(|&x| x as f64 / total as f64).collect();
            let dist = if len == 0 {
                mle
            } else {
                let parent: String = suffix.chars().skip(1).collect();
                let parent = &probs[&parent];
                mle.iter()
                    .zip(parent)
                    .map(|(&p, &q)| (p + theta * q) / (1.0 + theta))
                    .collect()
            };
            probs.insert(suffix, dist);
        }
        SuffixModel { probs }
    }

    fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    fn lookup(&self, word: &str, max_len: usize) -> Option<&[f64]> {
        let chars: Vec<char> = word.chars().collect();
        (0..=max_len.min(chars.len())).rev().find_map(|len| {
            let suffix: String = chars[chars.len() - len..].iter().collect();
            self.probs.get(&suffix).map(Vec::as_slice)
        })
    }
}

fn is_capitalized(word: &str) -> bool {
    word.chars().next().is_some_and(char::is_uppercase)
}

#[derive(Debug, Clone)]
pub struct TntModel {
    pub language: String,
    config: TntConfig,
    tagset: TagSet,
    /// Length `T + 1`; index `T` counts EOS.
    unigram: Vec<u64>,
    /// `(T + 1) × (T + 1)`, context-major.
    bigram: Vec<u64>,
    /// `(T + 1)³`.
    trigram: Vec<u64>,
    lexicon: HashMap<String, Vec<(usize, u64)>>,

    lambdas: [f64; 3],
    theta: f64,
    log_trigram: Vec<f64>,
    score_trigram: Vec<Score>,
    tag_probs: Vec<f64>,
    /// `[lower-case, capitalized]`.
    suffixes: [SuffixModel; 2],
}

pub fn tnt_train(train: &[Sentence]) -> Result<TntModel, TaggerError> {
    tnt_train_with(train, &TntConfig::default())
}

pub fn tnt_train_with(train: &[Sentence], config: &TntConfig) -> Result<TntModel, TaggerError> {
    let tagset = TagSet::from_sentences(train);
    if tagset.is_empty() {
        return Err(TaggerError::EmptyCorpus);
    }
    let n = tagset.len();
    let w = n + 1;
    let mut unigram = vec![0u64; w];
    let mut bigram = vec![0u64; w * w];
    let mut trigram = vec![0u64; w * w * w];
    let mut per_form: HashMap<&str, Vec<u64>> = HashMap::new();

    for sentence in train.iter().filter(|s| !s.is_empty()) {
        let (mut a, mut b) = (n, n);
        let tags = sentence
            .tokens
            .iter()
            .map(|t| tagset.index_of(&t.tag).expect("tagset built from corpus"))
            .chain(std::iter::once(n));
        for c in tags {
            unigram[c] += 1;
            bigram[b * w + c] += 1;
            trigram[(a * w + b) * w + c] += 1;
            a = b;
            b = c;
        }
        for token in &sentence.tokens {
            let t = tagset
                .index_of(&token.tag)
                .expect("tagset built from corpus");
            per_form.entry(&token.form).or_insert_with(|| vec![0; n])[t] += 1;
        }
    }
    let lexicon = per_form
        .into_iter()
        .map(|(form, counts)| {
            let pairs = counts
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(t, &c)| (t, c))
                .collect();
            (form.to_string(), pairs)
        })
        .collect();
    Ok(TntModel::from_counts(
        config.clone(),
        tagset,
        unigram,
        bigram,
        trigram,
        lexicon,
    ))
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Deleted interpolation over dense count tables (boundary index = `w - 1`).
pub(crate) fn deleted_interpolation(unigram: &[u64], bigram: &[u64], trigram: &[u64]) -> [f64; 3] {
    let w = unigram.len();
    let total: u64 = unigram.iter().sum();
    let bigram_context: Vec<u64> = bigram.chunks(w).map(|row| row.iter().sum()).collect();
    let trigram_context: Vec<u64> = trigram.chunks(w).map(|row| row.iter().sum()).collect();
    let mut weights = [0.0f64; 3];
    for a in 0..w {
        for b in 0..w {
            for c in 0..w {
                let f = trigram[(a * w + b) * w + c];
                if f == 0 {
                    continue;
                }
                let estimates = [
                    ratio(unigram[c] as f64 - 1.0, total as f64 - 1.0),
                    ratio(
                        bigram[b * w + c] as f64 - 1.0,
                        bigram_context[b] as f64 - 1.0,
                    ),
                    ratio(f as f64 - 1.0, trigram_context[a * w + b] as f64 - 1.0),
                ];
                let best = estimates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let winners = estimates.iter().filter(|&&e| e == best).count();
                let share = f as f64 / winners as f64;
                for (weight, &e) in weights.iter_mut().zip(&estimates) {
                    if e == best {
                        *weight += share;
                    }
                }
            }
        }
    }
    let sum: f64 = weights.iter().sum();
    if sum > 0.0 {
        weights.map(|x| x / sum)
    } else {
        [1.0 / 3.0; 3]
    }
}

impl TntModel {
    fn from_counts(
        config: TntConfig,
        tagset: TagSet,
        unigram: Vec<u64>,
        bigram: Vec<u64>,
        trigram: Vec<u64>,
        lexicon: HashMap<String, Vec<(usize, u64)>>,
    ) -> Self {
        let n = tagset.len();
        let w = n + 1;
        let lambdas = deleted_interpolation(&unigram, &bigram, &trigram);
        let total: u64 = unigram.iter().sum();
        let bigram_context: Vec<u64> = bigram.chunks(w).map(|row| row.iter().sum()).collect();
        let trigram_context: Vec<u64> = trigram.chunks(w).map(|row| row.iter().sum()).collect();

        let mut log_trigram = vec![LOG_FLOOR; w * w * w];
        for a in 0..w {
            for b in 0..w {
                for c in 0..w {
                    let p = lambdas[0] * ratio(unigram[c] as f64, total as f64)
                        + lambdas[1] * ratio(bigram[b * w + c] as f64, bigram_context[b] as f64)
                        + lambdas[2]
                            * ratio(
                                trigram[(a * w + b) * w + c] as f64,
                                trigram_context[a * w + b] as f64,
                            );
                    log_trigram[(a * w + b) * w + c] = log_prob(p);
                }
            }
        }

        let tokens: u64 = unigram[..n].iter().sum();
        let tag_probs: Vec<f64> = unigram[..n]
            .iter()
            .map(|&c| ratio(c as f64, tokens as f64))
            .collect();
        let theta = if n > 1 {
            let mean = 1.0 / n as f64;
            (tag_probs
                .iter()
                .map(|p| (p - mean) * (p - mean))
                .sum::<f64>()
                / (n as f64 - 1.0))
                .sqrt()
        } else {
            0.0
        };

        let mut rare: Vec<(&str, &[(usize, u64)])> = lexicon
            .iter()
            .filter(|(_, pairs)| pairs.iter().map(|&(_, c)| c).sum::<u64>() <= config.rare_cutoff)
            .map(|(w, p)| (w.as_str(), p.as_slice()))
            .collect();
        rare.sort_unstable_by_key(|&(w, _)| w);
        let build = |capitalized: bool| {
            SuffixModel::build(
                rare.iter()
                    .copied()
                    .filter(|(w, _)| is_capitalized(w) == capitalized),
                n,
                config.suffix_length,
                theta,
            )
        };
        let suffixes = [build(false), build(true)];

        TntModel {
            language: UNDETERMINED_LANGUAGE.to_string(),
            config,
            tagset,
            unigram,
            bigram,
            trigram,
            lexicon,
            lambdas,
            theta,
            score_trigram: log_trigram.iter().map(|&x| quantize(x)).collect(),
            log_trigram,
            tag_probs,
            suffixes,
        }
    }

    pub fn config(&self) -> &TntConfig {
        &self.config
    }

    pub fn set_beam(&mut self, beam: usize) {
        self.config.beam = beam;
    }

    pub fn tagset(&self) -> &TagSet {
        &self.tagset
    }

    pub fn num_tags(&self) -> usize {
        self.tagset.len()
    }

    /// Index standing for BOS in context positions and EOS when predicted.
    pub fn boundary(&self) -> usize {
        self.tagset.len()
    }

    /// Interpolation weights `[λ1, λ2, λ3]` for unigram, bigram and trigram.
    pub fn lambdas(&self) -> [f64; 3] {
        self.lambdas
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `log P(c | a, b)`; see [`TntModel::boundary`] for the boundary index.
    pub fn log_trigram(&self, a: usize, b: usize, c: usize) -> f64 {
        let w = self.num_tags() + 1;
        self.log_trigram[(a * w + b) * w + c]
    }

    pub fn is_known(&self, form: &str) -> bool {
        self.lexicon.contains_key(form)
    }

    /// Suffix-model tag distribution used for an unknown word, if any rare
    /// words were seen in training.
    pub fn suffix_distribution(&self, form: &str) -> Option<&[f64]> {
        let primary = usize::from(is_capitalized(form));
        let table = if self.suffixes[primary].is_empty() {
            &self.suffixes[1 - primary]
        } else {
            &self.suffixes[primary]
        };
        table.lookup(form, self.config.suffix_length)
    }

    /// Per-tag log emission scores for one form.
    pub fn log_lexical(&self, form: &str) -> Vec<f64> {
        let n = self.num_tags();
        if let Some(pairs) = self.lexicon.get(form) {
            let mut out = vec![LOG_FLOOR; n];
            for &(t, c) in pairs {
                out[t] = log_prob(c as f64 / self.unigram[t] as f64);
            }
            return out;
        }
        match self.suffix_distribution(form) {
            Some(dist) => dist
                .iter()
                .zip(&self.tag_probs)
                .map(|(&p, &q)| log_prob(ratio(p, q)))
                .collect(),
            None => vec![0.0; n],
        }
    }

    fn score_trigram(&self, a: usize, b: usize, c: usize) -> Score {
        let w = self.num_tags() + 1;
        self.score_trigram[(a * w + b) * w + c]
    }

    /// Second-order Viterbi with beam pruning over fixed-point scores,
    /// returning tag indices.
    pub fn decode(&self, forms: &[&str]) -> Vec<usize> {
        const UNSET: Score = Score::MIN;
        let len = forms.len();
        let n = self.num_tags();
        if len == 0 || n == 0 {
            return Vec::new();
        }
        let bos = n;
        let states = (n + 1) * n;
        let beam = if self.config.beam == 0 {
            usize::MAX
        } else {
            self.config.beam
        };
        let emissions: Vec<Vec<Score>> = forms
            .iter()
            .map(|f| self.log_lexical(f).into_iter().map(quantize).collect())
            .collect();

        // state (b, c) lives at b * n + c
        let mut score = vec![UNSET; states];
        let mut back = vec![usize::MAX; len * states];
        let mut active: Vec<usize> = Vec::with_capacity(states);
        for (c, &emission) in emissions[0].iter().enumerate() {
            let s = bos * n + c;
            score[s] = self.score_trigram(bos, bos, c) + emission;
            active.push(s);
        }
        prune(&mut active, &score, n, beam);

        let mut next = vec![UNSET; states];
        let mut touched: Vec<usize> = Vec::with_capacity(states);
        for i in 1..len {
            let back_row = &mut back[i * states..(i + 1) * states];
            for &state in &active {
                let (a, b) = (state / n, state % n);
                for c in 0..n {
                    let candidate = score[state] + self.score_trigram(a, b, c);
                    let target = b * n + c;
                    if next[target] == UNSET {
                        touched.push(target);
                    }
                    if candidate > next[target]
                        || (candidate == next[target] && a < back_row[target])
                    {
                        next[target] = candidate;
                        back_row[target] = a;
                    }
                }
            }
            for &state in &active {
                score[state] = UNSET;
            }
            active.clear();
            for &target in &touched {
                score[target] = next[target] + emissions[i][target % n];
                next[target] = UNSET;
                active.push(target);
            }
            touched.clear();
            prune(&mut active, &score, n, beam);
        }

        let mut best: Option<(Score, usize)> = None;
        for &state in &active {
            let (b, c) = (state / n, state % n);
            let total = score[state] + self.score_trigram(b, c, bos);
            let better = match best {
                None => true,
                Some((s, prev)) => total > s || (total == s && (c, b) < (prev % n, prev / n)),
            };
            if better {
                best = Some((total, state));
            }
        }
        let (_, mut state) = best.expect("at least one active state");
        let mut path = vec![0; len];
        for i in (0..len).rev() {
            let (b, c) = (state / n, state % n);
            path[i] = c;
            if i > 0 {
                let a = back[i * states + state];
                state = a * n + b;
            }
        }
        path
    }

    pub(crate) fn write_body(&self, out: &mut String) {
        let n = self.num_tags();
        let w = n + 1;
        let _ = writeln!(out, "suffix_length {}", self.config.suffix_length);
        let _ = writeln!(out, "rare_cutoff {}", self.config.rare_cutoff);
        let _ = writeln!(out, "beam {}", self.config.beam);
        format::write_tags(out, self.tagset.labels());
        let _ = writeln!(out, "unigrams\n{}", format::join_numbers(&self.unigram));
        let bigrams: Vec<(usize, u64)> = self
            .bigram
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (i, c))
            .collect();
        let _ = writeln!(out, "bigrams {}", bigrams.len());
        for (i, c) in bigrams {
            let _ = writeln!(out, "{} {} {c}", i / w, i % w);
        }
        let trigrams: Vec<(usize, u64)> = self
            .trigram
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (i, c))
            .collect();
        let _ = writeln!(out, "trigrams {}", trigrams.len());
        for (i, c) in trigrams {
            let _ = writeln!(out, "{} {} {} {c}", i / (w * w), (i / w) % w, i % w);
        }
        let sorted: BTreeMap<&str, &Vec<(usize, u64)>> =
            self.lexicon.iter().map(|(k, v)| (k.as_str(), v)).collect();
        let _ = writeln!(out, "lexicon {}", sorted.len());
        for (word, pairs) in sorted {
            out.push_str(word);
            out.push('\t');
            format::write_pairs(out, pairs);
            out.push('\n');
        }
        out.push_str(format::END);
        out.push('\n');
    }

    pub(crate) fn read_body(reader: &mut Reader<'_>) -> Result<Self, TaggerError> {
        let config = TntConfig {
            suffix_length: reader.keyed("suffix_length")?,
            rare_cutoff: reader.keyed("rare_cutoff")?,
            beam: reader.keyed("beam")?,
        };
        let tags = format::read_tags(reader)?;
        let n = tags.len();
        let w = n + 1;
        let (line, text) = reader.next_line()?;
        if text != "unigrams" {
            return Err(format_error(line, "expected `unigrams`"));
        }
        let unigram = reader.numbers(w)?;

        let mut read_sparse = |name: &str, order: usize| -> Result<Vec<u64>, TaggerError> {
            let count: usize = reader.keyed(name)?;
            let mut table = vec![0u64; w.pow(order as u32)];
            for _ in 0..count {
                let (line, text) = reader.next_line()?;
                let values: Vec<u64> = format::parse_numbers(line, text)?;
                if values.len() != order + 1 || values[..order].iter().any(|&i| i as usize >= w) {
                    return Err(format_error(line, format!("bad {name} entry")));
                }
                let index = values[..order]
                    .iter()
                    .fold(0usize, |acc, &i| acc * w + i as usize);
                table[index] = values[order];
            }
            Ok(table)
        };
        let bigram = read_sparse("bigrams", 2)?;
        let trigram = read_sparse("trigrams", 3)?;

        let count: usize = reader.keyed("lexicon")?;
        let mut lexicon = HashMap::with_capacity(count);
        for _ in 0..count {
            let (line, text) = reader.next_line()?;
            let (word, pairs) = text
                .split_once('\t')
                .ok_or_else(|| format_error(line, "expected word<TAB>pairs"))?;
            lexicon.insert(word.to_string(), format::parse_pairs(line, pairs, n)?);
        }
        reader.expect_end()?;
        Ok(TntModel::from_counts(
            config,
            TagSet::from_ordered(tags),
            unigram,
            bigram,
            trigram,
            lexicon,
        ))
    }
}

/// Keeps the `beam` best states; ties prefer lower `(c, b)`.
fn prune(active: &mut Vec<usize>, score: &[Score], n: usize, beam: usize) {
    if active.len() <= beam {
        return;
    }
    active.sort_by(|&x, &y| {
        score[y]
            .cmp(&score[x])
            .then_with(|| (x % n, x / n).cmp(&(y % n, y / n)))
    });
    active.truncate(beam);
}

impl Tagger for TntModel {
    fn kind(&self) -> TaggerKind {
        TaggerKind::Tnt
    }

    fn tag(&self, forms: &[&str]) -> Vec<String> {
        self.decode(forms)
            .into_iter()
            .map(|t| self.tagset.label(t).to_string())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(lines: &[&str]) -> Vec<Sentence> {
        lines.iter().map(|l| Sentence::from_pairs(l)).collect()
    }

    #[test]
    fn lambdas_sum_to_one() {
        let model = tnt_train(&corpus(&[
            "the/DET dog/NOUN runs/VERB ./PUNCT",
            "a/DET cat/NOUN sleeps/VERB",
            "dogs/NOUN run/VERB",
        ]))
        .unwrap();
        let l = model.lambdas();
        assert!((l.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(l.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn suffix_distributions_sum_to_one() {
        let model = tnt_train(&corpus(&[
            "walking/VERB fast/ADV",
            "Paris/PROPN is/AUX big/ADJ",
            "talked/VERB slowly/ADV",
        ]))
        .unwrap();
        for table in &model.suffixes {
            for dist in table.probs.values() {
                assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn capitalized_words_use_their_own_suffix_table() {
        let model = tnt_train(&corpus(&["Anna/PROPN saw/VERB bob/NOUN"])).unwrap();
        let propn = model.tagset().index_of("PROPN").unwrap();
        let dist = model.suffix_distribution("Xyz").unwrap();
        assert_eq!(dist[propn], 1.0);
    }

    #[test]
    fn deterministic_corpus_recovers_gold() {
        let train = corpus(&["the/DET dog/NOUN barks/VERB", "a/DET cat/NOUN sleeps/VERB"]);
        let model = tnt_train(&train).unwrap();
        for s in &train {
            assert_eq!(model.tag(&s.forms()), s.tags());
        }
    }

    #[test]
    fn empty_corpus_is_error() {
        assert!(matches!(tnt_train(&[]), Err(TaggerError::EmptyCorpus)));
    }
}
