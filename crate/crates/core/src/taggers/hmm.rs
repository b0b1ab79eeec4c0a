//! First-order HMM tagger with add-α smoothing and log-space Viterbi decoding.
//!
//! Unknown forms emit a single UNK symbol whose per-tag count is the number of
//! hapax legomena carrying that tag. Emission rows therefore range over the
//! training vocabulary plus UNK:
//!
//! ```text
//! P(w | t)   = (c(w, t) + α) / (c(t) + h(t) + α(|V| + 1))
//! P(UNK | t) = (h(t) + α)    / (c(t) + h(t) + α(|V| + 1))
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::format::{self, format_error, Reader};
use super::{log_prob, quantize, Score, Tagger, TaggerError, TaggerKind, UNDETERMINED_LANGUAGE};
use crate::corpus::{Sentence, TagSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HmmConfig {
    /// Additive smoothing on initial, transition and emission counts.
    pub alpha: f64,
}

impl Default for HmmConfig {
    fn default() -> Self {
        HmmConfig { alpha: 0.001 }
    }
}

#[derive(Debug, Clone)]
pub struct HmmModel {
    pub language: String,
    config: HmmConfig,
    tagset: TagSet,
    initial_counts: Vec<u64>,
    transition_counts: Vec<u64>,
    words: Vec<String>,
    vocab: HashMap<String, usize>,
    emission_counts: Vec<Vec<(usize, u64)>>,
    unk_counts: Vec<u64>,

    log_initial: Vec<f64>,
    log_transition: Vec<f64>,
    /// `(words + 1) × tags`, last row is UNK.
    log_emission: Vec<f64>,
    /// Quantized copies of the three tables above, used for decoding.
    score_initial: Vec<Score>,
    score_transition: Vec<Score>,
    score_emission: Vec<Score>,
}

pub fn hmm_train(train: &[Sentence]) -> Result<HmmModel, TaggerError> {
    hmm_train_with(train, &HmmConfig::default())
}

pub fn hmm_train_with(train: &[Sentence], config: &HmmConfig) -> Result<HmmModel, TaggerError> {
    if !(config.alpha >= 0.0 && config.alpha.is_finite()) {
        return Err(TaggerError::InvalidConfig(format!(
            "alpha must be >= 0, got {}",
            config.alpha
        )));
    }
    let tagset = TagSet::from_sentences(train);
    if tagset.is_empty() {
        return Err(TaggerError::EmptyCorpus);
    }
    let n = tagset.len();
    let mut initial_counts = vec![0u64; n];
    let mut transition_counts = vec![0u64; n * n];
    let mut per_form: HashMap<&str, Vec<u64>> = HashMap::new();

    for sentence in train.iter().filter(|s| !s.is_empty()) {
        let mut prev: Option<usize> = None;
        for token in &sentence.tokens {
            let t = tagset
                .index_of(&token.tag)
                .expect("tagset built from corpus");
            match prev {
                None => initial_counts[t] += 1,
                Some(s) => transition_counts[s * n + t] += 1,
            }
            per_form.entry(&token.form).or_insert_with(|| vec![0; n])[t] += 1;
            prev = Some(t);
        }
    }

    let mut forms: Vec<&str> = per_form.keys().copied().collect();
    forms.sort_unstable();
    let mut unk_counts = vec![0u64; n];
    let mut emission_counts = Vec::with_capacity(forms.len());
    for form in &forms {
        let counts = &per_form[form];
        let sparse: Vec<(usize, u64)> = counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(t, &c)| (t, c))
            .collect();
        if counts.iter().sum::<u64>() == 1 {
            unk_counts[sparse[0].0] += 1;
        }
        emission_counts.push(sparse);
    }
    let words: Vec<String> = forms.into_iter().map(str::to_string).collect();
    Ok(HmmModel::from_counts(
        config.clone(),
        tagset,
        initial_counts,
        transition_counts,
        words,
        emission_counts,
        unk_counts,
    ))
}

fn smoothed(count: u64, total: u64, alpha: f64, bins: usize) -> f64 {
    let denominator = total as f64 + alpha * bins as f64;
    if denominator > 0.0 {
        (count as f64 + alpha) / denominator
    } else {
        0.0
    }
}

impl HmmModel {
    fn from_counts(
        config: HmmConfig,
        tagset: TagSet,
        initial_counts: Vec<u64>,
        transition_counts: Vec<u64>,
        words: Vec<String>,
        emission_counts: Vec<Vec<(usize, u64)>>,
        unk_counts: Vec<u64>,
    ) -> Self {
        let vocab = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        let mut model = HmmModel {
            language: UNDETERMINED_LANGUAGE.to_string(),
            config,
            tagset,
            initial_counts,
            transition_counts,
            words,
            vocab,
            emission_counts,
            unk_counts,
            log_initial: Vec::new(),
            log_transition: Vec::new(),
            log_emission: Vec::new(),
            score_initial: Vec::new(),
            score_transition: Vec::new(),
            score_emission: Vec::new(),
        };
        model.log_initial = model
            .initial_distribution()
            .into_iter()
            .map(log_prob)
            .collect();
        model.log_transition = (0..model.num_tags())
            .flat_map(|s| model.transition_row(s))
            .map(log_prob)
            .collect();
        let n = model.num_tags();
        let rows = model.words.len() + 1;
        let mut log_emission = vec![0.0; rows * n];
        for t in 0..n {
            for (w, p) in model.emission_row(t).into_iter().enumerate() {
                log_emission[w * n + t] = log_prob(p);
            }
        }
        model.log_emission = log_emission;
        model.score_initial = model.log_initial.iter().map(|&x| quantize(x)).collect();
        model.score_transition = model.log_transition.iter().map(|&x| quantize(x)).collect();
        model.score_emission = model.log_emission.iter().map(|&x| quantize(x)).collect();
        model
    }

    pub fn config(&self) -> &HmmConfig {
        &self.config
    }

    pub fn tagset(&self) -> &TagSet {
        &self.tagset
    }

    pub fn num_tags(&self) -> usize {
        self.tagset.len()
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.words
    }

    pub fn initial_distribution(&self) -> Vec<f64> {
        let total: u64 = self.initial_counts.iter().sum();
        let n = self.num_tags();
        self.initial_counts
            .iter()
            .map(|&c| smoothed(c, total, self.config.alpha, n))
            .collect()
    }

    pub fn transition_row(&self, from: usize) -> Vec<f64> {
        let n = self.num_tags();
        let row = &self.transition_counts[from * n..(from + 1) * n];
        let total: u64 = row.iter().sum();
        row.iter()
            .map(|&c| smoothed(c, total, self.config.alpha, n))
            .collect()
    }

    /// Emission distribution of tag `t` over the vocabulary, with UNK last.
    pub fn emission_row(&self, t: usize) -> Vec<f64> {
        let mut counts = vec![0u64; self.words.len() + 1];
        for (w, pairs) in self.emission_counts.iter().enumerate() {
            if let Ok(i) = pairs.binary_search_by_key(&t, |&(tag, _)| tag) {
                counts[w] = pairs[i].1;
            }
        }
        counts[self.words.len()] = self.unk_counts[t];
        let total: u64 = counts.iter().sum();
        counts
            .iter()
            .map(|&c| smoothed(c, total, self.config.alpha, counts.len()))
            .collect()
    }

    pub fn log_initial(&self, t: usize) -> f64 {
        self.log_initial[t]
    }

    pub fn log_transition(&self, from: usize, to: usize) -> f64 {
        self.log_transition[from * self.num_tags() + to]
    }

    fn emission_index(&self, form: &str) -> usize {
        self.vocab.get(form).copied().unwrap_or(self.words.len())
    }

    /// Log emission probability; unknown forms use the UNK symbol.
    pub fn log_emission(&self, form: &str, t: usize) -> f64 {
        self.log_emission[self.emission_index(form) * self.num_tags() + t]
    }

    /// Viterbi decode to tag indices.
    pub fn decode(&self, forms: &[&str]) -> Vec<usize> {
        let n = self.num_tags();
        let rows: Vec<usize> = forms.iter().map(|f| self.emission_index(f) * n).collect();
        viterbi(
            forms.len(),
            n,
            |t| self.score_initial[t],
            |s, t| self.score_transition[s * n + t],
            |i, t| self.score_emission[rows[i] + t],
        )
    }

    pub(crate) fn write_body(&self, out: &mut String) {
        let _ = writeln!(out, "alpha {}", self.config.alpha);
        format::write_tags(out, self.tagset.labels());
        let _ = writeln!(
            out,
            "initial\n{}",
            format::join_numbers(&self.initial_counts)
        );
        out.push_str("transitions\n");
        for row in self.transition_counts.chunks(self.num_tags()) {
            let _ = writeln!(out, "{}", format::join_numbers(row));
        }
        let _ = writeln!(out, "emissions {}", self.words.len());
        for (word, pairs) in self.words.iter().zip(&self.emission_counts) {
            out.push_str(word);
            out.push('\t');
            format::write_pairs(out, pairs);
            out.push('\n');
        }
        let _ = writeln!(out, "unk\n{}", format::join_numbers(&self.unk_counts));
        out.push_str(format::END);
        out.push('\n');
    }

    pub(crate) fn read_body(reader: &mut Reader<'_>) -> Result<Self, TaggerError> {
        let alpha: f64 = reader.keyed("alpha")?;
        let tags = format::read_tags(reader)?;
        let n = tags.len();
        let expect = |reader: &mut Reader<'_>, word: &str| -> Result<(), TaggerError> {
            let (line, text) = reader.next_line()?;
            if text != word {
                return Err(format_error(line, format!("expected `{word}`")));
            }
            Ok(())
        };
        expect(reader, "initial")?;
        let initial_counts = reader.numbers(n)?;
        expect(reader, "transitions")?;
        let mut transition_counts = Vec::with_capacity(n * n);
        for _ in 0..n {
            transition_counts.extend(reader.numbers::<u64>(n)?);
        }
        let w: usize = reader.keyed("emissions")?;
        let mut words = Vec::with_capacity(w);
        let mut emission_counts = Vec::with_capacity(w);
        for _ in 0..w {
            let (line, text) = reader.next_line()?;
            let (word, pairs) = text
                .split_once('\t')
                .ok_or_else(|| format_error(line, "expected word<TAB>pairs"))?;
            words.push(word.to_string());
            emission_counts.push(format::parse_pairs(line, pairs, n)?);
        }
        expect(reader, "unk")?;
        let unk_counts = reader.numbers(n)?;
        reader.expect_end()?;
        Ok(HmmModel::from_counts(
            HmmConfig { alpha },
            TagSet::from_ordered(tags),
            initial_counts,
            transition_counts,
            words,
            emission_counts,
            unk_counts,
        ))
    }
}

impl Tagger for HmmModel {
    fn kind(&self) -> TaggerKind {
        TaggerKind::Hmm
    }

    fn tag(&self, forms: &[&str]) -> Vec<String> {
        self.decode(forms)
            .into_iter()
            .map(|t| self.tagset.label(t).to_string())
            .collect()
    }
}

/// First-order Viterbi over fixed-point scores. Ties resolve to the lowest
/// tag index, both for the final tag and for every backpointer.
pub fn viterbi(
    len: usize,
    tags: usize,
    initial: impl Fn(usize) -> Score,
    transition: impl Fn(usize, usize) -> Score,
    emission: impl Fn(usize, usize) -> Score,
) -> Vec<usize> {
    if len == 0 || tags == 0 {
        return Vec::new();
    }
    let mut delta: Vec<Score> = (0..tags).map(|t| initial(t) + emission(0, t)).collect();
    let mut next = vec![0; tags];
    let mut back = vec![0usize; len * tags];
    for i in 1..len {
        for t in 0..tags {
            let mut best = Score::MIN;
            let mut arg = 0;
            for (s, &d) in delta.iter().enumerate() {
                let v = d + transition(s, t);
                if v > best {
                    best = v;
                    arg = s;
                }
            }
            next[t] = best + emission(i, t);
            back[i * tags + t] = arg;
        }
        std::mem::swap(&mut delta, &mut next);
    }
    let mut last = 0;
    for t in 1..tags {
        if delta[t] > delta[last] {
            last = t;
        }
    }
    let mut path = vec![0; len];
    path[len - 1] = last;
    for i in (1..len).rev() {
        path[i - 1] = back[i * tags + path[i]];
    }
    path
}
