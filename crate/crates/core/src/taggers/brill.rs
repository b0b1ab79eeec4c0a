//! Transformation-based (Brill) tagger.
//!
//! A unigram annotator provides initial tags; an ordered list of rewrite
//! rules then corrects them. Each rule changes `from` to `to` at positions
//! whose context matches one of the templates below. Within one rule's pass,
//! triggers are evaluated against the tags as they were when the pass began,
//! and all matching positions are then rewritten together.
//!
//! Training is greedy: the rule with the largest net error reduction on the
//! current annotation is learned and applied, until the best gain drops below
//! the threshold or `max_rules` is reached. Candidate scores are maintained
//! incrementally; after a rule fires only positions within the ±3 window of
//! a rewrite have their contributions recomputed.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap, HashSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::format::{self, format_error, Reader};
use super::unigram::{self, train_unigram, UnigramModel};
use super::{Tagger, TaggerError, TaggerKind, UNDETERMINED_LANGUAGE};
use crate::corpus::{Sentence, TagSet};

/// Largest offset any template looks at.
pub const WINDOW: usize = 3;

const BOUNDARY_TAG: u16 = u16::MAX;
const BOUNDARY_WORD: u32 = u32::MAX;
const UNKNOWN_WORD: u32 = u32::MAX - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Template {
    PrevTag,
    NextTag,
    Prev2Tag,
    Next2Tag,
    AnyPrev2,
    AnyNext2,
    AnyPrev3,
    AnyNext3,
    Surrounding,
    PrevBigram,
    NextBigram,
    PrevWord,
    NextWord,
}

impl Template {
    pub const ALL: [Template; 13] = [
        Template::PrevTag,
        Template::NextTag,
        Template::Prev2Tag,
        Template::Next2Tag,
        Template::AnyPrev2,
        Template::AnyNext2,
        Template::AnyPrev3,
        Template::AnyNext3,
        Template::Surrounding,
        Template::PrevBigram,
        Template::NextBigram,
        Template::PrevWord,
        Template::NextWord,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Template::PrevTag => "prev-tag",
            Template::NextTag => "next-tag",
            Template::Prev2Tag => "prev2-tag",
            Template::Next2Tag => "next2-tag",
            Template::AnyPrev2 => "any-prev2",
            Template::AnyNext2 => "any-next2",
            Template::AnyPrev3 => "any-prev3",
            Template::AnyNext3 => "any-next3",
            Template::Surrounding => "surrounding",
            Template::PrevBigram => "prev-bigram",
            Template::NextBigram => "next-bigram",
            Template::PrevWord => "prev-word",
            Template::NextWord => "next-word",
        }
    }

    fn id(self) -> u8 {
        self as u8
    }

    pub fn is_lexical(self) -> bool {
        matches!(self, Template::PrevWord | Template::NextWord)
    }

    pub fn is_pair(self) -> bool {
        matches!(
            self,
            Template::Surrounding | Template::PrevBigram | Template::NextBigram
        )
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Template {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Template::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown template {s:?}"))
    }
}

/// Rule context; `None` is the sentence boundary.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RuleContext {
    Tag(Option<String>),
    TagPair(Option<String>, Option<String>),
    Word(Option<String>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BrillRule {
    pub template: Template,
    pub from: String,
    pub to: String,
    pub context: RuleContext,
}

impl fmt::Display for BrillRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |v: &Option<String>| v.clone().unwrap_or_else(|| "<S>".to_string());
        write!(f, "{} -> {} if {}", self.from, self.to, self.template)?;
        match &self.context {
            RuleContext::Tag(t) | RuleContext::Word(t) => write!(f, " {}", show(t)),
            RuleContext::TagPair(a, b) => write!(f, " {} {}", show(a), show(b)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BrillConfig {
    /// Minimum net gain for a rule to be learned.
    pub threshold: u32,
    pub max_rules: usize,
    /// When non-empty, the threshold is chosen from these by dev accuracy.
    pub dev_thresholds: Vec<u32>,
    pub templates: Vec<Template>,
}

impl Default for BrillConfig {
    fn default() -> Self {
        BrillConfig {
            threshold: 2,
            max_rules: 500,
            dev_thresholds: Vec::new(),
            templates: Template::ALL.to_vec(),
        }
    }
}

/// Rule in index space. Field order defines the tie-breaking order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Compiled {
    template: Template,
    from: u16,
    to: u16,
    ctx: u32,
}

impl Compiled {
    fn key(self) -> u64 {
        key_of(self.template, self.from, self.ctx)
    }
}

fn key_of(template: Template, from: u16, ctx: u32) -> u64 {
    (u64::from(template.id()) << 48) | (u64::from(from) << 32) | u64::from(ctx)
}

fn unpack_key(key: u64) -> (Template, u16, u32) {
    let template = Template::ALL[(key >> 48) as usize];
    (template, (key >> 32) as u16, key as u32)
}

fn pair(a: u16, b: u16) -> u32 {
    (u32::from(a) << 16) | u32::from(b)
}

/// Context values a template yields at one position (deduplicated).
#[derive(Default)]
struct Contexts {
    values: [u32; 3],
    len: usize,
}

impl Contexts {
    fn push(&mut self, v: u32) {
        if !self.values[..self.len].contains(&v) {
            self.values[self.len] = v;
            self.len += 1;
        }
    }

    fn as_slice(&self) -> &[u32] {
        &self.values[..self.len]
    }
}

fn contexts(template: Template, tags: &[u16], words: &[u32], i: usize) -> Contexts {
    let tag = |offset: isize| -> u16 {
        let j = i as isize + offset;
        if j >= 0 && (j as usize) < tags.len() {
            tags[j as usize]
        } else {
            BOUNDARY_TAG
        }
    };
    let word = |offset: isize| -> u32 {
        let j = i as isize + offset;
        if j >= 0 && (j as usize) < words.len() {
            words[j as usize]
        } else {
            BOUNDARY_WORD
        }
    };
    let mut out = Contexts::default();
    match template {
        Template::PrevTag => out.push(u32::from(tag(-1))),
        Template::NextTag => out.push(u32::from(tag(1))),
        Template::Prev2Tag => out.push(u32::from(tag(-2))),
        Template::Next2Tag => out.push(u32::from(tag(2))),
        Template::AnyPrev2 => (1..=2).for_each(|k| out.push(u32::from(tag(-k)))),
        Template::AnyNext2 => (1..=2).for_each(|k| out.push(u32::from(tag(k)))),
        Template::AnyPrev3 => (1..=3).for_each(|k| out.push(u32::from(tag(-k)))),
        Template::AnyNext3 => (1..=3).for_each(|k| out.push(u32::from(tag(k)))),
        Template::Surrounding => out.push(pair(tag(-1), tag(1))),
        Template::PrevBigram => out.push(pair(tag(-2), tag(-1))),
        Template::NextBigram => out.push(pair(tag(1), tag(2))),
        Template::PrevWord => out.push(word(-1)),
        Template::NextWord => out.push(word(1)),
    }
    out
}

/// Positions where `rule` fires, judged on `tags` as given.
fn firing_positions(rule: Compiled, tags: &[u16], words: &[u32]) -> Vec<usize> {
    (0..tags.len())
        .filter(|&i| {
            tags[i] == rule.from
                && contexts(rule.template, tags, words, i)
                    .as_slice()
                    .contains(&rule.ctx)
        })
        .collect()
}

fn apply_compiled(rule: Compiled, tags: &mut [u16], words: &[u32]) -> Vec<usize> {
    let fired = firing_positions(rule, tags, words);
    for &i in &fired {
        tags[i] = rule.to;
    }
    fired
}

#[derive(Debug, Clone)]
pub struct BrillModel {
    pub language: String,
    tagset: TagSet,
    initial: UnigramModel,
    rules: Vec<Compiled>,
    gains: Vec<u32>,
    words: Vec<String>,
    word_ids: HashMap<String, u32>,
}

pub fn brill_train(
    train: &[Sentence],
    threshold: u32,
    max_rules: usize,
) -> Result<BrillModel, TaggerError> {
    brill_train_with(
        train,
        &BrillConfig {
            threshold,
            max_rules,
            ..BrillConfig::default()
        },
    )
}

pub fn brill_train_with(
    train: &[Sentence],
    config: &BrillConfig,
) -> Result<BrillModel, TaggerError> {
    if config.threshold < 1 {
        return Err(TaggerError::InvalidConfig(
            "brill threshold must be >= 1".into(),
        ));
    }
    let initial = train_unigram(train)?;
    let tagset = TagSet::from_sentences(train);
    let mut trainer = Trainer::new(train, &tagset, &initial, &config.templates);
    let (rules, gains) = trainer.run(config.threshold, config.max_rules);
    let vocab = trainer.vocab;
    Ok(BrillModel::from_compiled(
        tagset, initial, rules, gains, &vocab,
    ))
}

/// Trains at the lowest candidate threshold and keeps the rule prefix whose
/// threshold scores best on `dev` (ties prefer the higher threshold).
pub fn brill_train_with_dev(
    train: &[Sentence],
    dev: &[Sentence],
    config: &BrillConfig,
) -> Result<BrillModel, TaggerError> {
    if config.dev_thresholds.is_empty() || dev.is_empty() {
        return brill_train_with(train, config);
    }
    let mut candidates: Vec<u32> = config.dev_thresholds.clone();
    candidates.sort_unstable();
    candidates.dedup();
    if candidates[0] < 1 {
        return Err(TaggerError::InvalidConfig(
            "brill dev thresholds must be >= 1".into(),
        ));
    }
    let lowest = BrillConfig {
        threshold: candidates[0],
        ..config.clone()
    };
    let full = brill_train_with(train, &lowest)?;
    let mut best: Option<(usize, usize)> = None;
    for &threshold in &candidates {
        let keep = full.gains.iter().take_while(|&&g| g >= threshold).count();
        let correct = full.truncated(keep).count_correct(dev);
        if best.is_none_or(|(c, _)| correct >= c) {
            best = Some((correct, keep));
        }
    }
    let (_, keep) = best.expect("candidates non-empty");
    Ok(full.truncated(keep))
}

struct SentenceState {
    words: Vec<u32>,
    gold: Vec<u16>,
    tags: Vec<u16>,
}

struct Trainer<'a> {
    sentences: Vec<SentenceState>,
    templates: &'a [Template],
    vocab: Vec<String>,
    /// Error positions per (template, from, ctx), split by gold tag.
    fixes: HashMap<u64, Vec<(u16, i32)>>,
    /// Correct positions per (template, from, ctx).
    breaks: HashMap<u64, i32>,
    heap: BinaryHeap<(i32, Reverse<Compiled>)>,
}

impl<'a> Trainer<'a> {
    fn new(
        train: &[Sentence],
        tagset: &TagSet,
        initial: &UnigramModel,
        templates: &'a [Template],
    ) -> Self {
        let forms: BTreeSet<&str> = train
            .iter()
            .flat_map(|s| s.tokens.iter().map(|t| t.form.as_str()))
            .collect();
        let vocab: Vec<String> = forms.into_iter().map(str::to_string).collect();
        let ids: HashMap<&str, u32> = vocab
            .iter()
            .enumerate()
            .map(|(i, w)| (w.as_str(), i as u32))
            .collect();
        let index = |tag: &str| tagset.index_of(tag).expect("training tag") as u16;
        let sentences = train
            .iter()
            .filter(|s| !s.is_empty())
            .map(|s| SentenceState {
                words: s.tokens.iter().map(|t| ids[t.form.as_str()]).collect(),
                gold: s.tokens.iter().map(|t| index(&t.tag)).collect(),
                tags: s
                    .tokens
                    .iter()
                    .map(|t| index(initial.tag_one(&t.form)))
                    .collect(),
            })
            .collect();
        let mut trainer = Trainer {
            sentences,
            templates,
            vocab,
            fixes: HashMap::new(),
            breaks: HashMap::new(),
            heap: BinaryHeap::new(),
        };
        let mut touched = HashSet::new();
        for s in 0..trainer.sentences.len() {
            for i in 0..trainer.sentences[s].tags.len() {
                trainer.account(s, i, 1, &mut touched);
            }
        }
        trainer.refresh(touched);
        trainer
    }

    fn account(&mut self, s: usize, i: usize, delta: i32, touched: &mut HashSet<u64>) {
        let state = &self.sentences[s];
        let (tag, gold) = (state.tags[i], state.gold[i]);
        for &template in self.templates {
            for &ctx in contexts(template, &state.tags, &state.words, i).as_slice() {
                let key = key_of(template, tag, ctx);
                touched.insert(key);
                if tag == gold {
                    *self.breaks.entry(key).or_insert(0) += delta;
                } else {
                    let slots = self.fixes.entry(key).or_default();
                    match slots.iter_mut().find(|(t, _)| *t == gold) {
                        Some((_, count)) => *count += delta,
                        None => slots.push((gold, delta)),
                    }
                }
            }
        }
    }

    fn gain(&self, rule: Compiled) -> i32 {
        let key = rule.key();
        let fixed = self
            .fixes
            .get(&key)
            .and_then(|slots| slots.iter().find(|(t, _)| *t == rule.to))
            .map_or(0, |&(_, c)| c);
        fixed - self.breaks.get(&key).copied().unwrap_or(0)
    }

    fn refresh(&mut self, touched: HashSet<u64>) {
        for key in touched {
            let Some(slots) = self.fixes.get(&key) else {
                continue;
            };
            let broken = self.breaks.get(&key).copied().unwrap_or(0);
            let (template, from, ctx) = unpack_key(key);
            for &(to, fixed) in slots {
                if fixed > 0 {
                    let rule = Compiled {
                        template,
                        from,
                        to,
                        ctx,
                    };
                    self.heap.push((fixed - broken, Reverse(rule)));
                }
            }
        }
    }

    fn apply(&mut self, rule: Compiled) -> usize {
        let mut touched = HashSet::new();
        let mut changed = 0;
        for s in 0..self.sentences.len() {
            let state = &self.sentences[s];
            let fired = firing_positions(rule, &state.tags, &state.words);
            if fired.is_empty() {
                continue;
            }
            changed += fired.len();
            let len = state.tags.len();
            let mut affected: Vec<usize> = fired
                .iter()
                .flat_map(|&p| p.saturating_sub(WINDOW)..(p + WINDOW + 1).min(len))
                .collect();
            affected.sort_unstable();
            affected.dedup();
            for &j in &affected {
                self.account(s, j, -1, &mut touched);
            }
            for &p in &fired {
                self.sentences[s].tags[p] = rule.to;
            }
            for &j in &affected {
                self.account(s, j, 1, &mut touched);
            }
        }
        self.refresh(touched);
        changed
    }

    fn run(&mut self, threshold: u32, max_rules: usize) -> (Vec<Compiled>, Vec<u32>) {
        let mut rules = Vec::new();
        let mut gains = Vec::new();
        while rules.len() < max_rules {
            let Some((gain, Reverse(rule))) = self.heap.pop() else {
                break;
            };
            if self.gain(rule) != gain {
                continue;
            }
            if gain < threshold as i32 {
                break;
            }
            self.apply(rule);
            log::debug!("brill rule {} learned with gain {gain}", rules.len() + 1);
            rules.push(rule);
            gains.push(gain as u32);
        }
        (rules, gains)
    }
}

impl BrillModel {
    fn from_compiled(
        tagset: TagSet,
        initial: UnigramModel,
        rules: Vec<Compiled>,
        gains: Vec<u32>,
        vocab: &[String],
    ) -> Self {
        // keep only the words rules refer to, re-indexed
        let mut words: Vec<String> = Vec::new();
        let mut word_ids: HashMap<String, u32> = HashMap::new();
        let rules = rules
            .into_iter()
            .map(|mut rule| {
                if rule.template.is_lexical() && rule.ctx != BOUNDARY_WORD {
                    let word = &vocab[rule.ctx as usize];
                    rule.ctx = *word_ids.entry(word.clone()).or_insert_with(|| {
                        words.push(word.clone());
                        (words.len() - 1) as u32
                    });
                }
                rule
            })
            .collect();
        BrillModel {
            language: UNDETERMINED_LANGUAGE.to_string(),
            tagset,
            initial,
            rules,
            gains,
            words,
            word_ids,
        }
    }

    /// Assembles a model from explicit rules. Tags must be in `tagset`.
    pub fn new(
        tagset: TagSet,
        initial: UnigramModel,
        rules: &[BrillRule],
        gains: Vec<u32>,
    ) -> Result<Self, TaggerError> {
        if gains.len() != rules.len() {
            return Err(TaggerError::InvalidConfig("one gain per rule".into()));
        }
        for tag in initial.tagset().labels() {
            if !tagset.contains(tag) {
                return Err(TaggerError::InvalidConfig(format!(
                    "initial tag {tag:?} not in tagset"
                )));
            }
        }
        let mut vocab: Vec<String> = Vec::new();
        let mut vocab_ids: HashMap<String, u32> = HashMap::new();
        let tag = |t: &Option<String>| -> Result<u16, TaggerError> {
            match t {
                None => Ok(BOUNDARY_TAG),
                Some(t) => tagset
                    .index_of(t)
                    .map(|i| i as u16)
                    .ok_or_else(|| TaggerError::InvalidConfig(format!("unknown tag {t:?}"))),
            }
        };
        let mut compiled = Vec::with_capacity(rules.len());
        for rule in rules {
            let from = tag(&Some(rule.from.clone()))?;
            let to = tag(&Some(rule.to.clone()))?;
            if from == to {
                return Err(TaggerError::InvalidConfig(format!(
                    "rule {rule} does not change the tag"
                )));
            }
            let ctx = match (&rule.context, rule.template) {
                (RuleContext::Word(w), t) if t.is_lexical() => match w {
                    None => BOUNDARY_WORD,
                    Some(w) => *vocab_ids.entry(w.clone()).or_insert_with(|| {
                        vocab.push(w.clone());
                        (vocab.len() - 1) as u32
                    }),
                },
                (RuleContext::TagPair(a, b), t) if t.is_pair() => pair(tag(a)?, tag(b)?),
                (RuleContext::Tag(a), t) if !t.is_pair() && !t.is_lexical() => u32::from(tag(a)?),
                _ => {
                    return Err(TaggerError::InvalidConfig(format!(
                        "context does not fit template in rule {rule}"
                    )))
                }
            };
            compiled.push(Compiled {
                template: rule.template,
                from,
                to,
                ctx,
            });
        }
        Ok(Self::from_compiled(
            tagset, initial, compiled, gains, &vocab,
        ))
    }

    pub fn tagset(&self) -> &TagSet {
        &self.tagset
    }

    pub fn initial(&self) -> &UnigramModel {
        &self.initial
    }

    pub fn num_rules(&self) -> usize {
        self.rules.len()
    }

    /// Net training gain of each rule when it was learned.
    pub fn gains(&self) -> &[u32] {
        &self.gains
    }

    pub fn rules(&self) -> Vec<BrillRule> {
        self.rules.iter().map(|&r| self.describe(r)).collect()
    }

    fn describe(&self, rule: Compiled) -> BrillRule {
        let tag = |t: u16| (t != BOUNDARY_TAG).then(|| self.tagset.label(t as usize).to_string());
        let context = if rule.template.is_lexical() {
            RuleContext::Word(
                (rule.ctx != BOUNDARY_WORD).then(|| self.words[rule.ctx as usize].clone()),
            )
        } else if rule.template.is_pair() {
            RuleContext::TagPair(tag((rule.ctx >> 16) as u16), tag(rule.ctx as u16))
        } else {
            RuleContext::Tag(tag(rule.ctx as u16))
        };
        BrillRule {
            template: rule.template,
            from: self.tagset.label(rule.from as usize).to_string(),
            to: self.tagset.label(rule.to as usize).to_string(),
            context,
        }
    }

    /// The model with only its first `n` rules.
    pub fn truncated(&self, n: usize) -> BrillModel {
        let n = n.min(self.rules.len());
        let vocab = self.words.clone();
        let mut model = Self::from_compiled(
            self.tagset.clone(),
            self.initial.clone(),
            self.rules[..n].to_vec(),
            self.gains[..n].to_vec(),
            &vocab,
        );
        model.language = self.language.clone();
        model
    }

    fn initial_indices(&self, forms: &[&str]) -> Vec<u16> {
        forms
            .iter()
            .map(|f| self.tagset.index_of(self.initial.tag_one(f)).unwrap_or(0) as u16)
            .collect()
    }

    /// Tag indices after applying every rule.
    pub fn decode(&self, forms: &[&str]) -> Vec<usize> {
        let words: Vec<u32> = forms
            .iter()
            .map(|f| self.word_ids.get(*f).copied().unwrap_or(UNKNOWN_WORD))
            .collect();
        let mut tags = self.initial_indices(forms);
        for &rule in &self.rules {
            apply_compiled(rule, &mut tags, &words);
        }
        tags.into_iter().map(usize::from).collect()
    }

    fn count_correct(&self, sentences: &[Sentence]) -> usize {
        sentences
            .iter()
            .map(|s| {
                self.tag(&s.forms())
                    .iter()
                    .zip(&s.tokens)
                    .filter(|(p, g)| **p == g.tag)
                    .count()
            })
            .sum()
    }

    pub(crate) fn write_body(&self, out: &mut String) {
        format::write_tags(out, self.tagset.labels());
        let _ = writeln!(out, "initial {}", self.initial.body_lines());
        self.initial.write_body(out);
        let _ = writeln!(out, "rules {}", self.rules.len());
        let opt = |v: &Option<String>| v.clone().unwrap_or_default();
        for (rule, gain) in self.rules().iter().zip(&self.gains) {
            let _ = write!(out, "{}\t{}\t{}\t{gain}", rule.template, rule.from, rule.to);
            match &rule.context {
                RuleContext::Tag(t) | RuleContext::Word(t) => {
                    let _ = writeln!(out, "\t{}", opt(t));
                }
                RuleContext::TagPair(a, b) => {
                    let _ = writeln!(out, "\t{}\t{}", opt(a), opt(b));
                }
            }
        }
        out.push_str(format::END);
        out.push('\n');
    }

    pub(crate) fn read_body(reader: &mut Reader<'_>) -> Result<Self, TaggerError> {
        let tagset = TagSet::from_ordered(format::read_tags(reader)?);
        let count: usize = reader.keyed("initial")?;
        let mut entries = Vec::with_capacity(count);
        for _ in 0..count {
            let (line, text) = reader.next_line()?;
            entries.push(unigram::parse_entry(line, text)?);
        }
        let first_line = entries.first().map_or(0, |e| e.0);
        let initial =
            UnigramModel::from_entries(entries).map_err(|(line, msg)| format_error(line, msg))?;

        let count: usize = reader.keyed("rules")?;
        let mut rules = Vec::with_capacity(count);
        let mut gains = Vec::with_capacity(count);
        for _ in 0..count {
            let (line, text) = reader.next_line()?;
            let fields: Vec<&str> = text.split('\t').collect();
            if fields.len() < 5 {
                return Err(format_error(
                    line,
                    "rule needs template, from, to, gain, context",
                ));
            }
            let template: Template = fields[0].parse().map_err(|e| format_error(line, e))?;
            let gain: u32 = fields[3]
                .parse()
                .map_err(|_| format_error(line, "bad rule gain"))?;
            let opt = |s: &str| (!s.is_empty()).then(|| s.to_string());
            let context = match (template.is_pair(), template.is_lexical(), fields.len()) {
                (true, _, 6) => RuleContext::TagPair(opt(fields[4]), opt(fields[5])),
                (false, true, 5) => RuleContext::Word(opt(fields[4])),
                (false, false, 5) => RuleContext::Tag(opt(fields[4])),
                _ => return Err(format_error(line, "wrong number of context fields")),
            };
            rules.push(BrillRule {
                template,
                from: fields[1].to_string(),
                to: fields[2].to_string(),
                context,
            });
            gains.push(gain);
        }
        reader.expect_end()?;
        BrillModel::new(tagset, initial, &rules, gains).map_err(|e| match e {
            TaggerError::InvalidConfig(msg) => format_error(first_line, msg),
            other => other,
        })
    }
}

impl Tagger for BrillModel {
    fn kind(&self) -> TaggerKind {
        TaggerKind::Brill
    }

    fn tag(&self, forms: &[&str]) -> Vec<String> {
        self.decode(forms)
            .into_iter()
            .map(|t| self.tagset.label(t).to_string())
            .collect()
    }
}
