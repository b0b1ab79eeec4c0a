//! Most-frequent-tag baseline; also the initial annotator for Brill.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use super::format::{format_error, Reader};
use super::{Tagger, TaggerError, TaggerKind, UNDETERMINED_LANGUAGE};
use crate::corpus::{Sentence, TagSet};

/// Tag emitted by a model that has neither lexicon nor default tag.
pub const FALLBACK_TAG: &str = "X";

#[derive(Debug, Clone, PartialEq)]
pub struct UnigramModel {
    pub language: String,
    tagset: TagSet,
    lexicon: HashMap<String, usize>,
    default_tag: Option<usize>,
}

/// Index of the largest count; lowest index wins ties.
pub(crate) fn modal_index(counts: &[u64]) -> Option<usize> {
    let mut best: Option<(usize, u64)> = None;
    for (i, &c) in counts.iter().enumerate() {
        if c > 0 && best.is_none_or(|(_, b)| c > b) {
            best = Some((i, c));
        }
    }
    best.map(|(i, _)| i)
}

pub fn train_unigram(train: &[Sentence]) -> Result<UnigramModel, TaggerError> {
    let tagset = TagSet::from_sentences(train);
    if tagset.is_empty() {
        return Err(TaggerError::EmptyCorpus);
    }
    let mut per_form: HashMap<&str, Vec<u64>> = HashMap::new();
    let mut totals = vec![0u64; tagset.len()];
    for token in train.iter().flat_map(|s| &s.tokens) {
        let tag = tagset
            .index_of(&token.tag)
            .expect("tagset built from corpus");
        per_form
            .entry(&token.form)
            .or_insert_with(|| vec![0; tagset.len()])[tag] += 1;
        totals[tag] += 1;
    }
    let lexicon = per_form
        .into_iter()
        .filter_map(|(form, counts)| modal_index(&counts).map(|t| (form.to_string(), t)))
        .collect();
    Ok(UnigramModel {
        language: UNDETERMINED_LANGUAGE.to_string(),
        tagset,
        lexicon,
        default_tag: modal_index(&totals),
    })
}

impl UnigramModel {
    /// A model with no lexicon and no default tag.
    pub fn empty(language: &str) -> Self {
        UnigramModel {
            language: language.to_string(),
            tagset: TagSet::default(),
            lexicon: HashMap::new(),
            default_tag: None,
        }
    }

    pub fn tagset(&self) -> &TagSet {
        &self.tagset
    }

    pub fn lexicon_len(&self) -> usize {
        self.lexicon.len()
    }

    pub fn lookup(&self, form: &str) -> Option<&str> {
        self.lexicon.get(form).map(|&t| self.tagset.label(t))
    }

    pub fn default_tag(&self) -> Option<&str> {
        self.default_tag.map(|t| self.tagset.label(t))
    }

    pub fn tag_one(&self, form: &str) -> &str {
        self.lookup(form)
            .or_else(|| self.default_tag())
            .unwrap_or(FALLBACK_TAG)
    }

    pub(crate) fn write_body(&self, out: &mut String) {
        if let Some(tag) = self.default_tag() {
            let _ = writeln!(out, "\t{tag}");
        }
        let sorted: BTreeMap<&str, usize> =
            self.lexicon.iter().map(|(f, &t)| (f.as_str(), t)).collect();
        for (form, tag) in sorted {
            let _ = writeln!(out, "{form}\t{}", self.tagset.label(tag));
        }
    }

    pub(crate) fn read_body(reader: &mut Reader<'_>) -> Result<Self, TaggerError> {
        let mut entries = Vec::new();
        while !reader.is_eof() {
            let (line, text) = reader.next_line()?;
            entries.push(parse_entry(line, text)?);
        }
        Self::from_entries(entries).map_err(|(line, msg)| format_error(line, msg))
    }

    /// Number of lines `write_body` emits.
    pub(crate) fn body_lines(&self) -> usize {
        self.lexicon.len() + usize::from(self.default_tag.is_some())
    }

    /// Builds a model from `(line, form, tag)` entries; an empty form marks
    /// the default tag.
    pub(crate) fn from_entries(entries: Vec<(usize, &str, &str)>) -> Result<Self, (usize, String)> {
        let mut default = None;
        let mut lexicon_entries = Vec::with_capacity(entries.len());
        for (line, form, tag) in entries {
            if form.is_empty() {
                if default.replace(tag).is_some() {
                    return Err((line, "duplicate default tag".to_string()));
                }
            } else {
                lexicon_entries.push((form, tag));
            }
        }
        let tagset = TagSet::new(lexicon_entries.iter().map(|(_, t)| *t).chain(default));
        let lexicon = lexicon_entries
            .into_iter()
            .map(|(f, t)| (f.to_string(), tagset.index_of(t).expect("inserted above")))
            .collect();
        Ok(UnigramModel {
            language: UNDETERMINED_LANGUAGE.to_string(),
            default_tag: default.and_then(|t| tagset.index_of(t)),
            tagset,
            lexicon,
        })
    }
}

pub(crate) fn parse_entry(line: usize, text: &str) -> Result<(usize, &str, &str), TaggerError> {
    let (form, tag) = text
        .split_once('\t')
        .ok_or_else(|| format_error(line, "expected form<TAB>tag"))?;
    if tag.is_empty() {
        return Err(format_error(line, "empty tag"));
    }
    Ok((line, form, tag))
}

impl Tagger for UnigramModel {
    fn kind(&self) -> TaggerKind {
        TaggerKind::Unigram
    }

    fn tag(&self, forms: &[&str]) -> Vec<String> {
        forms.iter().map(|f| self.tag_one(f).to_string()).collect()
    }
}
