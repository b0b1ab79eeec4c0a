//! CoNLL-U ingestion, curation and train/dev/test splits.
//!
//! Tokens are syntactic words: the FORM and UPOS columns of simple-ID lines.
//! Multiword-token range lines (`3-4`) and empty nodes (`5.1`) never become
//! tokens. Curation then drops tokens whose UPOS is the `_` placeholder.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The 17 Universal POS tags.
pub const UPOS_TAGS: [&str; 17] = [
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM", "PART", "PRON", "PROPN",
    "PUNCT", "SCONJ", "SYM", "VERB", "X",
];

/// CoNLL-U placeholder for an unspecified field.
pub const PLACEHOLDER: &str = "_";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing split: {0}")]
    MissingSplit(Split),
    #[error("split {split} matched more than one file in {dir}")]
    AmbiguousSplit { split: Split, dir: PathBuf },
    #[error("sentence id {id:?} appears in both {first} and {second}")]
    OverlappingSplits {
        id: String,
        first: Split,
        second: Split,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CorpusError {
    fn parse(line: usize, message: impl Into<String>) -> Self {
        CorpusError::Parse {
            line,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub form: String,
    pub tag: String,
}

impl Token {
    pub fn new(form: impl Into<String>, tag: impl Into<String>) -> Self {
        Token {
            form: form.into(),
            tag: tag.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Sentence {
    pub tokens: Vec<Token>,
    pub source_id: Option<String>,
}

impl Sentence {
    pub fn new(tokens: Vec<Token>) -> Self {
        Sentence {
            tokens,
            source_id: None,
        }
    }

    /// Builds a sentence from `form/TAG` pairs split on the last `/`.
    pub fn from_pairs(pairs: &str) -> Self {
        let tokens = pairs
            .split_whitespace()
            .map(|pair| {
                let (form, tag) = pair.rsplit_once('/').unwrap_or((pair, PLACEHOLDER));
                Token::new(form, tag)
            })
            .collect();
        Sentence::new(tokens)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn forms(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.form.as_str()).collect()
    }

    pub fn tags(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.tag.as_str()).collect()
    }
}

/// Dense, ordered tag inventory. Index order is the tie-breaking order used by
/// every tagger.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TagSet {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl TagSet {
    /// Labels are deduplicated and sorted.
    pub fn new<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let sorted: BTreeSet<String> = labels.into_iter().map(Into::into).collect();
        Self::from_ordered(sorted.into_iter().collect())
    }

    /// Keeps the given order; later duplicates are ignored.
    pub fn from_ordered(labels: Vec<String>) -> Self {
        let mut set = TagSet::default();
        for label in labels {
            set.insert(label);
        }
        set
    }

    pub fn from_sentences<'a, I>(sentences: I) -> Self
    where
        I: IntoIterator<Item = &'a Sentence>,
    {
        Self::new(
            sentences
                .into_iter()
                .flat_map(|s| s.tokens.iter().map(|t| t.tag.clone())),
        )
    }

    /// Appends a label if absent, returning its index.
    pub fn insert(&mut self, label: impl Into<String>) -> usize {
        let label = label.into();
        if let Some(&idx) = self.index.get(&label) {
            return idx;
        }
        let idx = self.labels.len();
        self.index.insert(label.clone(), idx);
        self.labels.push(label);
        idx
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn label(&self, idx: usize) -> &str {
        &self.labels[idx]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn contains(&self, label: &str) -> bool {
        self.index.contains_key(label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParseOptions {
    /// Closed tag inventory. `None` accepts any non-empty tag.
    pub inventory: Option<BTreeSet<String>>,
}

impl ParseOptions {
    /// UPOS plus the `_` placeholder.
    pub fn upos() -> Self {
        let mut inventory: BTreeSet<String> = UPOS_TAGS.iter().map(|s| s.to_string()).collect();
        inventory.insert(PLACEHOLDER.to_string());
        ParseOptions {
            inventory: Some(inventory),
        }
    }

    pub fn any_tag() -> Self {
        ParseOptions { inventory: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TokenId {
    Simple,
    Range,
    Empty,
}

fn classify_id(id: &str) -> Option<TokenId> {
    let numeric = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if numeric(id) {
        return Some(TokenId::Simple);
    }
    if let Some((a, b)) = id.split_once('-') {
        if numeric(a) && numeric(b) {
            return Some(TokenId::Range);
        }
    }
    if let Some((a, b)) = id.split_once('.') {
        if numeric(a) && numeric(b) {
            return Some(TokenId::Empty);
        }
    }
    None
}

/// Parses CoNLL-U text with the UPOS inventory.
pub fn parse_conllu<R: BufRead>(reader: R) -> Result<Vec<Sentence>, CorpusError> {
    parse_conllu_with(reader, &ParseOptions::upos())
}

pub fn parse_conllu_str(text: &str) -> Result<Vec<Sentence>, CorpusError> {
    parse_conllu(text.as_bytes())
}

pub fn parse_conllu_with<R: BufRead>(
    mut reader: R,
    options: &ParseOptions,
) -> Result<Vec<Sentence>, CorpusError> {
    let mut sentences = Vec::new();
    let mut current = Sentence::default();
    let mut open = false;
    let mut buf = Vec::new();
    let mut line_no = 0;

    loop {
        buf.clear();
        let read = reader
            .read_until(b'\n', &mut buf)
            .map_err(|e| CorpusError::parse(line_no + 1, e.to_string()))?;
        if read == 0 {
            break;
        }
        line_no += 1;
        let line = std::str::from_utf8(&buf)
            .map_err(|e| CorpusError::parse(line_no, format!("invalid UTF-8: {e}")))?;
        let line = line.strip_suffix('\n').unwrap_or(line);
        let line = line.strip_suffix('\r').unwrap_or(line);

        if line.trim().is_empty() {
            if open {
                sentences.push(std::mem::take(&mut current));
                open = false;
            } else {
                current = Sentence::default();
            }
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                if key.trim() == "sent_id" {
                    current.source_id = Some(value.trim().to_string());
                }
            }
            continue;
        }

        let columns: Vec<&str> = line.split('\t').collect();
        if columns.len() != 10 {
            return Err(CorpusError::parse(
                line_no,
                format!("expected 10 tab-separated columns, found {}", columns.len()),
            ));
        }
        open = true;
        match classify_id(columns[0]) {
            Some(TokenId::Simple) => {}
            Some(TokenId::Range) | Some(TokenId::Empty) => continue,
            None => {
                return Err(CorpusError::parse(
                    line_no,
                    format!("invalid token id {:?}", columns[0]),
                ))
            }
        }
        let form = columns[1];
        let tag = columns[3];
        if form.is_empty() {
            return Err(CorpusError::parse(line_no, "empty FORM"));
        }
        if tag.is_empty() {
            return Err(CorpusError::parse(line_no, "empty UPOS"));
        }
        if let Some(inventory) = &options.inventory {
            if !inventory.contains(tag) {
                return Err(CorpusError::parse(
                    line_no,
                    format!("tag {tag:?} not in inventory"),
                ));
            }
        }
        current.tokens.push(Token::new(form, tag));
    }
    if open {
        sentences.push(current);
    }
    Ok(sentences)
}

/// Writes a minimal CoNLL-U rendering (FORM and UPOS filled, other columns `_`).
pub fn write_conllu<W: Write>(mut out: W, sentences: &[Sentence]) -> std::io::Result<()> {
    for sentence in sentences {
        if let Some(id) = &sentence.source_id {
            writeln!(out, "# sent_id = {id}")?;
        }
        for (i, token) in sentence.tokens.iter().enumerate() {
            writeln!(
                out,
                "{}\t{}\t_\t{}\t_\t_\t_\t_\t_\t_",
                i + 1,
                token.form,
                token.tag
            )?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurationOptions {
    /// Append a `.`/PUNCT token to sentences not already ending in `.`.
    #[serde(default)]
    pub svmtool_compat: bool,
}

pub fn curate(sentences: Vec<Sentence>, options: &CurationOptions) -> Vec<Sentence> {
    sentences
        .into_iter()
        .filter_map(|mut sentence| {
            sentence.tokens.retain(|t| t.tag != PLACEHOLDER);
            if sentence.tokens.is_empty() {
                return None;
            }
            if options.svmtool_compat
                && sentence.tokens.last().map(|t| t.form.as_str()) != Some(".")
            {
                sentence.tokens.push(Token::new(".", "PUNCT"));
            }
            Some(sentence)
        })
        .collect()
}

/// Curated format: one `form<TAB>tag` line per token, blank line between sentences.
pub fn write_curated<W: Write>(mut out: W, sentences: &[Sentence]) -> std::io::Result<()> {
    for sentence in sentences {
        for token in &sentence.tokens {
            writeln!(out, "{}\t{}", token.form, token.tag)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn read_curated<R: BufRead>(reader: R) -> Result<Vec<Sentence>, CorpusError> {
    let mut sentences = Vec::new();
    let mut current = Sentence::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CorpusError::parse(i + 1, e.to_string()))?;
        if line.is_empty() {
            if !current.is_empty() {
                sentences.push(std::mem::take(&mut current));
            }
            continue;
        }
        let (form, tag) = line
            .split_once('\t')
            .ok_or_else(|| CorpusError::parse(i + 1, "expected form<TAB>tag"))?;
        if form.is_empty() || tag.is_empty() {
            return Err(CorpusError::parse(i + 1, "empty form or tag"));
        }
        current.tokens.push(Token::new(form, tag));
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    Ok(sentences)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SplitStats {
    pub sentences: usize,
    pub tokens: usize,
}

impl SplitStats {
    pub fn of(sentences: &[Sentence]) -> Self {
        SplitStats {
            sentences: sentences.len(),
            tokens: sentences.iter().map(Sentence::len).sum(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Treebank {
    pub language: String,
    pub name: String,
    pub train: Vec<Sentence>,
    pub dev: Vec<Sentence>,
    pub test: Vec<Sentence>,
}

impl Treebank {
    pub fn split(&self, split: Split) -> &[Sentence] {
        match split {
            Split::Train => &self.train,
            Split::Dev => &self.dev,
            Split::Test => &self.test,
        }
    }

    pub fn stats(&self, split: Split) -> SplitStats {
        SplitStats::of(self.split(split))
    }

    pub fn total(&self) -> SplitStats {
        let mut total = SplitStats::default();
        for split in Split::ALL {
            let s = self.stats(split);
            total.sentences += s.sentences;
            total.tokens += s.tokens;
        }
        total
    }

    /// Training tags first (sorted), then tags only seen in dev/test.
    pub fn tagset(&self) -> TagSet {
        let mut set = TagSet::from_sentences(&self.train);
        let extra: BTreeSet<&str> = self
            .dev
            .iter()
            .chain(&self.test)
            .flat_map(|s| s.tokens.iter().map(|t| t.tag.as_str()))
            .filter(|t| !set.contains(t))
            .collect();
        for tag in extra {
            set.insert(tag);
        }
        set
    }

    fn check_disjoint(&self) -> Result<(), CorpusError> {
        let mut seen: HashMap<&str, Split> = HashMap::new();
        for split in Split::ALL {
            let mut local = HashSet::new();
            for sentence in self.split(split) {
                let Some(id) = sentence.source_id.as_deref() else {
                    continue;
                };
                if !local.insert(id) {
                    continue;
                }
                if let Some(&first) = seen.get(id) {
                    return Err(CorpusError::OverlappingSplits {
                        id: id.to_string(),
                        first,
                        second: split,
                    });
                }
                seen.insert(id, split);
            }
        }
        Ok(())
    }
}

/// Finds the UD file for `split` (`*-ud-<split>.conllu`) in `dir`.
pub fn find_split_file(dir: &Path, split: Split) -> Result<PathBuf, CorpusError> {
    let suffix = format!("-ud-{}.conllu", split.as_str());
    let entries = std::fs::read_dir(dir).map_err(|source| CorpusError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut matches: Vec<PathBuf> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.ends_with(&suffix))
        })
        .collect();
    matches.sort();
    match matches.len() {
        0 => Err(CorpusError::MissingSplit(split)),
        1 => Ok(matches.remove(0)),
        _ => Err(CorpusError::AmbiguousSplit {
            split,
            dir: dir.to_path_buf(),
        }),
    }
}

fn treebank_name(dir: &Path, train_file: &Path) -> String {
    let from_dir = dir
        .file_name()
        .and_then(|n| n.to_str())
        .and_then(|n| n.rsplit_once('-'))
        .map(|(_, name)| name.to_string());
    from_dir.unwrap_or_else(|| {
        train_file
            .file_name()
            .and_then(|n| n.to_str())
            .and_then(|n| n.split_once('_'))
            .and_then(|(_, rest)| rest.split_once('-'))
            .map(|(name, _)| name.to_uppercase())
            .unwrap_or_default()
    })
}

pub fn load_treebank(dir: &Path, language: &str) -> Result<Treebank, CorpusError> {
    load_treebank_with(dir, language, &CurationOptions::default())
}

pub fn load_treebank_with(
    dir: &Path,
    language: &str,
    curation: &CurationOptions,
) -> Result<Treebank, CorpusError> {
    let mut paths = Vec::with_capacity(3);
    for split in Split::ALL {
        paths.push(find_split_file(dir, split)?);
    }
    let mut splits = Vec::with_capacity(3);
    for path in &paths {
        let file = std::fs::File::open(path).map_err(|source| CorpusError::Io {
            path: path.clone(),
            source,
        })?;
        let parsed = parse_conllu(std::io::BufReader::new(file)).map_err(|e| match e {
            CorpusError::Parse { line, message } => {
                CorpusError::parse(line, format!("{}: {message}", path.display()))
            }
            other => other,
        })?;
        splits.push(curate(parsed, curation));
    }
    let test = splits.pop().unwrap_or_default();
    let dev = splits.pop().unwrap_or_default();
    let train = splits.pop().unwrap_or_default();
    let treebank = Treebank {
        language: language.to_string(),
        name: treebank_name(dir, &paths[0]),
        train,
        dev,
        test,
    };
    treebank.check_disjoint()?;
    for split in Split::ALL {
        let stats = treebank.stats(split);
        log::info!(
            "{language} {} {split}: {} sentences, {} tokens",
            treebank.name,
            stats.sentences,
            stats.tokens
        );
    }
    Ok(treebank)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "# sent_id = s1\n# text = Vámonos al mar.\n\
1-2\tVámonos\t_\t_\t_\t_\t_\t_\t_\t_\n\
1\tVamos\tir\tVERB\t_\t_\t0\troot\t_\t_\n\
2\tnos\tnosotros\tPRON\t_\t_\t1\tobj\t_\t_\n\
3-4\tal\t_\t_\t_\t_\t_\t_\t_\t_\n\
3\ta\ta\tADP\t_\t_\t5\tcase\t_\t_\n\
4\tel\tel\tDET\t_\t_\t5\tdet\t_\t_\n\
5\tmar\tmar\tNOUN\t_\t_\t1\tobl\t_\t_\n\
5.1\tva\tir\tVERB\t_\t_\t_\t_\t_\t_\n\
6\t.\t.\tPUNCT\t_\t_\t1\tpunct\t_\t_\n\n";

    #[test]
    fn empty_stream() {
        assert!(parse_conllu_str("").unwrap().is_empty());
    }

    #[test]
    fn range_and_empty_nodes_are_dropped() {
        let sentences = parse_conllu_str(SAMPLE).unwrap();
        assert_eq!(sentences.len(), 1);
        let s = &sentences[0];
        assert_eq!(s.source_id.as_deref(), Some("s1"));
        assert_eq!(s.forms(), vec!["Vamos", "nos", "a", "el", "mar", "."]);
        assert_eq!(
            s.tags(),
            vec!["VERB", "PRON", "ADP", "DET", "NOUN", "PUNCT"]
        );
    }

    #[test]
    fn range_line_with_two_subtokens() {
        let text = "1-2\tvámonos\t_\t_\t_\t_\t_\t_\t_\t_\n\
1\tvamos\t_\tVERB\t_\t_\t_\t_\t_\t_\n\
2\tnos\t_\tPRON\t_\t_\t_\t_\t_\t_\n\n";
        let sentences = parse_conllu_str(text).unwrap();
        assert_eq!(sentences[0].len(), 2);
    }

    #[test]
    fn truncated_final_sentence_is_closed() {
        let text = "1\ta\t_\tDET\t_\t_\t_\t_\t_\t_\n2\tb\t_\tNOUN\t_\t_\t_\t_\t_\t_";
        let sentences = parse_conllu_str(text).unwrap();
        assert_eq!(sentences.len(), 1);
        assert_eq!(sentences[0].len(), 2);
    }

    #[test]
    fn wrong_column_count_reports_line() {
        let text = "# c\n1\ta\t_\tDET\t_\t_\t_\t_\t_\t_\n2\tb\tNOUN\n";
        match parse_conllu_str(text) {
            Err(CorpusError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_numeric_id_is_error() {
        let text = "x\ta\t_\tDET\t_\t_\t_\t_\t_\t_\n";
        assert!(matches!(
            parse_conllu_str(text),
            Err(CorpusError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn invalid_utf8_is_error() {
        let mut bytes = b"1\ta".to_vec();
        bytes.push(0xff);
        bytes.extend_from_slice(b"\t_\tDET\t_\t_\t_\t_\t_\t_\n");
        assert!(matches!(
            parse_conllu(&bytes[..]),
            Err(CorpusError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn unknown_upos_is_error_unless_open_inventory() {
        let text = "1\ta\t_\tFOO\t_\t_\t_\t_\t_\t_\n";
        assert!(parse_conllu_str(text).is_err());
        let open = parse_conllu_with(text.as_bytes(), &ParseOptions::any_tag()).unwrap();
        assert_eq!(open[0].tags(), vec!["FOO"]);
    }

    #[test]
    fn curate_identity_and_drop() {
        let clean = Sentence::from_pairs("a/DET b/NOUN c/VERB");
        let all_placeholder = Sentence::from_pairs("x/_ y/_");
        let out = curate(
            vec![clean.clone(), all_placeholder],
            &CurationOptions::default(),
        );
        assert_eq!(out, vec![clean]);
    }

    #[test]
    fn svmtool_compat_appends_full_stop() {
        let opts = CurationOptions {
            svmtool_compat: true,
        };
        let out = curate(
            vec![
                Sentence::from_pairs("a/DET b/NOUN"),
                Sentence::from_pairs("c/VERB ./PUNCT"),
            ],
            &opts,
        );
        assert_eq!(out[0].forms(), vec!["a", "b", "."]);
        assert_eq!(out[0].tags().last(), Some(&"PUNCT"));
        assert_eq!(out[1].len(), 2);
    }

    #[test]
    fn curated_format_round_trip() {
        let sentences = vec![
            Sentence::from_pairs("a/DET b/NOUN"),
            Sentence::from_pairs("c/VERB"),
        ];
        let mut buf = Vec::new();
        write_curated(&mut buf, &sentences).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "a\tDET\nb\tNOUN\n\nc\tVERB\n\n"
        );
        assert_eq!(read_curated(&buf[..]).unwrap(), sentences);
    }

    #[test]
    fn tagset_is_sorted_bijection() {
        let set = TagSet::new(["VERB", "ADJ", "NOUN", "ADJ"]);
        assert_eq!(set.labels(), &["ADJ", "NOUN", "VERB"]);
        for (i, label) in set.labels().iter().enumerate() {
            assert_eq!(set.index_of(label), Some(i));
        }
    }

    #[test]
    fn treebank_tagset_admits_unseen_eval_tags() {
        let tb = Treebank {
            language: "en".into(),
            name: "T".into(),
            train: vec![Sentence::from_pairs("a/NOUN b/VERB")],
            dev: vec![Sentence::from_pairs("c/ADJ")],
            test: vec![Sentence::from_pairs("d/INTJ")],
        };
        let set = tb.tagset();
        assert_eq!(set.labels(), &["NOUN", "VERB", "ADJ", "INTJ"]);
    }
}
