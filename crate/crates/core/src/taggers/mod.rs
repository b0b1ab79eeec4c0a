//! Tagger contract, built-in classical taggers and the external-tagger adapter.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Sentence;

pub mod brill;
pub mod external;
pub(crate) mod format;
pub mod hmm;
pub mod tnt;
pub mod unigram;

pub use brill::{brill_train, BrillConfig, BrillModel, BrillRule, RuleContext, Template};
pub use external::{external_tag, AdapterError, ExternalTagger};
pub use hmm::{hmm_train, viterbi, HmmConfig, HmmModel};
pub use tnt::{tnt_train, TntConfig, TntModel};
pub use unigram::{train_unigram, UnigramModel};

/// Log-probability used for zero-probability events.
pub const LOG_FLOOR: f64 = -1e9;

pub(crate) fn log_prob(p: f64) -> f64 {
    if p > 0.0 {
        p.ln()
    } else {
        LOG_FLOOR
    }
}

/// Viterbi path score: a log-probability in fixed point with 2^-40
/// resolution. Integer addition is associative, so a path's score does not
/// depend on summation order and equal-scoring paths tie exactly, which
/// keeps the lowest-index tie-break well defined.
pub type Score = i128;

const SCORE_SCALE: f64 = (1u64 << 40) as f64;

/// Fixed-point form of a log-probability used by the decoders.
pub fn quantize(log_p: f64) -> Score {
    (log_p * SCORE_SCALE).round() as Score
}

/// Language code used until a caller assigns one.
pub const UNDETERMINED_LANGUAGE: &str = "und";

#[derive(Debug, Error)]
pub enum TaggerError {
    #[error("cannot train on an empty corpus")]
    EmptyCorpus,
    #[error("invalid setting: {0}")]
    InvalidConfig(String),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("model file is truncated")]
    Truncated,
    #[error("unsupported model format version {found} (expected {expected})")]
    VersionMismatch { found: String, expected: u32 },
    #[error("model kind {found} where {expected} was expected")]
    KindMismatch { found: String, expected: TaggerKind },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaggerKind {
    Unigram,
    Hmm,
    Tnt,
    Brill,
    External,
}

impl TaggerKind {
    pub const ALL: [TaggerKind; 5] = [
        TaggerKind::Unigram,
        TaggerKind::Hmm,
        TaggerKind::Tnt,
        TaggerKind::Brill,
        TaggerKind::External,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaggerKind::Unigram => "unigram",
            TaggerKind::Hmm => "hmm",
            TaggerKind::Tnt => "tnt",
            TaggerKind::Brill => "brill",
            TaggerKind::External => "external",
        }
    }
}

impl fmt::Display for TaggerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaggerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TaggerKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown tagger kind {s:?}"))
    }
}

pub trait Tagger {
    fn kind(&self) -> TaggerKind;

    /// One tag per input form.
    fn tag(&self, forms: &[&str]) -> Vec<String>;

    fn tag_sentences(&self, sentences: &[Sentence]) -> Vec<Vec<String>> {
        sentences.iter().map(|s| self.tag(&s.forms())).collect()
    }
}

/// A trained built-in tagger.
#[derive(Debug, Clone)]
pub enum BuiltinModel {
    Unigram(UnigramModel),
    Hmm(HmmModel),
    Tnt(TntModel),
    Brill(BrillModel),
}

impl BuiltinModel {
    pub fn language(&self) -> &str {
        match self {
            BuiltinModel::Unigram(m) => &m.language,
            BuiltinModel::Hmm(m) => &m.language,
            BuiltinModel::Tnt(m) => &m.language,
            BuiltinModel::Brill(m) => &m.language,
        }
    }

    pub fn set_language(&mut self, language: &str) {
        let slot = match self {
            BuiltinModel::Unigram(m) => &mut m.language,
            BuiltinModel::Hmm(m) => &mut m.language,
            BuiltinModel::Tnt(m) => &mut m.language,
            BuiltinModel::Brill(m) => &mut m.language,
        };
        *slot = language.to_string();
    }

    /// Plain-text rendering of the model, header included.
    pub fn to_text(&self) -> Result<String, TaggerError> {
        let mut out = String::new();
        format::write_header(&mut out, self.kind(), self.language())?;
        match self {
            BuiltinModel::Unigram(m) => m.write_body(&mut out),
            BuiltinModel::Hmm(m) => m.write_body(&mut out),
            BuiltinModel::Tnt(m) => m.write_body(&mut out),
            BuiltinModel::Brill(m) => m.write_body(&mut out),
        }
        Ok(out)
    }

    pub fn from_text(text: &str) -> Result<Self, TaggerError> {
        let mut reader = format::Reader::new(text)?;
        let (kind, language) = reader.header()?;
        let mut model = match kind {
            TaggerKind::Unigram => BuiltinModel::Unigram(UnigramModel::read_body(&mut reader)?),
            TaggerKind::Hmm => BuiltinModel::Hmm(HmmModel::read_body(&mut reader)?),
            TaggerKind::Tnt => BuiltinModel::Tnt(TntModel::read_body(&mut reader)?),
            TaggerKind::Brill => BuiltinModel::Brill(BrillModel::read_body(&mut reader)?),
            TaggerKind::External => {
                return Err(TaggerError::KindMismatch {
                    found: kind.to_string(),
                    expected: TaggerKind::Brill,
                })
            }
        };
        reader.finish()?;
        model.set_language(&language);
        Ok(model)
    }

    pub fn artifact_name(kind: TaggerKind) -> String {
        format!("{}.model", kind.as_str())
    }

    /// Writes the model into `dir` and returns the artifact files.
    pub fn serialize(&self, dir: &Path) -> Result<Vec<PathBuf>, TaggerError> {
        std::fs::create_dir_all(dir).map_err(|source| TaggerError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let path = dir.join(Self::artifact_name(self.kind()));
        std::fs::write(&path, self.to_text()?).map_err(|source| TaggerError::Io {
            path: path.clone(),
            source,
        })?;
        Ok(vec![path])
    }

    pub fn deserialize(files: &[PathBuf]) -> Result<Self, TaggerError> {
        let path = files.first().ok_or(TaggerError::Truncated)?;
        let text = std::fs::read_to_string(path).map_err(|source| TaggerError::Io {
            path: path.clone(),
            source,
        })?;
        Self::from_text(&text)
    }

    pub fn load(path: &Path) -> Result<Self, TaggerError> {
        Self::deserialize(&[path.to_path_buf()])
    }
}

impl Tagger for BuiltinModel {
    fn kind(&self) -> TaggerKind {
        match self {
            BuiltinModel::Unigram(_) => TaggerKind::Unigram,
            BuiltinModel::Hmm(_) => TaggerKind::Hmm,
            BuiltinModel::Tnt(_) => TaggerKind::Tnt,
            BuiltinModel::Brill(_) => TaggerKind::Brill,
        }
    }

    fn tag(&self, forms: &[&str]) -> Vec<String> {
        match self {
            BuiltinModel::Unigram(m) => m.tag(forms),
            BuiltinModel::Hmm(m) => m.tag(forms),
            BuiltinModel::Tnt(m) => m.tag(forms),
            BuiltinModel::Brill(m) => m.tag(forms),
        }
    }
}

/// Hyperparameters for any built-in tagger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BuiltinSpec {
    Unigram,
    Hmm(HmmConfig),
    Tnt(TntConfig),
    Brill(BrillConfig),
}

impl BuiltinSpec {
    pub fn kind(&self) -> TaggerKind {
        match self {
            BuiltinSpec::Unigram => TaggerKind::Unigram,
            BuiltinSpec::Hmm(_) => TaggerKind::Hmm,
            BuiltinSpec::Tnt(_) => TaggerKind::Tnt,
            BuiltinSpec::Brill(_) => TaggerKind::Brill,
        }
    }

    /// Trains on `train`; only Brill looks at `dev`, and only when configured to.
    pub fn train(&self, train: &[Sentence], dev: &[Sentence]) -> Result<BuiltinModel, TaggerError> {
        Ok(match self {
            BuiltinSpec::Unigram => BuiltinModel::Unigram(train_unigram(train)?),
            BuiltinSpec::Hmm(config) => BuiltinModel::Hmm(hmm::hmm_train_with(train, config)?),
            BuiltinSpec::Tnt(config) => BuiltinModel::Tnt(tnt::tnt_train_with(train, config)?),
            BuiltinSpec::Brill(config) => {
                BuiltinModel::Brill(brill::brill_train_with_dev(train, dev, config)?)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_names_round_trip() {
        for kind in TaggerKind::ALL {
            assert_eq!(kind.as_str().parse::<TaggerKind>().unwrap(), kind);
        }
        assert!("svmtool-builtin".parse::<TaggerKind>().is_err());
    }
}
