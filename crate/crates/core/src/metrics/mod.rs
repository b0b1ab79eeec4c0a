//! Accuracy and size metrics, and per-cell evaluation records.

use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitStatus;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Sentence, Treebank};
use crate::taggers::{ExternalTagger, Tagger, TaggerKind};

pub mod accuracy;
pub mod memory;
pub mod size;

pub use accuracy::{accuracy, sentence_accuracy, token_accuracy, AccuracyResult};
pub use memory::{measure_memory, MemoryCommand, MemoryLock, MemoryResult, DEFAULT_POLL_HZ};
pub use size::{compressed_size, model_size, DEFAULT_XZ_PRESET};

/// Kilobytes are decimal.
pub const BYTES_PER_KB: f64 = 1000.0;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("sentence {sentence} is misaligned: {message}")]
    Alignment { sentence: usize, message: String },
    #[error("no tokens to score")]
    EmptyInput,
    #[error("artifact {path}: {source}")]
    Artifact {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("compression failed: {0}")]
    Compression(String),
    #[error("memory measurement: {0}")]
    Memory(String),
    #[error("measured process exited with {status}; stderr: {stderr}")]
    ProcessFailed { status: ExitStatus, stderr: String },
    #[error("tagging failed: {0}")]
    Tagging(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: bad record: {message}")]
    Record {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

/// Tags a batch of sentences, possibly failing (external processes).
pub trait BatchTagger {
    fn tag_batch(&self, sentences: &[Sentence]) -> Result<Vec<Vec<String>>, MetricsError>;
}

impl<T: Tagger> BatchTagger for T {
    fn tag_batch(&self, sentences: &[Sentence]) -> Result<Vec<Vec<String>>, MetricsError> {
        Ok(self.tag_sentences(sentences))
    }
}

impl BatchTagger for ExternalTagger {
    fn tag_batch(&self, sentences: &[Sentence]) -> Result<Vec<Vec<String>>, MetricsError> {
        self.tag_sentences(sentences)
            .map_err(|e| MetricsError::Tagging(e.to_string()))
    }
}

/// Size metrics of one cell; absent values were not selected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SizeResult {
    pub memory_avg_kb: Option<f64>,
    pub memory_peak_kb: Option<f64>,
    pub memory_samples: Option<usize>,
    /// Mean RSS of an idle calibration process, for optional subtraction.
    pub memory_baseline_kb: Option<f64>,
    pub model_kb: Option<f64>,
    pub model_compressed_kb: Option<f64>,
}

/// One (tagger, language) evaluation; persisted as one JSON line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub tagger: String,
    pub kind: TaggerKind,
    pub language: String,
    pub treebank: String,
    #[serde(flatten)]
    pub accuracy: AccuracyResult,
    #[serde(flatten)]
    pub size: SizeResult,
    pub xz_preset: u32,
    pub poll_hz: f64,
    pub started_at: String,
    pub finished_at: String,
    pub config_hash: String,
    pub tool_version: String,
}

/// What to measure besides accuracy.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluateOptions {
    /// Isolated inference process over the test split; `None` skips memory.
    pub memory: Option<MemoryCommand>,
    pub memory_baseline_kb: Option<f64>,
    pub lock_path: PathBuf,
    pub poll_hz: f64,
    pub model_size: bool,
    pub compressed_size: bool,
    pub xz_preset: u32,
    pub config_hash: String,
}

impl Default for EvaluateOptions {
    fn default() -> Self {
        EvaluateOptions {
            memory: None,
            memory_baseline_kb: None,
            lock_path: MemoryLock::default_path(),
            poll_hz: DEFAULT_POLL_HZ,
            model_size: true,
            compressed_size: true,
            xz_preset: DEFAULT_XZ_PRESET,
            config_hash: String::new(),
        }
    }
}

/// A trained tagger plus the files that make up its model.
pub struct Subject<'a> {
    pub id: &'a str,
    pub kind: TaggerKind,
    pub tagger: &'a dyn BatchTagger,
    pub artifacts: &'a [PathBuf],
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Scores `subject` on the test split and measures the selected sizes.
pub fn evaluate(
    subject: &Subject<'_>,
    treebank: &Treebank,
    options: &EvaluateOptions,
) -> Result<MeasurementRecord, MetricsError> {
    let started_at = now();
    let test = &treebank.test;
    let gold: Vec<Vec<&str>> = test.iter().map(Sentence::tags).collect();
    let pred = subject.tagger.tag_batch(test)?;
    let accuracy = accuracy(&gold, &pred)?;

    let mut size = SizeResult::default();
    if options.model_size {
        size.model_kb = Some(model_size(subject.artifacts)?);
    }
    if options.compressed_size {
        size.model_compressed_kb = Some(compressed_size(subject.artifacts, options.xz_preset)?);
    }
    if let Some(command) = &options.memory {
        let result = {
            let _lock = MemoryLock::acquire(&options.lock_path)?;
            measure_memory(command, options.poll_hz)?
        };
        size.memory_avg_kb = Some(result.avg_kb);
        size.memory_peak_kb = Some(result.peak_kb);
        size.memory_samples = Some(result.sample_count);
        size.memory_baseline_kb = options.memory_baseline_kb;
    }
    Ok(MeasurementRecord {
        tagger: subject.id.to_string(),
        kind: subject.kind,
        language: treebank.language.clone(),
        treebank: treebank.name.clone(),
        accuracy,
        size,
        xz_preset: options.xz_preset,
        poll_hz: options.poll_hz,
        started_at,
        finished_at: now(),
        config_hash: options.config_hash.clone(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
    })
}

pub fn append_record(path: &Path, record: &MeasurementRecord) -> Result<(), MetricsError> {
    let io = |source| MetricsError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut line = serde_json::to_string(record).expect("record serializes");
    line.push('\n');
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io)?;
    file.write_all(line.as_bytes()).map_err(io)
}

pub fn read_records(path: &Path) -> Result<Vec<MeasurementRecord>, MetricsError> {
    let io = |source| MetricsError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::open(path).map_err(io)?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| MetricsError::Record {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}
