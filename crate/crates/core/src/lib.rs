//! Part-of-speech tagger benchmarking: corpora, taggers, metrics, skylines,
//! experiment orchestration and reports.

pub mod corpus;
pub mod harness;
pub mod metrics;
pub mod report;
pub mod skyline;
pub mod taggers;

pub use corpus::{Sentence, TagSet, Token, Treebank};
pub use metrics::{MeasurementRecord, MetricsError};
pub use taggers::{BuiltinModel, BuiltinSpec, Tagger, TaggerError, TaggerKind};
