//! Pareto skylines over (size, accuracy) points.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::MeasurementRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeMetric {
    Memory,
    Model,
    Compressed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccuracyMetric {
    Token,
    Sentence,
}

impl SizeMetric {
    pub const ALL: [SizeMetric; 3] = [
        SizeMetric::Memory,
        SizeMetric::Model,
        SizeMetric::Compressed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SizeMetric::Memory => "memory",
            SizeMetric::Model => "model",
            SizeMetric::Compressed => "compressed",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SizeMetric::Memory => "Memory usage (kB)",
            SizeMetric::Model => "Model size (kB)",
            SizeMetric::Compressed => "Compressed model size (kB)",
        }
    }

    pub fn of(self, record: &MeasurementRecord) -> Option<f64> {
        match self {
            SizeMetric::Memory => record.size.memory_avg_kb,
            SizeMetric::Model => record.size.model_kb,
            SizeMetric::Compressed => record.size.model_compressed_kb,
        }
    }
}

impl AccuracyMetric {
    pub const ALL: [AccuracyMetric; 2] = [AccuracyMetric::Token, AccuracyMetric::Sentence];

    pub fn as_str(self) -> &'static str {
        match self {
            AccuracyMetric::Token => "token",
            AccuracyMetric::Sentence => "sentence",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            AccuracyMetric::Token => "Token accuracy",
            AccuracyMetric::Sentence => "Sentence accuracy",
        }
    }

    pub fn of(self, record: &MeasurementRecord) -> f64 {
        match self {
            AccuracyMetric::Token => record.accuracy.token_accuracy,
            AccuracyMetric::Sentence => record.accuracy.sentence_accuracy,
        }
    }
}

macro_rules! name_impls {
    ($ty:ty) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $ty {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                <$ty>::ALL
                    .into_iter()
                    .find(|m| m.as_str() == s)
                    .ok_or_else(|| {
                        let names: Vec<&str> = <$ty>::ALL.iter().map(|m| m.as_str()).collect();
                        format!(
                            "unknown metric {s:?} (expected one of {})",
                            names.join(", ")
                        )
                    })
            }
        }
    };
}

name_impls!(SizeMetric);
name_impls!(AccuracyMetric);

#[derive(Debug, Error, PartialEq)]
pub enum SkylineError {
    #[error("cannot compute a skyline of no points")]
    Empty,
    #[error("points measure different quantities: {0}")]
    Mismatch(String),
    #[error("invalid point {tagger}: {message}")]
    InvalidPoint { tagger: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricPoint {
    pub tagger: String,
    pub language: String,
    /// Kilobytes; smaller is better.
    pub size: f64,
    /// Fraction; larger is better.
    pub accuracy: f64,
    pub size_metric: SizeMetric,
    pub accuracy_metric: AccuracyMetric,
}

impl MetricPoint {
    pub fn new(tagger: &str, language: &str, size: f64, accuracy: f64) -> Self {
        MetricPoint {
            tagger: tagger.to_string(),
            language: language.to_string(),
            size,
            accuracy,
            size_metric: SizeMetric::Memory,
            accuracy_metric: AccuracyMetric::Token,
        }
    }

    pub fn from_record(
        record: &MeasurementRecord,
        size_metric: SizeMetric,
        accuracy_metric: AccuracyMetric,
    ) -> Option<Self> {
        Some(MetricPoint {
            tagger: record.tagger.clone(),
            language: record.language.clone(),
            size: size_metric.of(record)?,
            accuracy: accuracy_metric.of(record),
            size_metric,
            accuracy_metric,
        })
    }

    pub fn validate(&self) -> Result<(), SkylineError> {
        let invalid = |message: String| SkylineError::InvalidPoint {
            tagger: self.tagger.clone(),
            message,
        };
        if !(self.size > 0.0 && self.size.is_finite()) {
            return Err(invalid(format!("size {} is not positive", self.size)));
        }
        if !(0.0..=1.0).contains(&self.accuracy) {
            return Err(invalid(format!(
                "accuracy {} is outside [0, 1]",
                self.accuracy
            )));
        }
        Ok(())
    }

    fn check_comparable(&self, other: &MetricPoint) -> Result<(), SkylineError> {
        if self.size_metric != other.size_metric
            || self.accuracy_metric != other.accuracy_metric
            || self.language != other.language
        {
            return Err(SkylineError::Mismatch(format!(
                "{}/{}/{} vs {}/{}/{}",
                self.language,
                self.size_metric,
                self.accuracy_metric,
                other.language,
                other.size_metric,
                other.accuracy_metric
            )));
        }
        Ok(())
    }
}

/// Coordinate-only dominance test.
pub fn dominates_xy(p: (f64, f64), q: (f64, f64)) -> bool {
    p.0 <= q.0 && p.1 >= q.1 && (p.0 < q.0 || p.1 > q.1)
}

/// True iff `p` is no larger and no less accurate than `q`, and strictly
/// better in one of the two.
pub fn dominates(p: &MetricPoint, q: &MetricPoint) -> Result<bool, SkylineError> {
    p.check_comparable(q)?;
    Ok(dominates_xy((p.size, p.accuracy), (q.size, q.accuracy)))
}

/// Points dominated by no other point, ascending by size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skyline {
    pub points: Vec<MetricPoint>,
}

impl Skyline {
    pub fn contains(&self, point: &MetricPoint) -> bool {
        self.points.iter().any(|p| p == point)
    }

    pub fn taggers(&self) -> BTreeSet<&str> {
        self.points.iter().map(|p| p.tagger.as_str()).collect()
    }
}

/// Indices of the non-dominated coordinates, ascending by size.
///
/// Sorts by size ascending, accuracy descending; a point survives when its
/// accuracy beats every strictly smaller point and equals the best accuracy
/// at its own size.
pub fn skyline_indices(coords: &[(f64, f64)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..coords.len()).collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (coords[a], coords[b]);
        pa.0.partial_cmp(&pb.0)
            .unwrap_or(Ordering::Equal)
            .then(pb.1.partial_cmp(&pa.1).unwrap_or(Ordering::Equal))
            .then(a.cmp(&b))
    });
    let mut kept = Vec::new();
    let mut best_smaller = f64::NEG_INFINITY;
    let mut i = 0;
    while i < order.len() {
        let size = coords[order[i]].0;
        let top = coords[order[i]].1;
        let mut j = i;
        while j < order.len() && coords[order[j]].0 == size {
            if coords[order[j]].1 == top && top > best_smaller {
                kept.push(order[j]);
            }
            j += 1;
        }
        best_smaller = best_smaller.max(top);
        i = j;
    }
    kept
}

pub fn compute_skyline(points: &[MetricPoint]) -> Result<Skyline, SkylineError> {
    let first = points.first().ok_or(SkylineError::Empty)?;
    for p in points {
        p.validate()?;
        first.check_comparable(p)?;
    }
    let coords: Vec<(f64, f64)> = points.iter().map(|p| (p.size, p.accuracy)).collect();
    let points = skyline_indices(&coords)
        .into_iter()
        .map(|i| points[i].clone())
        .collect();
    Ok(Skyline { points })
}

/// Per-language skylines of the records carrying both metrics.
pub fn skylines_by_language(
    records: &[MeasurementRecord],
    size_metric: SizeMetric,
    accuracy_metric: AccuracyMetric,
) -> Result<BTreeMap<String, (Vec<MetricPoint>, Skyline)>, SkylineError> {
    let mut by_language: BTreeMap<String, Vec<MetricPoint>> = BTreeMap::new();
    for record in records {
        if let Some(point) = MetricPoint::from_record(record, size_metric, accuracy_metric) {
            by_language
                .entry(record.language.clone())
                .or_default()
                .push(point);
        }
    }
    by_language
        .into_iter()
        .map(|(language, points)| {
            let skyline = compute_skyline(&points)?;
            Ok((language, (points, skyline)))
        })
        .collect()
}

/// Number of languages on whose skyline each tagger appears. Taggers
/// without a measurement for a language are skipped for that language;
/// every tagger seen in `records` gets an entry.
pub fn skyline_counts(
    records: &[MeasurementRecord],
    size_metric: SizeMetric,
    accuracy_metric: AccuracyMetric,
) -> Result<BTreeMap<String, usize>, SkylineError> {
    let mut counts: BTreeMap<String, usize> =
        records.iter().map(|r| (r.tagger.clone(), 0)).collect();
    for (_, (_, skyline)) in skylines_by_language(records, size_metric, accuracy_metric)? {
        for tagger in skyline.taggers() {
            *counts.get_mut(tagger).expect("tagger from records") += 1;
        }
    }
    Ok(counts)
}
