//! Accuracy and size tables as CSV and GitHub-flavored markdown.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::metrics::MeasurementRecord;
use crate::skyline::{AccuracyMetric, SizeMetric};

pub const MISSING: &str = "-";

/// A labeled grid of optional values with averages over present cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub title: String,
    pub corner: String,
    pub rows: Vec<String>,
    pub columns: Vec<String>,
    /// `cells[row][column]`, already formatted; `None` renders as "-".
    pub cells: Vec<Vec<Option<String>>>,
    pub footnotes: Vec<String>,
}

impl Table {
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "### {}\n", self.title);
        let _ = write!(out, "| {} |", escape_md(&self.corner));
        for c in &self.columns {
            let _ = write!(out, " {} |", escape_md(c));
        }
        out.push_str("\n|---|");
        for _ in &self.columns {
            out.push_str("---:|");
        }
        out.push('\n');
        for (label, row) in self.rows.iter().zip(&self.cells) {
            let _ = write!(out, "| {} |", escape_md(label));
            for cell in row {
                let _ = write!(out, " {} |", cell.as_deref().unwrap_or(MISSING));
            }
            out.push('\n');
        }
        if !self.footnotes.is_empty() {
            out.push('\n');
            for note in &self.footnotes {
                let _ = writeln!(out, "{note}  ");
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(vec![]);
        let header =
            std::iter::once(self.corner.as_str()).chain(self.columns.iter().map(String::as_str));
        writer.write_record(header).expect("in-memory csv");
        for (label, row) in self.rows.iter().zip(&self.cells) {
            let cells = row.iter().map(|c| c.as_deref().unwrap_or(MISSING));
            writer
                .write_record(std::iter::once(label.as_str()).chain(cells))
                .expect("in-memory csv");
        }
        String::from_utf8(writer.into_inner().expect("in-memory csv")).expect("utf-8 input")
    }
}

fn escape_md(text: &str) -> String {
    text.replace('|', "\\|")
}

pub fn format_percent(fraction: f64) -> String {
    format!("{:.2}", fraction * 100.0)
}

/// Scientific notation with two decimals, e.g. `1.99e5`.
pub fn format_kb(kb: f64) -> String {
    format!("{kb:.2e}")
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// The last record for each (tagger, language).
pub fn latest_records(
    records: &[MeasurementRecord],
) -> BTreeMap<(String, String), &MeasurementRecord> {
    let mut latest = BTreeMap::new();
    for record in records {
        if latest
            .insert((record.tagger.clone(), record.language.clone()), record)
            .is_some()
        {
            log::warn!(
                "several records for {} / {}; using the last",
                record.tagger,
                record.language
            );
        }
    }
    latest
}

fn taggers_and_languages(records: &[MeasurementRecord]) -> (Vec<String>, Vec<String>) {
    let taggers: BTreeSet<&str> = records.iter().map(|r| r.tagger.as_str()).collect();
    let languages: BTreeSet<&str> = records.iter().map(|r| r.language.as_str()).collect();
    (
        taggers.into_iter().map(str::to_string).collect(),
        languages.into_iter().map(str::to_string).collect(),
    )
}

/// Languages as rows, taggers as columns, with an average row and column.
pub fn accuracy_table(records: &[MeasurementRecord], metric: AccuracyMetric) -> Table {
    let latest = latest_records(records);
    let (taggers, languages) = taggers_and_languages(records);
    let value = |tagger: &String, language: &String| {
        latest
            .get(&(tagger.clone(), language.clone()))
            .map(|r| metric.of(r))
    };
    let mut cells = Vec::new();
    let mut all = Vec::new();
    for language in &languages {
        let present: Vec<f64> = taggers.iter().filter_map(|t| value(t, language)).collect();
        all.extend(&present);
        let mut row: Vec<Option<String>> = taggers
            .iter()
            .map(|t| value(t, language).map(format_percent))
            .collect();
        row.push(mean(&present).map(format_percent));
        cells.push(row);
    }
    let mut avg_row = Vec::new();
    let mut footnotes = Vec::new();
    for tagger in &taggers {
        let present: Vec<f64> = languages.iter().filter_map(|l| value(tagger, l)).collect();
        if present.len() < languages.len() {
            footnotes.push(format!(
                "* {tagger}: average over {} of {} languages",
                present.len(),
                languages.len()
            ));
        }
        avg_row.push(mean(&present).map(format_percent));
    }
    avg_row.push(mean(&all).map(format_percent));
    cells.push(avg_row);

    let mut columns = taggers.clone();
    columns.push("Avg.".to_string());
    let mut rows = languages;
    rows.push("Avg.".to_string());
    Table {
        title: format!("{} on test set (%)", metric.label()),
        corner: "language".to_string(),
        rows,
        columns,
        cells,
        footnotes,
    }
}

/// Taggers as rows, size metrics as columns, averaged across languages.
pub fn size_table(records: &[MeasurementRecord]) -> Table {
    let latest = latest_records(records);
    let (taggers, languages) = taggers_and_languages(records);
    let mut cells = Vec::new();
    let mut footnotes = Vec::new();
    for tagger in &taggers {
        let mine: Vec<&MeasurementRecord> = languages
            .iter()
            .filter_map(|l| latest.get(&(tagger.clone(), l.clone())).copied())
            .collect();
        if mine.len() < languages.len() {
            footnotes.push(format!(
                "* {tagger}: average over {} of {} languages",
                mine.len(),
                languages.len()
            ));
        }
        cells.push(
            SizeMetric::ALL
                .iter()
                .map(|m| {
                    let values: Vec<f64> = mine.iter().filter_map(|r| m.of(r)).collect();
                    mean(&values).map(format_kb)
                })
                .collect(),
        );
    }
    Table {
        title: "Average size after training (kB)".to_string(),
        corner: "tagger".to_string(),
        rows: taggers,
        columns: SizeMetric::ALL
            .iter()
            .map(|m| m.label().to_string())
            .collect(),
        cells,
        footnotes,
    }
}

/// Tagger, size metric, count rows for skyline counts.
pub fn counts_csv(counts: &BTreeMap<SizeMetric, BTreeMap<String, usize>>) -> String {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(vec![]);
    writer
        .write_record(["size_metric", "tagger", "languages_on_skyline"])
        .expect("in-memory csv");
    for (metric, per_tagger) in counts {
        for (tagger, count) in per_tagger {
            writer
                .write_record([metric.as_str(), tagger.as_str(), &count.to_string()])
                .expect("in-memory csv");
        }
    }
    String::from_utf8(writer.into_inner().expect("in-memory csv")).expect("utf-8 input")
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::metrics::{AccuracyResult, SizeResult};
    use crate::taggers::TaggerKind;

    pub(crate) fn record(
        tagger: &str,
        language: &str,
        token: f64,
        memory: f64,
    ) -> MeasurementRecord {
        MeasurementRecord {
            tagger: tagger.into(),
            kind: TaggerKind::Unigram,
            language: language.into(),
            treebank: "T".into(),
            accuracy: AccuracyResult {
                token_accuracy: token,
                sentence_accuracy: token / 2.0,
                token_count: 10,
                sentence_count: 2,
            },
            size: SizeResult {
                memory_avg_kb: Some(memory),
                model_kb: Some(memory / 10.0),
                model_compressed_kb: Some(memory / 100.0),
                ..SizeResult::default()
            },
            xz_preset: 6,
            poll_hz: 2.0,
            started_at: String::new(),
            finished_at: String::new(),
            config_hash: "h".into(),
            tool_version: "0".into(),
        }
    }

    #[test]
    fn single_record_table() {
        let table = accuracy_table(
            &[record("tnt", "en", 0.8015, 1000.0)],
            AccuracyMetric::Token,
        );
        assert_eq!(table.rows, vec!["en", "Avg."]);
        assert_eq!(table.columns, vec!["tnt", "Avg."]);
        for row in &table.cells {
            for cell in row {
                assert_eq!(cell.as_deref(), Some("80.15"));
            }
        }
        assert!(table.footnotes.is_empty());
    }

    #[test]
    fn missing_cells_and_partial_averages() {
        let records = vec![
            record("a", "en", 0.9, 1.0),
            record("a", "da", 0.7, 1.0),
            record("b", "en", 0.5, 1.0),
        ];
        let table = accuracy_table(&records, AccuracyMetric::Token);
        // rows: da, en, Avg.; columns: a, b, Avg.
        assert_eq!(
            table.cells[0],
            vec![Some("70.00".into()), None, Some("70.00".into())]
        );
        assert_eq!(
            table.cells[1],
            vec![
                Some("90.00".into()),
                Some("50.00".into()),
                Some("70.00".into())
            ]
        );
        assert_eq!(
            table.cells[2],
            vec![
                Some("80.00".into()),
                Some("50.00".into()),
                Some("70.00".into())
            ]
        );
        assert_eq!(table.footnotes, vec!["* b: average over 1 of 2 languages"]);
        let md = table.to_markdown();
        assert!(md.contains("| da | 70.00 | - | 70.00 |"), "{md}");
        let csv = table.to_csv();
        assert!(
            csv.starts_with("language,a,b,Avg.\r\nda,70.00,-,70.00\r\n"),
            "{csv}"
        );
    }

    #[test]
    fn size_table_uses_scientific_notation() {
        let records = vec![
            record("hmm", "en", 0.9, 199_000.0),
            record("hmm", "da", 0.9, 201_000.0),
        ];
        let table = size_table(&records);
        assert_eq!(table.cells[0][0].as_deref(), Some("2.00e5"));
        assert_eq!(table.cells[0][1].as_deref(), Some("2.00e4"));
    }

    #[test]
    fn csv_quotes_special_fields() {
        let table = Table {
            title: "t".into(),
            corner: "x".into(),
            rows: vec!["a,b".into()],
            columns: vec!["say \"hi\"".into()],
            cells: vec![vec![None]],
            footnotes: vec![],
        };
        assert_eq!(table.to_csv(), "x,\"say \"\"hi\"\"\"\r\n\"a,b\",-\r\n");
    }
}
