//! Result tables, skyline plots and skyline-count charts from records.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::metrics::MeasurementRecord;
use crate::skyline::{self, AccuracyMetric, SizeMetric, SkylineError};

pub mod svg;
pub mod tables;

pub use svg::{counts_svg, skyline_svg};
pub use tables::{accuracy_table, size_table, Table};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("no records to report")]
    Empty,
    #[error(transparent)]
    Skyline(#[from] SkylineError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReportOptions {
    /// Render every size × accuracy pair instead of memory × token only.
    pub all_pairs: bool,
}

/// Files written by [`emit_report`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReportBundle {
    pub files: Vec<PathBuf>,
}

fn pairs(options: &ReportOptions) -> Vec<(SizeMetric, AccuracyMetric)> {
    if options.all_pairs {
        SizeMetric::ALL
            .iter()
            .flat_map(|&s| AccuracyMetric::ALL.iter().map(move |&a| (s, a)))
            .collect()
    } else {
        vec![(SizeMetric::Memory, AccuracyMetric::Token)]
    }
}

/// Skyline counts for every size metric under one accuracy metric.
pub fn counts_by_size_metric(
    records: &[MeasurementRecord],
    accuracy_metric: AccuracyMetric,
) -> Result<BTreeMap<SizeMetric, BTreeMap<String, usize>>, SkylineError> {
    let latest: Vec<MeasurementRecord> = tables::latest_records(records)
        .into_values()
        .cloned()
        .collect();
    let mut out = BTreeMap::new();
    for metric in SizeMetric::ALL {
        if latest.iter().any(|r| metric.of(r).is_some()) {
            out.insert(
                metric,
                skyline::skyline_counts(&latest, metric, accuracy_metric)?,
            );
        }
    }
    Ok(out)
}

fn provenance(records: &[MeasurementRecord]) -> String {
    let hashes: BTreeSet<&str> = records.iter().map(|r| r.config_hash.as_str()).collect();
    let versions: BTreeSet<&str> = records.iter().map(|r| r.tool_version.as_str()).collect();
    let presets: BTreeSet<u32> = records.iter().map(|r| r.xz_preset).collect();
    let mut out = String::from("### Provenance\n\n");
    let join = |set: &BTreeSet<&str>| set.iter().copied().collect::<Vec<_>>().join(", ");
    let _ = writeln!(out, "- config hash: {}", join(&hashes));
    let _ = writeln!(out, "- tagmark version: {}", join(&versions));
    let presets: Vec<String> = presets.iter().map(u32::to_string).collect();
    let _ = writeln!(out, "- xz preset: {}", presets.join(", "));
    let _ = writeln!(out, "- records: {}", records.len());
    out
}

fn write(path: PathBuf, contents: &str, bundle: &mut ReportBundle) -> Result<(), ReportError> {
    std::fs::write(&path, contents).map_err(|source| ReportError::Io {
        path: path.clone(),
        source,
    })?;
    bundle.files.push(path);
    Ok(())
}

/// Writes tables, per-language skyline plots and count charts into `dir`.
pub fn emit_report(
    records: &[MeasurementRecord],
    dir: &Path,
    options: &ReportOptions,
) -> Result<ReportBundle, ReportError> {
    if records.is_empty() {
        return Err(ReportError::Empty);
    }
    let io = |source| ReportError::Io {
        path: dir.to_path_buf(),
        source,
    };
    std::fs::create_dir_all(dir.join("plots")).map_err(io)?;
    let mut bundle = ReportBundle::default();

    let token = accuracy_table(records, AccuracyMetric::Token);
    let sentence = accuracy_table(records, AccuracyMetric::Sentence);
    let sizes = size_table(records);
    write(dir.join("token_accuracy.csv"), &token.to_csv(), &mut bundle)?;
    write(
        dir.join("sentence_accuracy.csv"),
        &sentence.to_csv(),
        &mut bundle,
    )?;
    write(dir.join("sizes.csv"), &sizes.to_csv(), &mut bundle)?;

    let latest: Vec<MeasurementRecord> = tables::latest_records(records)
        .into_values()
        .cloned()
        .collect();
    let languages: BTreeSet<&str> = latest.iter().map(|r| r.language.as_str()).collect();
    let mut plots = Vec::new();
    for (size_metric, accuracy_metric) in pairs(options) {
        for (language, (points, skyline)) in
            skyline::skylines_by_language(&latest, size_metric, accuracy_metric)?
        {
            let name = format!("plots/skyline_{language}_{size_metric}_{accuracy_metric}.svg");
            write(
                dir.join(&name),
                &skyline_svg(&points, &skyline),
                &mut bundle,
            )?;
            plots.push(name);
        }
    }

    let accuracy_metrics: Vec<AccuracyMetric> = if options.all_pairs {
        AccuracyMetric::ALL.to_vec()
    } else {
        vec![AccuracyMetric::Token]
    };
    let mut count_sections = String::new();
    for accuracy_metric in accuracy_metrics {
        let counts = counts_by_size_metric(&latest, accuracy_metric)?;
        let stem = format!("skyline_counts_{accuracy_metric}");
        write(
            dir.join(format!("{stem}.csv")),
            &tables::counts_csv(&counts),
            &mut bundle,
        )?;
        write(
            dir.join(format!("{stem}.svg")),
            &counts_svg(&counts, languages.len()),
            &mut bundle,
        )?;
        let _ = writeln!(
            count_sections,
            "![skyline counts ({accuracy_metric})]({stem}.svg)\n"
        );
    }

    let mut md = String::from("# Tagger size and accuracy report\n\n");
    for table in [&token, &sentence, &sizes] {
        md.push_str(&table.to_markdown());
        md.push('\n');
    }
    md.push_str("### Skyline plots\n\n");
    for plot in &plots {
        let _ = writeln!(md, "![{plot}]({plot})\n");
    }
    md.push_str("### Skyline counts\n\n");
    md.push_str(&count_sections);
    md.push_str(&provenance(&latest));
    write(dir.join("report.md"), &md, &mut bundle)?;
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::tables::tests::record;
    use super::*;

    #[test]
    fn empty_records_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            emit_report(&[], dir.path(), &ReportOptions::default()),
            Err(ReportError::Empty)
        ));
    }

    #[test]
    fn bundle_layout() {
        let records = vec![
            record("a", "en", 0.9, 100.0),
            record("b", "en", 0.8, 10.0),
            record("a", "da", 0.7, 100.0),
        ];
        let dir = tempfile::tempdir().unwrap();
        let bundle = emit_report(&records, dir.path(), &ReportOptions::default()).unwrap();
        let names: Vec<String> = bundle
            .files
            .iter()
            .map(|p| p.strip_prefix(dir.path()).unwrap().display().to_string())
            .collect();
        assert_eq!(
            names,
            vec![
                "token_accuracy.csv",
                "sentence_accuracy.csv",
                "sizes.csv",
                "plots/skyline_da_memory_token.svg",
                "plots/skyline_en_memory_token.svg",
                "skyline_counts_token.csv",
                "skyline_counts_token.svg",
                "report.md",
            ]
        );
        let counts = std::fs::read_to_string(dir.path().join("skyline_counts_token.csv")).unwrap();
        assert!(counts.contains("memory,a,2\r\nmemory,b,1\r\n"), "{counts}");
    }

    #[test]
    fn all_pairs_renders_six_plots_per_language() {
        let records = vec![record("a", "en", 0.9, 100.0)];
        let dir = tempfile::tempdir().unwrap();
        let bundle = emit_report(&records, dir.path(), &ReportOptions { all_pairs: true }).unwrap();
        let plots = bundle
            .files
            .iter()
            .filter(|p| p.to_string_lossy().contains("plots/"))
            .count();
        assert_eq!(plots, 6);
    }
}
