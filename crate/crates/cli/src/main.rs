//! `tagmark`: train, evaluate and compare part-of-speech taggers.

use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};

use tagmark_core::harness::{
    self, collect_records, load_config, CellFilter, CellStatus, ExperimentConfig, RunOptions,
    RunOutcome, Stage,
};
use tagmark_core::metrics::{read_records, MemoryLock};
use tagmark_core::report::{emit_report, ReportOptions};
use tagmark_core::skyline::{skylines_by_language, AccuracyMetric, SizeMetric};
use tagmark_core::taggers::external::{decode_wire, encode_wire};
use tagmark_core::{BuiltinModel, MeasurementRecord, Tagger};

#[derive(Parser)]
#[command(
    name = "tagmark",
    version,
    about = "Benchmark part-of-speech taggers on size and accuracy"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train, evaluate and report every (tagger, language) cell.
    Run(RunArgs),
    /// Train and serialize models without evaluating them.
    Train(CellArgs),
    /// Evaluate trained models on the test split.
    Evaluate(CellArgs),
    /// Evaluate trained cells and print their records as JSON lines.
    Measure(CellArgs),
    /// Print the per-language skylines of the recorded measurements.
    Skyline(SkylineArgs),
    /// Write tables and plots from the recorded measurements.
    Report(ReportArgs),
    /// Tag wire-framed sentences from stdin with a built-in model.
    #[command(hide = true)]
    Serve {
        #[arg(long)]
        model: PathBuf,
    },
    /// Allocate and touch memory, then idle; calibrates memory measurement.
    #[command(hide = true)]
    Probe {
        #[arg(long, default_value_t = 0)]
        mb: usize,
        #[arg(long, default_value_t = 3000)]
        hold_ms: u64,
    },
}

#[derive(Args)]
struct CellArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Only this language code.
    #[arg(long)]
    language: Option<String>,
    /// Only this tagger id.
    #[arg(long)]
    tagger: Option<String>,
    /// Output directory, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Redo cells that are already done.
    #[arg(long)]
    force: bool,
    /// Worker threads, overriding the config.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    cells: CellArgs,
    /// Render every size/accuracy plot pair.
    #[arg(long)]
    all_pairs: bool,
}

#[derive(Args)]
struct Source {
    /// Experiment config; its output directory holds the records.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory of a run.
    #[arg(long)]
    out: Option<PathBuf>,
    /// A JSON-lines record file instead of a run directory.
    #[arg(long, conflicts_with_all = ["config", "out"])]
    records: Option<PathBuf>,
    /// Only this language code.
    #[arg(long)]
    language: Option<String>,
    /// Only this tagger id.
    #[arg(long)]
    tagger: Option<String>,
}

#[derive(Args)]
struct SkylineArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, default_value = "memory")]
    size_metric: SizeMetric,
    #[arg(long, default_value = "token")]
    accuracy_metric: AccuracyMetric,
    /// Print JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    source: Source,
    /// Report directory; defaults to <out>/report.
    #[arg(long)]
    dir: Option<PathBuf>,
    /// Render every size/accuracy plot pair.
    #[arg(long)]
    all_pairs: bool,
}

fn load(args: &CellArgs) -> Result<(ExperimentConfig, RunOptions)> {
    let mut config = load_config(&args.config)?;
    if let Some(out) = &args.out {
        config.output = out.clone();
    }
    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            bail!("--jobs must be at least 1");
        }
        config.jobs = jobs;
    }
    let options = RunOptions {
        filter: CellFilter {
            tagger: args.tagger.clone(),
            language: args.language.clone(),
        },
        tagmark_exe: std::env::current_exe().ok(),
        lock_path: MemoryLock::default_path(),
        force: args.force,
    };
    Ok((config, options))
}

fn summarize(outcome: &RunOutcome) {
    eprintln!(
        "{} cells selected, {} run, {} failed",
        outcome.selected.len(),
        outcome.executed.len(),
        outcome.failed().len()
    );
    for cell in outcome.failed() {
        eprintln!(
            "  failed {}/{}: {}",
            cell.tagger,
            cell.language,
            cell.cause.as_deref().unwrap_or("unknown cause")
        );
    }
}

fn selected_records(out: &Path, outcome: &RunOutcome) -> Result<Vec<MeasurementRecord>> {
    let mut records = Vec::new();
    for id in &outcome.selected {
        if let Some(cell) = outcome.manifest.cells.get(id) {
            if let (CellStatus::Evaluated, Some(path)) = (cell.status, &cell.record) {
                records.extend(read_records(&out.join(path))?);
            }
        }
    }
    Ok(records)
}

fn source_records(source: &Source) -> Result<(Vec<MeasurementRecord>, Option<PathBuf>)> {
    let (mut records, out) = if let Some(path) = &source.records {
        (read_records(path)?, None)
    } else {
        let out = match (&source.out, &source.config) {
            (Some(out), _) => out.clone(),
            (None, Some(config)) => load_config(config)?.output,
            (None, None) => bail!("one of --config, --out or --records is required"),
        };
        (collect_records(&out)?, Some(out))
    };
    records.retain(|r| {
        source.language.as_deref().is_none_or(|l| l == r.language)
            && source.tagger.as_deref().is_none_or(|t| t == r.tagger)
    });
    if records.is_empty() {
        bail!("no evaluated records found");
    }
    Ok((records, out))
}

fn write_report(records: &[MeasurementRecord], dir: &Path, all_pairs: bool) -> Result<()> {
    let bundle = emit_report(records, dir, &ReportOptions { all_pairs })?;
    eprintln!(
        "wrote {} report files to {}",
        bundle.files.len(),
        dir.display()
    );
    Ok(())
}

fn stage(args: &CellArgs, stage: Stage) -> Result<(ExperimentConfig, RunOutcome)> {
    let (config, options) = load(args)?;
    let outcome = harness::run_stage(&config, &options, stage)?;
    summarize(&outcome);
    Ok((config, outcome))
}

fn serve(model: &Path) -> Result<()> {
    let model = BuiltinModel::load(model)?;
    let sentences = decode_wire(std::io::stdin().lock())?;
    let tags: Vec<Vec<String>> = sentences
        .iter()
        .map(|s| model.tag(&s.iter().map(String::as_str).collect::<Vec<_>>()))
        .collect();
    let mut out = BufWriter::new(std::io::stdout().lock());
    out.write_all(encode_wire(&tags).as_bytes())?;
    out.flush()?;
    Ok(())
}

fn probe(mb: usize, hold_ms: u64) {
    let mut block = vec![0u8; mb * 1_000_000];
    // touch every page so it becomes resident
    for i in (0..block.len()).step_by(4096) {
        block[i] = 1;
    }
    std::thread::sleep(Duration::from_millis(hold_ms));
    std::hint::black_box(&block);
}

fn print_skylines(args: &SkylineArgs) -> Result<()> {
    let (records, _) = source_records(&args.source)?;
    let skylines = skylines_by_language(&records, args.size_metric, args.accuracy_metric)?;
    if skylines.is_empty() {
        bail!("no records carry the {} metric", args.size_metric);
    }
    let mut out = std::io::stdout().lock();
    if args.json {
        let view: std::collections::BTreeMap<_, _> = skylines
            .iter()
            .map(|(lang, (_, skyline))| (lang, &skyline.points))
            .collect();
        writeln!(out, "{}", serde_json::to_string_pretty(&view)?)?;
        return Ok(());
    }
    for (language, (points, skyline)) in &skylines {
        writeln!(
            out,
            "{language}: {} of {} taggers on the skyline",
            skyline.points.len(),
            points.len()
        )?;
        for p in &skyline.points {
            writeln!(
                out,
                "  {}\t{:.2e} kB\t{:.2}%",
                p.tagger,
                p.size,
                p.accuracy * 100.0
            )?;
        }
    }
    Ok(())
}

fn execute(cmd: Cmd) -> Result<i32> {
    match cmd {
        Cmd::Run(args) => {
            let (config, outcome) = stage(&args.cells, Stage::Full)?;
            match collect_records(&config.output) {
                Ok(records) if !records.is_empty() => {
                    write_report(&records, &config.output.join("report"), args.all_pairs)?
                }
                Ok(_) => log::warn!("no evaluated cells; report skipped"),
                Err(e) => return Err(e.into()),
            }
            Ok(outcome.exit_code())
        }
        Cmd::Train(args) => Ok(stage(&args, Stage::Train)?.1.exit_code()),
        Cmd::Evaluate(args) => Ok(stage(&args, Stage::Evaluate)?.1.exit_code()),
        Cmd::Measure(args) => {
            let (config, outcome) = stage(&args, Stage::Evaluate)?;
            let mut out = std::io::stdout().lock();
            for record in selected_records(&config.output, &outcome)? {
                writeln!(out, "{}", serde_json::to_string(&record)?)?;
            }
            Ok(outcome.exit_code())
        }
        Cmd::Skyline(args) => print_skylines(&args).map(|()| 0),
        Cmd::Report(args) => {
            let (records, out) = source_records(&args.source)?;
            let dir = match (args.dir, out) {
                (Some(dir), _) => dir,
                (None, Some(out)) => out.join("report"),
                (None, None) => bail!("--dir is required with --records"),
            };
            write_report(&records, &dir, args.all_pairs)?;
            Ok(0)
        }
        Cmd::Serve { model } => serve(&model).map(|()| 0),
        Cmd::Probe { mb, hold_ms } => {
            probe(mb, hold_ms);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
