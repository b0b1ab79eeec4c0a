//! Experiment orchestration: curate data, train, serialize, evaluate and
//! persist one record per (tagger, language) cell.
//!
//! Output layout:
//!
//! ```text
//! <out>/manifest.json
//! <out>/data/<lang>/{train,dev,test}.tsv, test.wire
//! <out>/data/<lang>/svmtool/...           (full-stop curated copy, if used)
//! <out>/cells/<tagger>__<lang>/model/     (artifacts)
//! <out>/cells/<tagger>__<lang>/metrics.jsonl
//! <out>/cells/<tagger>__<lang>/log
//! ```

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{self, CorpusError, CurationOptions, Sentence, Treebank};
use crate::metrics::{
    self, append_record, measure_memory, read_records, EvaluateOptions, MeasurementRecord,
    MemoryCommand, MemoryLock, MetricsError, Subject,
};
use crate::taggers::external::encode_wire;
use crate::taggers::{BuiltinModel, ExternalTagger, Tagger, TaggerKind};

pub mod config;
pub mod manifest;

pub use config::{
    load_config, parse_config, ConfigError, ConfigIssue, ExperimentConfig, ExternalSpec, Metric,
    TaggerConfig, TaggerSpec,
};
pub use manifest::{cell_id, CellEntry, CellStatus, RunManifest};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("language {language}: {source}")]
    Corpus {
        language: String,
        #[source]
        source: CorpusError,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("no tagger with id {0:?} in the config")]
    UnknownTagger(String),
    #[error("no language {0:?} in the config")]
    UnknownLanguage(String),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Restricts a run to some taggers and/or languages.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CellFilter {
    pub tagger: Option<String>,
    pub language: Option<String>,
}

impl CellFilter {
    fn admits(&self, tagger: &str, language: &str) -> bool {
        self.tagger.as_deref().is_none_or(|t| t == tagger)
            && self.language.as_deref().is_none_or(|l| l == language)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOptions {
    pub filter: CellFilter,
    /// The `tagmark` binary, used for isolated inference (`serve`) and the
    /// memory baseline (`probe`). Without it built-in memory is not measured.
    pub tagmark_exe: Option<PathBuf>,
    pub lock_path: PathBuf,
    /// Redo cells even when the manifest says they are done.
    pub force: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            filter: CellFilter::default(),
            tagmark_exe: None,
            lock_path: MemoryLock::default_path(),
            force: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Train,
    Evaluate,
    Full,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    /// Cells this invocation selected.
    pub selected: Vec<String>,
    /// Cells this invocation actually worked on.
    pub executed: Vec<String>,
}

impl RunOutcome {
    pub fn failed(&self) -> Vec<&CellEntry> {
        self.selected
            .iter()
            .filter_map(|id| self.manifest.cells.get(id))
            .filter(|c| c.status == CellStatus::Failed)
            .collect()
    }

    /// 0 when every selected cell succeeded, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.failed().is_empty() {
            0
        } else {
            2
        }
    }
}

/// Curated data for one language.
struct LanguageData {
    treebank: Treebank,
    dir: PathBuf,
    compat: Option<(Treebank, PathBuf)>,
}

fn write_split_files(treebank: &Treebank, dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(io_error(dir))?;
    for (name, sentences) in [
        ("train", &treebank.train),
        ("dev", &treebank.dev),
        ("test", &treebank.test),
    ] {
        let path = dir.join(format!("{name}.tsv"));
        let mut bytes = Vec::new();
        corpus::write_curated(&mut bytes, sentences).map_err(io_error(&path))?;
        std::fs::write(&path, bytes).map_err(io_error(&path))?;
    }
    let forms: Vec<Vec<&str>> = treebank.test.iter().map(Sentence::forms).collect();
    let wire = dir.join("test.wire");
    std::fs::write(&wire, encode_wire(&forms)).map_err(io_error(&wire))?;
    Ok(())
}

fn digest_treebank(hasher: &mut Sha256, treebank: &Treebank) {
    for sentences in [&treebank.train, &treebank.dev, &treebank.test] {
        let mut bytes = Vec::new();
        corpus::write_curated(&mut bytes, sentences).expect("in-memory write");
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(&bytes);
    }
}

#[derive(Serialize)]
struct HashView<'a> {
    seed: u64,
    poll_hz: f64,
    xz_preset: u32,
    metrics: Vec<&'static str>,
    memory_baseline: bool,
    languages: BTreeMap<&'a str, String>,
    taggers: Vec<(&'a str, TaggerKind, &'a TaggerSpec)>,
}

/// sha256 over the canonical settings plus the curated data of every
/// language. Output location and parallelism do not contribute.
pub fn config_hash(config: &ExperimentConfig, treebanks: &BTreeMap<String, Treebank>) -> String {
    let languages = treebanks
        .iter()
        .map(|(code, tb)| {
            let mut hasher = Sha256::new();
            digest_treebank(&mut hasher, tb);
            (code.as_str(), hex::encode(hasher.finalize()))
        })
        .collect();
    let view = HashView {
        seed: config.seed,
        poll_hz: config.poll_hz,
        xz_preset: config.xz_preset,
        metrics: config.metrics.iter().map(|m| m.as_str()).collect(),
        memory_baseline: config.memory_baseline,
        languages,
        taggers: config
            .taggers
            .iter()
            .map(|t| (t.id.as_str(), t.spec.kind(), &t.spec))
            .collect(),
    };
    let canonical = serde_json::to_string(&view).expect("config serializes");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

/// Placeholder values for external commands.
fn substitute(text: &str, language: &str, data_dir: &Path, cell_dir: &Path) -> String {
    text.replace("{language}", language)
        .replace("{train}", &data_dir.join("train.tsv").to_string_lossy())
        .replace("{dev}", &data_dir.join("dev.tsv").to_string_lossy())
        .replace("{test}", &data_dir.join("test.tsv").to_string_lossy())
        .replace("{cell}", &cell_dir.to_string_lossy())
}

fn instantiate(
    spec: &ExternalSpec,
    language: &str,
    data_dir: &Path,
    cell_dir: &Path,
) -> ExternalTagger {
    let sub = |s: &str| substitute(s, language, data_dir, cell_dir);
    ExternalTagger {
        command: spec.tagger.command.iter().map(|s| sub(s)).collect(),
        env: spec
            .tagger
            .env
            .iter()
            .map(|(k, v)| (k.clone(), sub(v)))
            .collect(),
        workdir: spec.tagger.workdir.clone(),
        artifacts: spec
            .tagger
            .artifacts
            .iter()
            .map(|p| PathBuf::from(sub(&p.to_string_lossy())))
            .collect(),
    }
}

/// Appends timestamped lines to a cell's log file.
struct CellLog {
    path: PathBuf,
}

impl CellLog {
    fn line(&self, message: &str) {
        let stamp = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true);
        if let Ok(mut file) = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
        {
            let _ = writeln!(file, "{stamp} {message}");
        }
    }
}

struct Context<'a> {
    config: &'a ExperimentConfig,
    options: &'a RunOptions,
    out: PathBuf,
    data: BTreeMap<String, LanguageData>,
    hash: String,
    baseline_kb: Option<f64>,
}

struct CellUpdate {
    status: CellStatus,
    cause: Option<String>,
    artifacts: Vec<PathBuf>,
    record: Option<PathBuf>,
}

impl Context<'_> {
    fn cell_dir(&self, tagger: &str, language: &str) -> PathBuf {
        self.out.join("cells").join(cell_id(tagger, language))
    }

    fn relative(&self, path: &Path) -> PathBuf {
        path.strip_prefix(&self.out)
            .map(Path::to_path_buf)
            .unwrap_or_else(|_| path.to_path_buf())
    }

    fn absolute(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.out.join(path)
        }
    }

    fn data_for(&self, tagger: &TaggerConfig, language: &str) -> (&Treebank, &Path) {
        let data = &self.data[language];
        match (&tagger.spec, &data.compat) {
            (TaggerSpec::External(e), Some((tb, dir))) if e.svmtool_compat => (tb, dir),
            _ => (&data.treebank, &data.dir),
        }
    }

    fn train(
        &self,
        tagger: &TaggerConfig,
        language: &str,
        log: &CellLog,
    ) -> Result<Vec<PathBuf>, String> {
        let cell = self.cell_dir(&tagger.id, language);
        let (treebank, data_dir) = self.data_for(tagger, language);
        let started = Instant::now();
        let artifacts = match &tagger.spec {
            TaggerSpec::Builtin(spec) => {
                let model_dir = cell.join("model");
                if model_dir.exists() {
                    std::fs::remove_dir_all(&model_dir).map_err(|e| e.to_string())?;
                }
                let mut model = spec
                    .train(&treebank.train, &treebank.dev)
                    .map_err(|e| e.to_string())?;
                model.set_language(language);
                if let BuiltinModel::Brill(m) = &model {
                    log.line(&format!("learned {} brill rules", m.num_rules()));
                }
                model.serialize(&model_dir).map_err(|e| e.to_string())?
            }
            TaggerSpec::External(spec) => {
                let tagger = instantiate(spec, language, data_dir, &cell);
                if let Some(train) = &spec.train_command {
                    let args: Vec<String> = train
                        .iter()
                        .map(|s| substitute(s, language, data_dir, &cell))
                        .collect();
                    run_training_command(&args, &tagger, log)?;
                }
                tagger.check_artifacts().map_err(|e| e.to_string())?;
                tagger.artifacts.clone()
            }
        };
        log.line(&format!(
            "trained in {:.2}s",
            started.elapsed().as_secs_f64()
        ));
        Ok(artifacts)
    }

    fn evaluate(
        &self,
        tagger: &TaggerConfig,
        language: &str,
        artifacts: &[PathBuf],
        log: &CellLog,
    ) -> Result<MeasurementRecord, String> {
        let cell = self.cell_dir(&tagger.id, language);
        let (treebank, data_dir) = self.data_for(tagger, language);
        let wire = data_dir.join("test.wire");
        let config = self.config;
        let mut options = EvaluateOptions {
            memory: None,
            memory_baseline_kb: self.baseline_kb,
            lock_path: self.options.lock_path.clone(),
            poll_hz: config.poll_hz,
            model_size: config.wants(Metric::ModelSize),
            compressed_size: config.wants(Metric::CompressedSize),
            xz_preset: config.xz_preset,
            config_hash: self.hash.clone(),
        };
        let record = match &tagger.spec {
            TaggerSpec::Builtin(_) => {
                let model = BuiltinModel::deserialize(artifacts).map_err(|e| e.to_string())?;
                if config.wants(Metric::Memory) {
                    match &self.options.tagmark_exe {
                        Some(exe) => {
                            let model_path = artifacts.first().ok_or("no model artifact")?;
                            options.memory = Some(
                                MemoryCommand::new([
                                    exe.to_string_lossy().into_owned(),
                                    "serve".into(),
                                    "--model".into(),
                                    model_path.to_string_lossy().into_owned(),
                                ])
                                .with_stdin(&wire),
                            );
                        }
                        None => log.line(
                            "memory not measured: no tagmark executable for isolated inference",
                        ),
                    }
                }
                let subject = Subject {
                    id: &tagger.id,
                    kind: model.kind(),
                    tagger: &model,
                    artifacts,
                };
                metrics::evaluate(&subject, treebank, &options)
            }
            TaggerSpec::External(spec) => {
                let external = instantiate(spec, language, data_dir, &cell);
                external.check_artifacts().map_err(|e| e.to_string())?;
                if config.wants(Metric::Memory) {
                    options.memory = Some(MemoryCommand {
                        command: external.command.clone(),
                        env: external.env.clone().into_iter().collect(),
                        workdir: external.workdir.clone(),
                        stdin: Some(wire.clone()),
                    });
                }
                let subject = Subject {
                    id: &tagger.id,
                    kind: TaggerKind::External,
                    tagger: &external,
                    artifacts,
                };
                metrics::evaluate(&subject, treebank, &options)
            }
        }
        .map_err(|e| e.to_string())?;
        log.line(&format!(
            "token accuracy {:.4}, sentence accuracy {:.4}",
            record.accuracy.token_accuracy, record.accuracy.sentence_accuracy
        ));
        Ok(record)
    }

    fn process(
        &self,
        tagger: &TaggerConfig,
        language: &str,
        stage: Stage,
        previous: Option<&CellEntry>,
    ) -> CellUpdate {
        let cell = self.cell_dir(&tagger.id, language);
        let log = CellLog {
            path: cell.join("log"),
        };
        let metrics_path = cell.join("metrics.jsonl");
        let fail = |cause: String, artifacts: Vec<PathBuf>| {
            log.line(&format!("failed: {cause}"));
            CellUpdate {
                status: CellStatus::Failed,
                cause: Some(cause),
                artifacts,
                record: None,
            }
        };
        if let Err(e) = std::fs::create_dir_all(&cell) {
            return fail(e.to_string(), Vec::new());
        }
        // a record exists only for evaluated cells
        let _ = std::fs::remove_file(&metrics_path);

        let reusable = previous
            .filter(|p| matches!(p.status, CellStatus::Trained | CellStatus::Evaluated))
            .filter(|p| !p.artifacts.is_empty())
            .map(|p| {
                p.artifacts
                    .iter()
                    .map(|a| self.absolute(a))
                    .collect::<Vec<_>>()
            })
            .filter(|a| a.iter().all(|p| p.exists()));
        let artifacts = match (stage, reusable) {
            (Stage::Evaluate, Some(a)) => a,
            (Stage::Evaluate, None) => {
                return fail(
                    "not trained; run `tagmark train` first".to_string(),
                    Vec::new(),
                )
            }
            (Stage::Full, Some(a)) if !self.options.force => a,
            _ => {
                log.line(&format!("training {} on {language}", tagger.id));
                match self.train(tagger, language, &log) {
                    Ok(a) => a,
                    Err(cause) => return fail(cause, Vec::new()),
                }
            }
        };
        let rel: Vec<PathBuf> = artifacts.iter().map(|a| self.relative(a)).collect();
        if stage == Stage::Train {
            return CellUpdate {
                status: CellStatus::Trained,
                cause: None,
                artifacts: rel,
                record: None,
            };
        }
        match self.evaluate(tagger, language, &artifacts, &log) {
            Ok(record) => match append_record(&metrics_path, &record) {
                Ok(()) => CellUpdate {
                    status: CellStatus::Evaluated,
                    cause: None,
                    artifacts: rel,
                    record: Some(self.relative(&metrics_path)),
                },
                Err(e) => fail(e.to_string(), rel),
            },
            Err(cause) => CellUpdate {
                status: CellStatus::Failed,
                cause: Some(cause.clone()),
                artifacts: rel,
                record: None,
            }
            .logged(&log, &cause),
        }
    }
}

impl CellUpdate {
    fn logged(self, log: &CellLog, cause: &str) -> Self {
        log.line(&format!("failed: {cause}"));
        self
    }
}

fn run_training_command(
    args: &[String],
    tagger: &ExternalTagger,
    log: &CellLog,
) -> Result<(), String> {
    let (program, rest) = args.split_first().ok_or("empty train command")?;
    let mut cmd = Command::new(program);
    cmd.args(rest).envs(&tagger.env);
    if let Some(dir) = &tagger.workdir {
        cmd.current_dir(dir);
    }
    log.line(&format!("running {}", args.join(" ")));
    let output = cmd
        .output()
        .map_err(|e| format!("cannot start {program}: {e}"))?;
    let stderr = String::from_utf8_lossy(&output.stderr);
    if !output.status.success() {
        return Err(format!(
            "train command exited with {}; stderr: {}",
            output.status,
            stderr.trim_end()
        ));
    }
    Ok(())
}

fn load_languages(
    config: &ExperimentConfig,
    out: &Path,
) -> Result<BTreeMap<String, LanguageData>, HarnessError> {
    let needs_compat = config
        .taggers
        .iter()
        .any(|t| matches!(&t.spec, TaggerSpec::External(e) if e.svmtool_compat));
    config
        .languages
        .par_iter()
        .map(|(code, lang)| {
            let corpus_error = |source| HarnessError::Corpus {
                language: code.clone(),
                source,
            };
            let treebank = corpus::load_treebank(&lang.path, code).map_err(corpus_error)?;
            let dir = out.join("data").join(code);
            write_split_files(&treebank, &dir)?;
            let compat = if needs_compat {
                let options = CurationOptions {
                    svmtool_compat: true,
                };
                let tb =
                    corpus::load_treebank_with(&lang.path, code, &options).map_err(corpus_error)?;
                let compat_dir = dir.join("svmtool");
                write_split_files(&tb, &compat_dir)?;
                Some((tb, compat_dir))
            } else {
                None
            };
            Ok((
                code.clone(),
                LanguageData {
                    treebank,
                    dir,
                    compat,
                },
            ))
        })
        .collect()
}

/// Mean RSS of an idle `tagmark probe`, used as the baseline column.
fn measure_baseline(
    exe: &Path,
    config: &ExperimentConfig,
    lock: &Path,
) -> Result<f64, HarnessError> {
    let command = MemoryCommand::new([
        exe.to_string_lossy().into_owned(),
        "probe".into(),
        "--mb".into(),
        "0".into(),
        "--hold-ms".into(),
        "2000".into(),
    ]);
    let _lock = MemoryLock::acquire(lock)?;
    Ok(measure_memory(&command, config.poll_hz)?.avg_kb)
}

/// Runs `stage` for the selected cells and updates the manifest.
pub fn run_stage(
    config: &ExperimentConfig,
    options: &RunOptions,
    stage: Stage,
) -> Result<RunOutcome, HarnessError> {
    if let Some(t) = &options.filter.tagger {
        if config.tagger(t).is_none() {
            return Err(HarnessError::UnknownTagger(t.clone()));
        }
    }
    if let Some(l) = &options.filter.language {
        if !config.languages.contains_key(l) {
            return Err(HarnessError::UnknownLanguage(l.clone()));
        }
    }
    let out = config.output.clone();
    std::fs::create_dir_all(&out).map_err(io_error(&out))?;
    let out = out.canonicalize().map_err(io_error(&out))?;

    let data = load_languages(config, &out)?;
    let treebanks: BTreeMap<String, Treebank> = data
        .iter()
        .map(|(k, v)| (k.clone(), v.treebank.clone()))
        .collect();
    let hash = config_hash(config, &treebanks);
    let mut manifest = match RunManifest::load(&out)? {
        Some(m) if m.config_hash == hash => m,
        Some(m) => {
            log::warn!(
                "config hash changed ({} -> {hash}); starting a fresh manifest",
                m.config_hash
            );
            RunManifest::new(&hash)
        }
        None => RunManifest::new(&hash),
    };

    let mut selected = Vec::new();
    let mut work = Vec::new();
    for tagger in &config.taggers {
        for language in config.languages.keys() {
            if !options.filter.admits(&tagger.id, language) {
                continue;
            }
            let id = cell_id(&tagger.id, language);
            selected.push(id.clone());
            let entry = manifest.entry_mut(&tagger.id, language).clone();
            let done = match stage {
                Stage::Train => matches!(entry.status, CellStatus::Trained | CellStatus::Evaluated),
                Stage::Evaluate | Stage::Full => {
                    entry.status == CellStatus::Evaluated
                        && entry.record.as_ref().is_some_and(|r| out.join(r).exists())
                }
            };
            if done && !options.force {
                log::info!("{id}: already done, skipping");
                continue;
            }
            work.push((tagger, language.clone(), entry, id));
        }
    }
    manifest.save(&out)?;

    let baseline_kb = match (&options.tagmark_exe, stage) {
        (Some(exe), Stage::Evaluate | Stage::Full)
            if config.memory_baseline && config.wants(Metric::Memory) && !work.is_empty() =>
        {
            Some(measure_baseline(exe, config, &options.lock_path)?)
        }
        _ => None,
    };
    let ctx = Context {
        config,
        options,
        out: out.clone(),
        data,
        hash,
        baseline_kb,
    };

    let executed: Vec<String> = work.iter().map(|w| w.3.clone()).collect();
    let shared = Mutex::new((manifest, None::<HarnessError>));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| HarnessError::Manifest(e.to_string()))?;
    pool.install(|| {
        work.par_iter()
            .for_each(|(tagger, language, previous, id)| {
                log::info!("{id}: starting");
                let update = catch_unwind(AssertUnwindSafe(|| {
                    ctx.process(tagger, language, stage, Some(previous))
                }))
                .unwrap_or_else(|panic| {
                    let cause = panic
                        .downcast_ref::<String>()
                        .cloned()
                        .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                        .unwrap_or_else(|| "panic".to_string());
                    CellUpdate {
                        status: CellStatus::Failed,
                        cause: Some(format!("panic: {cause}")),
                        artifacts: Vec::new(),
                        record: None,
                    }
                });
                match update.status {
                    CellStatus::Failed => {
                        log::warn!("{id}: failed: {}", update.cause.as_deref().unwrap_or(""))
                    }
                    status => log::info!("{id}: {status:?}"),
                }
                let mut guard = shared.lock().unwrap_or_else(|p| p.into_inner());
                let (manifest, error) = &mut *guard;
                let entry = manifest.entry_mut(&tagger.id, language);
                entry.status = update.status;
                entry.cause = update.cause;
                entry.artifacts = update.artifacts;
                entry.record = update.record;
                if let Err(e) = manifest.save(&ctx.out) {
                    error.get_or_insert(e);
                }
            });
    });
    let (manifest, error) = shared.into_inner().unwrap_or_else(|p| p.into_inner());
    if let Some(e) = error {
        return Err(e);
    }
    Ok(RunOutcome {
        manifest,
        selected,
        executed,
    })
}

/// Trains, serializes and evaluates every cell not already evaluated.
pub fn run_experiment(
    config: &ExperimentConfig,
    options: &RunOptions,
) -> Result<RunOutcome, HarnessError> {
    run_stage(config, options, Stage::Full)
}

/// Records of all evaluated cells in `out`, in cell order.
pub fn collect_records(out: &Path) -> Result<Vec<MeasurementRecord>, HarnessError> {
    let manifest = RunManifest::load(out)?
        .ok_or_else(|| HarnessError::Manifest(format!("no manifest in {}", out.display())))?;
    let mut records = Vec::new();
    for cell in manifest
        .cells
        .values()
        .filter(|c| c.status == CellStatus::Evaluated)
    {
        if let Some(path) = &cell.record {
            records.extend(read_records(&out.join(path))?);
        }
    }
    Ok(records)
}
