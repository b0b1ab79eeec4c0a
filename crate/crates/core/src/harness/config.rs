//! Experiment configuration (TOML) and its validation.
//!
//! ```toml
//! output = "out"          # relative paths resolve against the config file
//! jobs = 2
//! poll_hz = 2.0
//! xz_preset = 6
//! metrics = ["token_accuracy", "sentence_accuracy", "memory", "model_size", "compressed_size"]
//!
//! [languages.en]
//! path = "ud/UD_English-GUM"
//!
//! [[taggers]]
//! kind = "tnt"
//! beam = 1000
//!
//! [[taggers]]
//! id = "svmtool"
//! kind = "external"
//! train_command = ["svmtool-train", "{train}", "{cell}/model"]
//! command = ["svmtool-tag", "{cell}/model"]
//! artifacts = ["{cell}/model"]
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use toml::Value;

use crate::metrics::{DEFAULT_POLL_HZ, DEFAULT_XZ_PRESET};
use crate::taggers::{BuiltinSpec, ExternalTagger, TaggerKind};

/// One validation problem, located by a path such as `taggers[2].kind`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            f.write_str(&self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config is not valid TOML: {0}")]
    Syntax(String),
    #[error("invalid config:\n{}", .0.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<ConfigIssue>),
}

impl ConfigError {
    pub fn issues(&self) -> &[ConfigIssue] {
        match self {
            ConfigError::Invalid(issues) => issues,
            _ => &[],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    TokenAccuracy,
    SentenceAccuracy,
    Memory,
    ModelSize,
    CompressedSize,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::TokenAccuracy,
        Metric::SentenceAccuracy,
        Metric::Memory,
        Metric::ModelSize,
        Metric::CompressedSize,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::TokenAccuracy => "token_accuracy",
            Metric::SentenceAccuracy => "sentence_accuracy",
            Metric::Memory => "memory",
            Metric::ModelSize => "model_size",
            Metric::CompressedSize => "compressed_size",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LanguageConfig {
    /// UD treebank directory holding `*-ud-{train,dev,test}.conllu`.
    pub path: PathBuf,
}

/// An external tagger; strings may contain `{language}`, `{train}`,
/// `{dev}`, `{test}` and `{cell}` placeholders.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExternalSpec {
    pub tagger: ExternalTagger,
    pub train_command: Option<Vec<String>>,
    /// Feed curated data with a full stop closing every sentence.
    pub svmtool_compat: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum TaggerSpec {
    Builtin(BuiltinSpec),
    External(ExternalSpec),
}

impl TaggerSpec {
    pub fn kind(&self) -> TaggerKind {
        match self {
            TaggerSpec::Builtin(spec) => spec.kind(),
            TaggerSpec::External(_) => TaggerKind::External,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaggerConfig {
    pub id: String,
    pub spec: TaggerSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub output: PathBuf,
    pub seed: u64,
    pub jobs: usize,
    pub poll_hz: f64,
    pub xz_preset: u32,
    pub metrics: BTreeSet<Metric>,
    /// Measure an idle calibration process once and record it per row.
    pub memory_baseline: bool,
    pub languages: BTreeMap<String, LanguageConfig>,
    pub taggers: Vec<TaggerConfig>,
}

impl ExperimentConfig {
    pub fn wants(&self, metric: Metric) -> bool {
        self.metrics.contains(&metric)
    }

    pub fn tagger(&self, id: &str) -> Option<&TaggerConfig> {
        self.taggers.iter().find(|t| t.id == id)
    }
}

const TOP_LEVEL_KEYS: [&str; 8] = [
    "output",
    "seed",
    "jobs",
    "poll_hz",
    "xz_preset",
    "metrics",
    "memory_baseline",
    "languages",
];
const EXTERNAL_KEYS: [&str; 8] = [
    "id",
    "kind",
    "command",
    "train_command",
    "env",
    "workdir",
    "artifacts",
    "svmtool_compat",
];

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_config(&text, &base)
}

/// Parses and validates a config; relative paths resolve against `base`.
pub fn parse_config(text: &str, base: &Path) -> Result<ExperimentConfig, ConfigError> {
    let doc: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
    validate_config(&doc, base)
}

struct Checker {
    issues: Vec<ConfigIssue>,
}

impl Checker {
    fn issue(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.issues.push(ConfigIssue {
            path: path.into(),
            message: message.into(),
        });
    }

    fn integer(
        &mut self,
        table: &toml::Table,
        key: &str,
        path: &str,
        default: i64,
        range: (i64, i64),
    ) -> i64 {
        match table.get(key) {
            None => default,
            Some(Value::Integer(v)) if (range.0..=range.1).contains(v) => *v,
            Some(Value::Integer(v)) => {
                self.issue(
                    path,
                    format!("{v} is out of range {}..={}", range.0, range.1),
                );
                default
            }
            Some(other) => {
                self.issue(
                    path,
                    format!("expected an integer, found {}", other.type_str()),
                );
                default
            }
        }
    }

    fn string_list(&mut self, value: &Value, path: &str) -> Vec<String> {
        match value {
            Value::Array(items) => items
                .iter()
                .enumerate()
                .filter_map(|(i, v)| match v {
                    Value::String(s) => Some(s.clone()),
                    other => {
                        self.issue(
                            format!("{path}[{i}]"),
                            format!("expected a string, found {}", other.type_str()),
                        );
                        None
                    }
                })
                .collect(),
            other => {
                self.issue(
                    path,
                    format!("expected an array of strings, found {}", other.type_str()),
                );
                Vec::new()
            }
        }
    }
}

fn resolve(base: &Path, path: &str) -> PathBuf {
    let p = PathBuf::from(path);
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && !id.contains("__")
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
        && !id.starts_with('.')
}

fn has_placeholder(s: &str) -> bool {
    ["{language}", "{train}", "{dev}", "{test}", "{cell}"]
        .iter()
        .any(|p| s.contains(p))
}

/// Checks every field and reports all problems together.
pub fn validate_config(doc: &toml::Table, base: &Path) -> Result<ExperimentConfig, ConfigError> {
    let mut c = Checker { issues: Vec::new() };
    for key in doc.keys() {
        if !TOP_LEVEL_KEYS.contains(&key.as_str()) && key != "taggers" {
            c.issue(key.clone(), "unknown setting");
        }
    }

    let output = match doc.get("output") {
        None => base.join("out"),
        Some(Value::String(s)) if !s.is_empty() => resolve(base, s),
        Some(other) => {
            c.issue(
                "output",
                format!("expected a directory path, found {}", other.type_str()),
            );
            PathBuf::new()
        }
    };
    let seed = c.integer(doc, "seed", "seed", 0, (0, i64::MAX)) as u64;
    let jobs = c.integer(doc, "jobs", "jobs", 1, (1, 1024)) as usize;
    let xz_preset = c.integer(
        doc,
        "xz_preset",
        "xz_preset",
        i64::from(DEFAULT_XZ_PRESET),
        (0, 9),
    ) as u32;
    let poll_hz = match doc.get("poll_hz") {
        None => DEFAULT_POLL_HZ,
        Some(v) => match v.as_float().or_else(|| v.as_integer().map(|i| i as f64)) {
            Some(hz) if hz > 0.0 && hz.is_finite() && hz <= 1000.0 => hz,
            Some(hz) => {
                c.issue("poll_hz", format!("{hz} is out of range (0, 1000]"));
                DEFAULT_POLL_HZ
            }
            None => {
                c.issue(
                    "poll_hz",
                    format!("expected a number, found {}", v.type_str()),
                );
                DEFAULT_POLL_HZ
            }
        },
    };
    let memory_baseline = match doc.get("memory_baseline") {
        None => false,
        Some(Value::Boolean(b)) => *b,
        Some(other) => {
            c.issue(
                "memory_baseline",
                format!("expected a boolean, found {}", other.type_str()),
            );
            false
        }
    };

    let metrics = match doc.get("metrics") {
        None => Metric::ALL.into_iter().collect(),
        Some(value) => {
            let names = c.string_list(value, "metrics");
            let mut set = BTreeSet::new();
            for (i, name) in names.iter().enumerate() {
                match Metric::ALL.into_iter().find(|m| m.as_str() == name) {
                    Some(m) => {
                        set.insert(m);
                    }
                    None => {
                        let valid: Vec<&str> = Metric::ALL.iter().map(|m| m.as_str()).collect();
                        c.issue(
                            format!("metrics[{i}]"),
                            format!("unknown metric {name:?} (valid: {})", valid.join(", ")),
                        );
                    }
                }
            }
            set
        }
    };

    let mut languages = BTreeMap::new();
    match doc.get("languages") {
        None => c.issue("languages", "at least one language is required"),
        Some(Value::Table(table)) => {
            if table.is_empty() {
                c.issue("languages", "at least one language is required");
            }
            for (code, entry) in table {
                let path = format!("languages.{code}");
                if code.is_empty()
                    || !code
                        .chars()
                        .all(|ch| ch.is_ascii_alphanumeric() || ch == '-')
                {
                    c.issue(&path, "language code must be alphanumeric");
                }
                let Value::Table(entry) = entry else {
                    c.issue(&path, "expected a table with `path`");
                    continue;
                };
                for key in entry.keys() {
                    if key != "path" {
                        c.issue(format!("{path}.{key}"), "unknown setting");
                    }
                }
                match entry.get("path") {
                    Some(Value::String(p)) => {
                        let dir = resolve(base, p);
                        if !dir.is_dir() {
                            c.issue(
                                format!("{path}.path"),
                                format!("directory {} does not exist", dir.display()),
                            );
                        }
                        languages.insert(code.clone(), LanguageConfig { path: dir });
                    }
                    Some(other) => c.issue(
                        format!("{path}.path"),
                        format!("expected a string, found {}", other.type_str()),
                    ),
                    None => c.issue(format!("{path}.path"), "missing treebank directory"),
                }
            }
        }
        Some(other) => c.issue(
            "languages",
            format!("expected a table, found {}", other.type_str()),
        ),
    }

    let mut taggers = Vec::new();
    match doc.get("taggers") {
        None => c.issue("taggers", "at least one tagger is required"),
        Some(Value::Array(items)) => {
            if items.is_empty() {
                c.issue("taggers", "at least one tagger is required");
            }
            let mut ids = BTreeSet::new();
            for (i, item) in items.iter().enumerate() {
                let path = format!("taggers[{i}]");
                let Value::Table(entry) = item else {
                    c.issue(&path, "expected a table");
                    continue;
                };
                if let Some(tagger) = tagger_entry(&mut c, entry, &path, base) {
                    if !ids.insert(tagger.id.clone()) {
                        c.issue(
                            format!("{path}.id"),
                            format!("duplicate tagger id {:?}", tagger.id),
                        );
                    }
                    taggers.push(tagger);
                }
            }
        }
        Some(other) => c.issue(
            "taggers",
            format!("expected an array of tables, found {}", other.type_str()),
        ),
    }

    if !c.issues.is_empty() {
        return Err(ConfigError::Invalid(c.issues));
    }
    Ok(ExperimentConfig {
        output,
        seed,
        jobs,
        poll_hz,
        xz_preset,
        metrics,
        memory_baseline,
        languages,
        taggers,
    })
}

fn tagger_entry(
    c: &mut Checker,
    entry: &toml::Table,
    path: &str,
    base: &Path,
) -> Option<TaggerConfig> {
    let valid_kinds: Vec<&str> = TaggerKind::ALL.iter().map(|k| k.as_str()).collect();
    let kind = match entry.get("kind") {
        Some(Value::String(s)) => match s.parse::<TaggerKind>() {
            Ok(kind) => kind,
            Err(_) => {
                c.issue(
                    format!("{path}.kind"),
                    format!(
                        "unknown tagger kind {s:?} (valid: {})",
                        valid_kinds.join(", ")
                    ),
                );
                return None;
            }
        },
        Some(other) => {
            c.issue(
                format!("{path}.kind"),
                format!("expected a string, found {}", other.type_str()),
            );
            return None;
        }
        None => {
            c.issue(
                format!("{path}.kind"),
                format!("missing tagger kind (valid: {})", valid_kinds.join(", ")),
            );
            return None;
        }
    };
    let id = match entry.get("id") {
        None => kind.as_str().to_string(),
        Some(Value::String(s)) => s.clone(),
        Some(other) => {
            c.issue(
                format!("{path}.id"),
                format!("expected a string, found {}", other.type_str()),
            );
            return None;
        }
    };
    if !valid_id(&id) {
        c.issue(
            format!("{path}.id"),
            format!("{id:?} must use letters, digits, '-', '_' or '.', and no '__'"),
        );
    }

    let spec = if kind == TaggerKind::External {
        TaggerSpec::External(external_entry(c, entry, path, base)?)
    } else {
        let mut params = entry.clone();
        params.remove("id");
        if kind == TaggerKind::Unigram {
            for key in params.keys().filter(|k| *k != "kind") {
                c.issue(
                    format!("{path}.{key}"),
                    "unknown setting for the unigram tagger",
                );
            }
            TaggerSpec::Builtin(BuiltinSpec::Unigram)
        } else {
            match Value::Table(params).try_into::<BuiltinSpec>() {
                Ok(spec) => {
                    builtin_ranges(c, &spec, path);
                    TaggerSpec::Builtin(spec)
                }
                Err(e) => {
                    c.issue(path, e.message().to_string());
                    return None;
                }
            }
        }
    };
    Some(TaggerConfig { id, spec })
}

fn builtin_ranges(c: &mut Checker, spec: &BuiltinSpec, path: &str) {
    match spec {
        BuiltinSpec::Hmm(h) if !(h.alpha >= 0.0 && h.alpha.is_finite()) => {
            c.issue(
                format!("{path}.alpha"),
                format!("{} must be a finite number >= 0", h.alpha),
            );
        }
        BuiltinSpec::Tnt(t) if t.suffix_length > 100 => {
            c.issue(
                format!("{path}.suffix_length"),
                format!("{} is out of range 0..=100", t.suffix_length),
            );
        }
        BuiltinSpec::Brill(b) => {
            if b.threshold < 1 {
                c.issue(format!("{path}.threshold"), "must be >= 1");
            }
            if let Some(i) = b.dev_thresholds.iter().position(|&t| t < 1) {
                c.issue(format!("{path}.dev_thresholds[{i}]"), "must be >= 1");
            }
            if b.templates.is_empty() {
                c.issue(
                    format!("{path}.templates"),
                    "at least one template is required",
                );
            }
        }
        _ => {}
    }
}

fn external_entry(
    c: &mut Checker,
    entry: &toml::Table,
    path: &str,
    base: &Path,
) -> Option<ExternalSpec> {
    for key in entry.keys() {
        if !EXTERNAL_KEYS.contains(&key.as_str()) {
            c.issue(
                format!("{path}.{key}"),
                "unknown setting for an external tagger",
            );
        }
    }
    let command = match entry.get("command") {
        Some(v) => c.string_list(v, &format!("{path}.command")),
        None => Vec::new(),
    };
    if command.is_empty() {
        c.issue(
            format!("{path}.command"),
            "an external tagger needs a command",
        );
    }
    let train_command = entry.get("train_command").map(|v| {
        let cmd = c.string_list(v, &format!("{path}.train_command"));
        if cmd.is_empty() {
            c.issue(format!("{path}.train_command"), "must not be empty");
        }
        cmd
    });
    let mut env = BTreeMap::new();
    match entry.get("env") {
        None => {}
        Some(Value::Table(t)) => {
            for (k, v) in t {
                match v {
                    Value::String(s) => {
                        env.insert(k.clone(), s.clone());
                    }
                    other => c.issue(
                        format!("{path}.env.{k}"),
                        format!("expected a string, found {}", other.type_str()),
                    ),
                }
            }
        }
        Some(other) => c.issue(
            format!("{path}.env"),
            format!("expected a table, found {}", other.type_str()),
        ),
    }
    let workdir = match entry.get("workdir") {
        None => None,
        Some(Value::String(s)) => {
            let dir = resolve(base, s);
            if !dir.is_dir() {
                c.issue(
                    format!("{path}.workdir"),
                    format!("directory {} does not exist", dir.display()),
                );
            }
            Some(dir)
        }
        Some(other) => {
            c.issue(
                format!("{path}.workdir"),
                format!("expected a string, found {}", other.type_str()),
            );
            None
        }
    };
    let artifacts: Vec<PathBuf> = match entry.get("artifacts") {
        None => Vec::new(),
        Some(v) => c
            .string_list(v, &format!("{path}.artifacts"))
            .iter()
            .map(|s| {
                if has_placeholder(s) {
                    PathBuf::from(s)
                } else {
                    resolve(base, s)
                }
            })
            .collect(),
    };
    for (i, artifact) in artifacts.iter().enumerate() {
        let pending = train_command.is_some() || has_placeholder(&artifact.to_string_lossy());
        if !pending && !artifact.exists() {
            c.issue(
                format!("{path}.artifacts[{i}]"),
                format!("{} does not exist", artifact.display()),
            );
        }
    }
    let svmtool_compat = match entry.get("svmtool_compat") {
        None => false,
        Some(Value::Boolean(b)) => *b,
        Some(other) => {
            c.issue(
                format!("{path}.svmtool_compat"),
                format!("expected a boolean, found {}", other.type_str()),
            );
            false
        }
    };
    Some(ExternalSpec {
        tagger: ExternalTagger {
            command,
            env,
            workdir,
            artifacts,
        },
        train_command,
        svmtool_compat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("gum")).unwrap();
        parse_config(text, dir.path())
    }

    const MINIMAL: &str = "[languages.en]\npath = \"gum\"\n\n[[taggers]]\nkind = \"tnt\"\n";

    #[test]
    fn minimal_config_is_accepted() {
        let config = parse(MINIMAL).unwrap();
        assert_eq!(config.taggers.len(), 1);
        assert_eq!(config.taggers[0].id, "tnt");
        assert_eq!(config.poll_hz, 2.0);
        assert_eq!(config.xz_preset, 6);
        assert_eq!(config.metrics.len(), 5);
    }

    #[test]
    fn unknown_kind_names_field_and_valid_kinds() {
        let text = format!(
            "{MINIMAL}\n[[taggers]]\nkind = \"hmm\"\n\n[[taggers]]\nkind = \"svmtool-builtin\"\n"
        );
        let err = parse(&text).unwrap_err();
        let issues = err.issues();
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].path, "taggers[2].kind");
        assert!(
            issues[0]
                .message
                .contains("unigram, hmm, tnt, brill, external"),
            "{}",
            issues[0]
        );
    }

    #[test]
    fn poll_rate_zero_is_range_error() {
        let err = parse(&format!("poll_hz = 0\n{MINIMAL}")).unwrap_err();
        assert_eq!(err.issues()[0].path, "poll_hz");
        assert!(err.issues()[0].message.contains("out of range"));
    }

    #[test]
    fn errors_are_aggregated() {
        let text = "jobs = 0\nxz_preset = 12\nmetrics = [\"memory\", \"speed\"]\nbogus = 1\n\
                    [languages.en]\npath = \"nowhere\"\n\
                    [[taggers]]\nkind = \"brill\"\nthreshold = 0\n\
                    [[taggers]]\nkind = \"hmm\"\nalpha = \"x\"\n\
                    [[taggers]]\nkind = \"external\"\n";
        let err = parse(text).unwrap_err();
        let paths: Vec<&str> = err.issues().iter().map(|i| i.path.as_str()).collect();
        assert_eq!(
            paths,
            vec![
                "bogus",
                "jobs",
                "xz_preset",
                "metrics[1]",
                "languages.en.path",
                "taggers[0].threshold",
                "taggers[1]",
                "taggers[2].command",
            ]
        );
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let err = parse(&format!("{MINIMAL}\n[[taggers]]\nkind = \"tnt\"\n")).unwrap_err();
        assert_eq!(err.issues()[0].path, "taggers[1].id");
    }

    #[test]
    fn builtin_hyperparameters_are_parsed() {
        let text = "[languages.en]\npath = \"gum\"\n[[taggers]]\nid = \"tnt-b10\"\nkind = \"tnt\"\nbeam = 10\n\
                    [[taggers]]\nkind = \"brill\"\nmax_rules = 20\ntemplates = [\"prev-tag\", \"next-word\"]\n";
        let config = parse(text).unwrap();
        match &config.taggers[0].spec {
            TaggerSpec::Builtin(BuiltinSpec::Tnt(t)) => assert_eq!(t.beam, 10),
            other => panic!("{other:?}"),
        }
        match &config.taggers[1].spec {
            TaggerSpec::Builtin(BuiltinSpec::Brill(b)) => {
                assert_eq!(b.max_rules, 20);
                assert_eq!(b.templates.len(), 2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_hyperparameter_is_reported() {
        let err = parse("[languages.en]\npath = \"gum\"\n[[taggers]]\nkind = \"tnt\"\nbeem = 3\n")
            .unwrap_err();
        assert_eq!(err.issues()[0].path, "taggers[0]");
        assert!(err.issues()[0].message.contains("beem"));
    }

    #[test]
    fn external_with_placeholders() {
        let text =
            "[languages.en]\npath = \"gum\"\n[[taggers]]\nid = \"ext\"\nkind = \"external\"\n\
                    command = [\"tag\", \"{cell}/m\"]\ntrain_command = [\"train\", \"{train}\"]\n\
                    artifacts = [\"{cell}/m\"]\nsvmtool_compat = true\n";
        let config = parse(text).unwrap();
        match &config.taggers[0].spec {
            TaggerSpec::External(e) => {
                assert!(e.svmtool_compat);
                assert_eq!(e.tagger.artifacts, vec![PathBuf::from("{cell}/m")]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_error_is_fatal() {
        assert!(matches!(
            parse("languages = ["),
            Err(ConfigError::Syntax(_))
        ));
    }
}
