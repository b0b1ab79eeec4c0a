//! Adapter for tagger executables speaking the line-based wire protocol.
//!
//! Request and reply share one framing: one item per line, a blank line
//! after each sentence, and `##EOF##` after the last sentence. The request
//! carries forms, the reply carries tags.

use std::collections::BTreeMap;
use std::io::{self, BufRead, Read, Write};
use std::path::PathBuf;
use std::process::{Command, ExitStatus, Stdio};
use std::thread;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Sentence;

pub const EOF_MARKER: &str = "##EOF##";

#[derive(Debug, Error)]
pub enum AdapterError {
    #[error("external tagger has an empty command")]
    EmptyCommand,
    #[error("cannot start {program}: {source}")]
    Spawn {
        program: String,
        #[source]
        source: io::Error,
    },
    #[error("i/o with external tagger: {0}")]
    Io(#[from] io::Error),
    #[error("protocol error at sentence {sentence}: {message}")]
    Protocol { sentence: usize, message: String },
    #[error("external tagger exited with {status}; stderr: {stderr}")]
    Exit { status: ExitStatus, stderr: String },
    #[error("declared artifact {0} does not exist")]
    MissingArtifact(PathBuf),
}

/// An external tagger invocation; `command[0]` is the program.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalTagger {
    pub command: Vec<String>,
    #[serde(default)]
    pub env: BTreeMap<String, String>,
    #[serde(default)]
    pub workdir: Option<PathBuf>,
    /// Files whose sizes count as the model's size.
    #[serde(default)]
    pub artifacts: Vec<PathBuf>,
}

impl ExternalTagger {
    pub fn new<S: Into<String>>(command: impl IntoIterator<Item = S>) -> Self {
        ExternalTagger {
            command: command.into_iter().map(Into::into).collect(),
            ..Self::default()
        }
    }

    pub fn command(&self) -> Result<Command, AdapterError> {
        let (program, args) = self
            .command
            .split_first()
            .ok_or(AdapterError::EmptyCommand)?;
        let mut cmd = Command::new(program);
        cmd.args(args).envs(&self.env);
        if let Some(dir) = &self.workdir {
            cmd.current_dir(dir);
        }
        Ok(cmd)
    }

    pub fn check_artifacts(&self) -> Result<(), AdapterError> {
        match self.artifacts.iter().find(|p| !p.exists()) {
            Some(missing) => Err(AdapterError::MissingArtifact(missing.clone())),
            None => Ok(()),
        }
    }

    pub fn tag_sentences(&self, sentences: &[Sentence]) -> Result<Vec<Vec<String>>, AdapterError> {
        let forms: Vec<Vec<&str>> = sentences.iter().map(Sentence::forms).collect();
        external_tag(self, &forms)
    }
}

/// Encodes sentences in wire framing.
pub fn encode_wire<S: AsRef<str>>(sentences: &[Vec<S>]) -> String {
    let mut out = String::new();
    for sentence in sentences {
        for item in sentence {
            out.push_str(item.as_ref());
            out.push('\n');
        }
        out.push('\n');
    }
    out.push_str(EOF_MARKER);
    out.push('\n');
    out
}

/// Decodes wire framing. Reading stops at `##EOF##`; a final sentence
/// without its blank line is accepted.
pub fn decode_wire<R: BufRead>(reader: R) -> io::Result<Vec<Vec<String>>> {
    let mut sentences = Vec::new();
    let mut current = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line == EOF_MARKER {
            break;
        }
        if line.is_empty() {
            sentences.push(std::mem::take(&mut current));
        } else {
            current.push(line.to_string());
        }
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    Ok(sentences)
}

/// Runs the external tagger once over all sentences.
pub fn external_tag<S: AsRef<str>>(
    tagger: &ExternalTagger,
    sentences: &[Vec<S>],
) -> Result<Vec<Vec<String>>, AdapterError> {
    for (i, sentence) in sentences.iter().enumerate() {
        if sentence.is_empty() {
            return Err(AdapterError::Protocol {
                sentence: i,
                message: "empty sentence".into(),
            });
        }
        if let Some(bad) = sentence.iter().find(|f| {
            let f = f.as_ref();
            f.is_empty() || f.contains('\n') || f == EOF_MARKER
        }) {
            return Err(AdapterError::Protocol {
                sentence: i,
                message: format!("form {:?} cannot be framed", bad.as_ref()),
            });
        }
    }
    let request = encode_wire(sentences);
    let mut cmd = tagger.command()?;
    let program = tagger.command[0].clone();
    let mut child = cmd
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|source| AdapterError::Spawn { program, source })?;

    let mut stdin = child.stdin.take().expect("piped stdin");
    let writer = thread::spawn(move || {
        // a tagger that exits early closes the pipe; its exit status reports that
        let _ = stdin.write_all(request.as_bytes());
    });
    let mut stderr_pipe = child.stderr.take().expect("piped stderr");
    let stderr_reader = thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = stderr_pipe.read_to_end(&mut buf);
        String::from_utf8_lossy(&buf).into_owned()
    });
    let mut reply = Vec::new();
    child
        .stdout
        .take()
        .expect("piped stdout")
        .read_to_end(&mut reply)?;
    let status = child.wait()?;
    let _ = writer.join();
    let stderr = stderr_reader.join().unwrap_or_default();
    if !status.success() {
        return Err(AdapterError::Exit {
            status,
            stderr: stderr.trim_end().to_string(),
        });
    }
    let tags = decode_wire(reply.as_slice())?;
    for (i, sentence) in sentences.iter().enumerate() {
        let Some(reply) = tags.get(i) else {
            return Err(AdapterError::Protocol {
                sentence: i,
                message: format!("reply ended after {} sentences", tags.len()),
            });
        };
        if reply.len() != sentence.len() {
            return Err(AdapterError::Protocol {
                sentence: i,
                message: format!("expected {} tags, got {}", sentence.len(), reply.len()),
            });
        }
    }
    if tags.len() > sentences.len() {
        return Err(AdapterError::Protocol {
            sentence: sentences.len(),
            message: format!(
                "reply has {} sentences, expected {}",
                tags.len(),
                sentences.len()
            ),
        });
    }
    Ok(tags)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sh(script: &str) -> ExternalTagger {
        ExternalTagger::new(["sh", "-c", script])
    }

    #[test]
    fn wire_round_trip() {
        let sentences = vec![vec!["a", "b"], vec!["c"]];
        let text = encode_wire(&sentences);
        assert_eq!(text, "a\nb\n\nc\n\n##EOF##\n");
        assert_eq!(decode_wire(text.as_bytes()).unwrap(), sentences);
    }

    #[test]
    fn echo_noun_tagger() {
        let tagger = sh(
            r###"while IFS= read -r l; do case "$l" in "##EOF##") echo "$l";; "") echo;; *) echo NOUN;; esac; done"###,
        );
        let tags = external_tag(&tagger, &[vec!["a", "b"], vec!["c"]]).unwrap();
        assert_eq!(tags, vec![vec!["NOUN", "NOUN"], vec!["NOUN"]]);
    }

    #[test]
    fn cat_returns_forms() {
        let tags = external_tag(&ExternalTagger::new(["cat"]), &[vec!["x", "y"]]).unwrap();
        assert_eq!(tags, vec![vec!["x", "y"]]);
    }

    #[test]
    fn count_mismatch_names_sentence() {
        let tagger = sh("printf 'A\\n\\nB\\n\\n##EOF##\\n'");
        let err = external_tag(&tagger, &[vec!["a"], vec!["b", "c"]]).unwrap_err();
        assert!(
            matches!(err, AdapterError::Protocol { sentence: 1, .. }),
            "{err}"
        );
    }

    #[test]
    fn nonzero_exit_reports_stderr() {
        let err = external_tag(&sh("echo boom >&2; exit 3"), &[vec!["a"]]).unwrap_err();
        match err {
            AdapterError::Exit { stderr, .. } => assert_eq!(stderr, "boom"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn missing_program_is_spawn_error() {
        let err =
            external_tag(&ExternalTagger::new(["/nonexistent/tagger"]), &[vec!["a"]]).unwrap_err();
        assert!(matches!(err, AdapterError::Spawn { .. }));
    }

    #[test]
    fn empty_command_is_rejected() {
        assert!(matches!(
            external_tag(&ExternalTagger::default(), &[vec!["a"]]),
            Err(AdapterError::EmptyCommand)
        ));
    }

    #[test]
    fn missing_artifact_detected() {
        let mut tagger = ExternalTagger::new(["cat"]);
        tagger.artifacts.push("/nonexistent/model.bin".into());
        assert!(matches!(
            tagger.check_artifacts(),
            Err(AdapterError::MissingArtifact(_))
        ));
    }
}
