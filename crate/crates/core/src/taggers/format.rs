//! Versioned plain-text model files.
//!
//! Every artifact starts with `TAGMARK <kind> <format-version> <language>`.

use std::fmt::Write as _;
use std::str::FromStr;

use super::{TaggerError, TaggerKind};

pub const MAGIC: &str = "TAGMARK";
pub const FORMAT_VERSION: u32 = 1;
pub const END: &str = "END";

pub fn write_header(out: &mut String, kind: TaggerKind, language: &str) -> Result<(), TaggerError> {
    if language.is_empty() || language.chars().any(char::is_whitespace) {
        return Err(TaggerError::InvalidConfig(format!(
            "language code {language:?}"
        )));
    }
    let _ = writeln!(out, "{MAGIC} {kind} {FORMAT_VERSION} {language}");
    Ok(())
}

pub struct Reader<'a> {
    lines: Vec<&'a str>,
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(text: &'a str) -> Result<Self, TaggerError> {
        if !text.ends_with('\n') {
            return Err(TaggerError::Truncated);
        }
        let lines = text[..text.len() - 1].split('\n').collect();
        Ok(Reader { lines, pos: 0 })
    }

    pub fn header(&mut self) -> Result<(TaggerKind, String), TaggerError> {
        let (line, text) = self.next_line()?;
        let fields: Vec<&str> = text.split(' ').collect();
        if fields.len() != 4 || fields[0] != MAGIC {
            return Err(format_error(line, "missing TAGMARK header"));
        }
        let kind = TaggerKind::from_str(fields[1]).map_err(|e| format_error(line, e))?;
        if fields[2] != FORMAT_VERSION.to_string() {
            return Err(TaggerError::VersionMismatch {
                found: fields[2].to_string(),
                expected: FORMAT_VERSION,
            });
        }
        Ok((kind, fields[3].to_string()))
    }

    pub fn is_eof(&self) -> bool {
        self.pos >= self.lines.len()
    }

    /// Returns the 1-based line number and the line.
    pub fn next_line(&mut self) -> Result<(usize, &'a str), TaggerError> {
        let line = *self.lines.get(self.pos).ok_or(TaggerError::Truncated)?;
        self.pos += 1;
        Ok((self.pos, line))
    }

    /// Reads `<name> <value>`.
    pub fn keyed<T: FromStr>(&mut self, name: &str) -> Result<T, TaggerError> {
        let (line, text) = self.next_line()?;
        let value = text
            .strip_prefix(name)
            .and_then(|rest| rest.strip_prefix(' '))
            .ok_or_else(|| format_error(line, format!("expected `{name} <value>`")))?;
        value
            .parse()
            .map_err(|_| format_error(line, format!("bad value for {name}: {value:?}")))
    }

    /// Reads a whitespace-separated list of numbers.
    pub fn numbers<T: FromStr>(&mut self, expected: usize) -> Result<Vec<T>, TaggerError> {
        let (line, text) = self.next_line()?;
        let values = parse_numbers(line, text)?;
        if values.len() != expected {
            return Err(format_error(
                line,
                format!("expected {expected} values, found {}", values.len()),
            ));
        }
        Ok(values)
    }

    pub fn finish(&mut self) -> Result<(), TaggerError> {
        if self.is_eof() {
            return Ok(());
        }
        let (line, _) = self.next_line()?;
        Err(format_error(line, "trailing content after model"))
    }

    pub fn expect_end(&mut self) -> Result<(), TaggerError> {
        let (line, text) = self.next_line()?;
        if text != END {
            return Err(format_error(line, "expected END"));
        }
        Ok(())
    }
}

pub fn parse_numbers<T: FromStr>(line: usize, text: &str) -> Result<Vec<T>, TaggerError> {
    text.split_whitespace()
        .map(|v| {
            v.parse()
                .map_err(|_| format_error(line, format!("bad number {v:?}")))
        })
        .collect()
}

pub fn format_error(line: usize, message: impl Into<String>) -> TaggerError {
    TaggerError::Format {
        line,
        message: message.into(),
    }
}

pub fn join_numbers<T: std::fmt::Display>(values: &[T]) -> String {
    let mut out = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{v}");
    }
    out
}

/// `tag:count` pairs, used for sparse per-word tag counts.
pub fn write_pairs(out: &mut String, pairs: &[(usize, u64)]) {
    for (i, (tag, count)) in pairs.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{tag}:{count}");
    }
}

pub fn parse_pairs(line: usize, text: &str, tags: usize) -> Result<Vec<(usize, u64)>, TaggerError> {
    text.split_whitespace()
        .map(|pair| {
            let (t, c) = pair
                .split_once(':')
                .ok_or_else(|| format_error(line, format!("bad pair {pair:?}")))?;
            let t: usize = t
                .parse()
                .map_err(|_| format_error(line, format!("bad tag index {t:?}")))?;
            let c: u64 = c
                .parse()
                .map_err(|_| format_error(line, format!("bad count {c:?}")))?;
            if t >= tags {
                return Err(format_error(line, format!("tag index {t} out of range")));
            }
            Ok((t, c))
        })
        .collect()
}

/// Reads `tags <n>` followed by `n` tag lines.
pub fn read_tags(reader: &mut Reader<'_>) -> Result<Vec<String>, TaggerError> {
    let n: usize = reader.keyed("tags")?;
    let mut tags = Vec::with_capacity(n);
    for _ in 0..n {
        let (line, tag) = reader.next_line()?;
        if tag.is_empty() {
            return Err(format_error(line, "empty tag"));
        }
        tags.push(tag.to_string());
    }
    Ok(tags)
}

pub fn write_tags(out: &mut String, tags: &[String]) {
    let _ = writeln!(out, "tags {}", tags.len());
    for tag in tags {
        let _ = writeln!(out, "{tag}");
    }
}
