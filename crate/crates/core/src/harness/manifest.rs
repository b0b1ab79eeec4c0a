//! Run manifest: per-cell status, persisted atomically as JSON.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Pending,
    Trained,
    Evaluated,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellEntry {
    pub tagger: String,
    pub language: String,
    pub status: CellStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cause: Option<String>,
    /// Model files, relative to the output directory.
    #[serde(default)]
    pub artifacts: Vec<PathBuf>,
    /// Metrics file, relative to the output directory; set iff evaluated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub tool_version: String,
    pub cells: BTreeMap<String, CellEntry>,
}

/// Directory name of a (tagger, language) cell.
pub fn cell_id(tagger: &str, language: &str) -> String {
    format!("{tagger}__{language}")
}

impl RunManifest {
    pub fn new(config_hash: &str) -> Self {
        RunManifest {
            config_hash: config_hash.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            cells: BTreeMap::new(),
        }
    }

    pub fn path(out: &Path) -> PathBuf {
        out.join(MANIFEST_FILE)
    }

    pub fn load(out: &Path) -> Result<Option<Self>, HarnessError> {
        let path = Self::path(out);
        match std::fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text)
                .map(Some)
                .map_err(|e| HarnessError::Manifest(format!("{}: {e}", path.display()))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(source) => Err(HarnessError::Io { path, source }),
        }
    }

    /// Writes to a temporary file and renames it into place.
    pub fn save(&self, out: &Path) -> Result<(), HarnessError> {
        let path = Self::path(out);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes") + "\n";
        let mut tmp = tempfile::NamedTempFile::new_in(out).map_err(|source| HarnessError::Io {
            path: out.to_path_buf(),
            source,
        })?;
        std::io::Write::write_all(&mut tmp, text.as_bytes()).map_err(|source| {
            HarnessError::Io {
                path: path.clone(),
                source,
            }
        })?;
        tmp.persist(&path).map_err(|e| HarnessError::Io {
            path,
            source: e.error,
        })?;
        Ok(())
    }

    pub fn entry_mut(&mut self, tagger: &str, language: &str) -> &mut CellEntry {
        self.cells
            .entry(cell_id(tagger, language))
            .or_insert_with(|| CellEntry {
                tagger: tagger.to_string(),
                language: language.to_string(),
                status: CellStatus::Pending,
                cause: None,
                artifacts: Vec::new(),
                record: None,
            })
    }

    pub fn get(&self, tagger: &str, language: &str) -> Option<&CellEntry> {
        self.cells.get(&cell_id(tagger, language))
    }

    pub fn count(&self, status: CellStatus) -> usize {
        self.cells.values().filter(|c| c.status == status).count()
    }

    pub fn failed(&self) -> impl Iterator<Item = &CellEntry> {
        self.cells
            .values()
            .filter(|c| c.status == CellStatus::Failed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn save_and_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(RunManifest::load(dir.path()).unwrap(), None);
        let mut manifest = RunManifest::new("abc");
        let cell = manifest.entry_mut("tnt", "en");
        cell.status = CellStatus::Failed;
        cell.cause = Some("boom".into());
        manifest.save(dir.path()).unwrap();
        assert_eq!(
            RunManifest::load(dir.path()).unwrap(),
            Some(manifest.clone())
        );
        assert_eq!(manifest.count(CellStatus::Failed), 1);
        assert_eq!(
            manifest.get("tnt", "en").unwrap().cause.as_deref(),
            Some("boom")
        );
    }
}
