//! On-disk and xz-compressed artifact sizes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use xz2::write::XzEncoder;

use super::{MetricsError, BYTES_PER_KB};

/// The xz format's default compression level.
pub const DEFAULT_XZ_PRESET: u32 = 6;

fn missing(path: &Path, source: std::io::Error) -> MetricsError {
    MetricsError::Artifact {
        path: path.to_path_buf(),
        source,
    }
}

pub fn total_bytes(artifacts: &[PathBuf]) -> Result<u64, MetricsError> {
    artifacts
        .iter()
        .map(|p| {
            std::fs::metadata(p)
                .map(|m| m.len())
                .map_err(|e| missing(p, e))
        })
        .sum()
}

/// Sum of artifact byte lengths in kilobytes (1 kB = 1000 bytes).
pub fn model_size(artifacts: &[PathBuf]) -> Result<f64, MetricsError> {
    Ok(total_bytes(artifacts)? as f64 / BYTES_PER_KB)
}

/// Byte length of the artifacts archived with tar and compressed with xz.
///
/// Archive headers carry only the file name, size and fixed metadata, so
/// the output depends on file names and contents alone.
pub fn compressed_bytes(artifacts: &[PathBuf], preset: u32) -> Result<u64, MetricsError> {
    for path in artifacts {
        std::fs::metadata(path).map_err(|e| missing(path, e))?;
    }
    let compression = |e: std::io::Error| MetricsError::Compression(e.to_string());
    let archive = tempfile::NamedTempFile::new().map_err(compression)?;
    let encoder = XzEncoder::new(
        BufWriter::new(archive.reopen().map_err(compression)?),
        preset,
    );
    let mut builder = tar::Builder::new(encoder);
    for path in artifacts {
        let mut file = File::open(path).map_err(|e| missing(path, e))?;
        let len = file.metadata().map_err(|e| missing(path, e))?.len();
        let name = path
            .file_name()
            .map(PathBuf::from)
            .unwrap_or_else(|| path.clone());
        let mut header = tar::Header::new_gnu();
        header.set_size(len);
        header.set_mode(0o644);
        header.set_mtime(0);
        header.set_uid(0);
        header.set_gid(0);
        header.set_entry_type(tar::EntryType::Regular);
        builder
            .append_data(&mut header, &name, &mut file)
            .map_err(compression)?;
    }
    let mut writer = builder
        .into_inner()
        .map_err(compression)?
        .finish()
        .map_err(compression)?;
    writer.flush().map_err(compression)?;
    drop(writer);
    let len = archive.as_file().metadata().map_err(compression)?.len();
    Ok(len)
}

/// xz-compressed archive size in kilobytes.
pub fn compressed_size(artifacts: &[PathBuf], preset: u32) -> Result<f64, MetricsError> {
    Ok(compressed_bytes(artifacts, preset)? as f64 / BYTES_PER_KB)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngCore, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn write(dir: &Path, name: &str, bytes: &[u8]) -> PathBuf {
        let path = dir.join(name);
        std::fs::write(&path, bytes).unwrap();
        path
    }

    #[test]
    fn empty_list_is_zero() {
        assert_eq!(model_size(&[]).unwrap(), 0.0);
    }

    #[test]
    fn one_million_bytes_is_1000_kb() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(dir.path(), "m", &vec![b'a'; 1_000_000]);
        assert_eq!(model_size(&[path]).unwrap(), 1000.0);
    }

    #[test]
    fn missing_path_is_named() {
        let err = model_size(&[PathBuf::from("/nonexistent/x.model")]).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/x.model"));
        assert!(compressed_size(&[PathBuf::from("/nonexistent/x.model")], 6).is_err());
    }

    // Golden: Python tarfile (same header metadata) + lzma.compress(preset=6).
    #[test]
    fn repeated_byte_compresses_to_golden_size() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(dir.path(), "repeat.bin", &vec![b'a'; 1_000_000]);
        let bytes = compressed_bytes(&[path], DEFAULT_XZ_PRESET).unwrap();
        assert_eq!(bytes, GOLDEN_REPEATED);
        assert!((bytes as f64 / 1000.0) < 5.0);
    }

    #[test]
    fn random_bytes_do_not_compress() {
        let dir = tempfile::tempdir().unwrap();
        let mut data = vec![0u8; 1_000_000];
        ChaCha8Rng::seed_from_u64(7).fill_bytes(&mut data);
        let path = write(dir.path(), "random.bin", &data);
        let kb = compressed_size(std::slice::from_ref(&path), DEFAULT_XZ_PRESET).unwrap();
        assert!(kb >= 0.95 * model_size(std::slice::from_ref(&path)).unwrap());
        assert_eq!(
            compressed_bytes(&[path], DEFAULT_XZ_PRESET).unwrap(),
            GOLDEN_RANDOM
        );
    }

    #[test]
    fn compression_is_deterministic_across_copies() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let text = "TAGMARK unigram 1 en\n\tNOUN\nthe\tDET\n".repeat(50);
        let pa = write(a.path(), "unigram.model", text.as_bytes());
        std::thread::sleep(std::time::Duration::from_millis(20));
        let pb = write(b.path(), "unigram.model", text.as_bytes());
        assert_eq!(
            compressed_bytes(&[pa], 6).unwrap(),
            compressed_bytes(&[pb], 6).unwrap()
        );
    }

    const GOLDEN_REPEATED: u64 = 328;
    // Golden: pinned from the first run of this archiver.
    const GOLDEN_RANDOM: u64 = 1_001_064;
}
