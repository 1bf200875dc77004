//! Dataset archive: gzip-compressed JSON tagged with a format version.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use motiv_core::Dataset;
use serde::Deserialize;
use serde_json::value::RawValue;

pub const FORMAT_TAG: &str = "motiv-dataset/1";

#[derive(Debug, thiserror::Error)]
pub enum ArchiveError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: not a dataset archive: {message}")]
    Format { path: PathBuf, message: String },
    #[error("{path}: unsupported archive format {found:?}, expected {FORMAT_TAG:?}")]
    Version { path: PathBuf, found: String },
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> ArchiveError + '_ {
    move |source| ArchiveError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes the archive through a temporary sibling file and renames it into
/// place, so a failed write never leaves a partial archive at `path`.
pub fn write_archive(path: &Path, dataset: &Dataset) -> Result<(), ArchiveError> {
    let tmp = path.with_extension(format!("partial-{}", std::process::id()));
    let result = (|| {
        let file = File::create(&tmp).map_err(io(&tmp))?;
        let mut gz = GzEncoder::new(BufWriter::new(file), Compression::default());
        write!(gz, "{{\"format\":\"{FORMAT_TAG}\",\"dataset\":").map_err(io(&tmp))?;
        gz.write_all(dataset.to_json().as_bytes()).map_err(io(&tmp))?;
        gz.write_all(b"}\n").map_err(io(&tmp))?;
        let mut inner = gz.finish().map_err(io(&tmp))?;
        inner.flush().map_err(io(&tmp))?;
        inner.into_inner().map_err(|e| io(&tmp)(e.into_error()))?.sync_all().map_err(io(&tmp))?;
        fs::rename(&tmp, path).map_err(io(path))
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

#[derive(Deserialize)]
struct Envelope<'a> {
    format: String,
    #[serde(borrow)]
    dataset: &'a RawValue,
}

pub fn read_archive(path: &Path) -> Result<Dataset, ArchiveError> {
    let file = File::open(path).map_err(io(path))?;
    let mut text = String::new();
    GzDecoder::new(BufReader::new(file))
        .read_to_string(&mut text)
        .map_err(|e| ArchiveError::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    let env: Envelope = serde_json::from_str(&text).map_err(|e| ArchiveError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    if env.format != FORMAT_TAG {
        return Err(ArchiveError::Version {
            path: path.to_path_buf(),
            found: env.format,
        });
    }
    Dataset::from_json(env.dataset.get()).map_err(|e| ArchiveError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
