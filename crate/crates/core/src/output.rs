//! Result files. Everything is written to a temporary sibling first and
//! renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

/// What produced a set of output files.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentManifest {
    pub subcommand: String,
    pub parameters: serde_json::Value,
    pub seed: Option<u64>,
    pub version: String,
    pub wall_seconds: f64,
    pub outputs: Vec<String>,
}

impl ExperimentManifest {
    pub fn new(subcommand: &str, parameters: serde_json::Value, seed: Option<u64>) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            parameters,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_seconds: 0.0,
            outputs: Vec::new(),
        }
    }
}

fn temp_path(path: &Path) -> PathBuf {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!(".{name}.tmp-{}", std::process::id()))
}

/// Write `bytes` to `path` atomically.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let tmp = temp_path(path);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

/// CSV with one header row taken from the field names of `T`.
pub fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    write_atomic(path, &csv_bytes(rows)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Hex SHA-256 of a file.
pub fn file_digest(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        a: u32,
        b: f64,
    }

    #[test]
    fn csv_header_and_rows() {
        let bytes = csv_bytes(&[Row { a: 1, b: 0.5 }, Row { a: 2, b: 1.25 }]).unwrap();
        assert_eq!(String::from_utf8(bytes).unwrap(), "a,b\n1,0.5\n2,1.25\n");
    }

    #[test]
    fn atomic_write_leaves_no_temp() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("x.csv");
        write_csv(&p, &[Row { a: 3, b: 2.0 }]).unwrap();
        write_csv(&p, &[Row { a: 4, b: 2.0 }]).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "a,b\n4,2.0\n");
        let names: Vec<_> = fs::read_dir(p.parent().unwrap()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names.len(), 1);
        assert_eq!(file_digest(&p).unwrap().len(), 64);
    }

    #[test]
    fn manifest_json() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        let m = ExperimentManifest::new("rates", serde_json::json!({"p": 0.3}), None);
        write_json(&p, &m).unwrap();
        let back: serde_json::Value = serde_json::from_str(&fs::read_to_string(&p).unwrap()).unwrap();
        assert_eq!(back["subcommand"], "rates");
        assert_eq!(back["parameters"]["p"], 0.3);
    }
}
