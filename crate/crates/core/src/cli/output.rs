//! Artifact writing: atomic file replacement, versioned CSV and digests.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

pub const SCHEMA_VERSION: u32 = 1;

/// First line of every CSV artifact.
pub fn csv_banner() -> String {
    format!(
        "# pulsed-rotor v{} schema={}\n",
        env!("CARGO_PKG_VERSION"),
        SCHEMA_VERSION
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputDigest {
    pub path: String,
    pub sha256: String,
}

/// Writes `bytes` to `path` through a temporary file in the same directory,
/// so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<OutputDigest> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(OutputDigest {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(bytes)),
    })
}

/// Renders rows into CSV text under the versioned banner.
pub fn render_csv<R, I>(header: &[&str], rows: I) -> Result<Vec<u8>>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut buf = csv_banner().into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header).map_err(csv_io)?;
        for row in rows {
            w.write_record(row).map_err(csv_io)?;
        }
        w.flush()?;
    }
    Ok(buf)
}

fn csv_io(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}

/// Shortest round-trip formatting, so equal values print identically.
pub fn num(x: f64) -> String {
    format!("{x}")
}
