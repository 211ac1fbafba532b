use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CliError, Result};

pub fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    }
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    ensure_parent(path)?;
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(CliError::io(path))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Opens a buffered file for writing, creating parent directories.
pub fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    ensure_parent(path)?;
    Ok(BufWriter::new(fs::File::create(path).map_err(CliError::io(path))?))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = create(path)?;
    f.write_all(text.as_bytes()).map_err(CliError::io(path))?;
    f.flush().map_err(CliError::io(path))
}

/// Removes a directory tree this tool owns so stale files cannot survive a
/// rerun.
pub fn reset_dir(dir: &Path) -> Result<()> {
    if dir.exists() {
        fs::remove_dir_all(dir).map_err(CliError::io(dir))?;
    }
    fs::create_dir_all(dir).map_err(CliError::io(dir))
}
