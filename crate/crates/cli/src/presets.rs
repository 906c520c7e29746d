//! Shipped experiment files.

use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

pub const EXTENSION: &str = "cfg";

pub fn default_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("presets")
}

/// Preset names and paths in `dir`, sorted by name.
pub fn list(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let entries = std::fs::read_dir(dir)
        .map_err(|e| CliError::Usage(format!("cannot read preset directory {}: {e}", dir.display())))?;
    let mut out: Vec<(String, PathBuf)> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == EXTENSION))
        .filter_map(|p| Some((p.file_stem()?.to_str()?.to_string(), p)))
        .collect();
    if out.is_empty() {
        return Err(CliError::Usage(format!("no presets (*.{EXTENSION}) found in {}", dir.display())));
    }
    out.sort();
    Ok(out)
}

/// The `description` line of a preset without validating the rest.
pub fn description(path: &Path) -> String {
    std::fs::read_to_string(path)
        .ok()
        .and_then(|s| s.parse::<toml::Table>().ok())
        .and_then(|t| t.get("description").and_then(|d| d.as_str()).map(str::to_string))
        .unwrap_or_else(|| "(no description)".into())
}

/// A path to an existing file, or the name of a preset in `dir`.
pub fn resolve(arg: &str, dir: &Path) -> Result<PathBuf> {
    let direct = PathBuf::from(arg);
    if direct.is_file() {
        return Ok(direct);
    }
    for candidate in [dir.join(arg), dir.join(format!("{arg}.{EXTENSION}"))] {
        if candidate.is_file() {
            return Ok(candidate);
        }
    }
    Err(CliError::Usage(format!("{arg} is neither a config file nor a preset in {}", dir.display())))
}
