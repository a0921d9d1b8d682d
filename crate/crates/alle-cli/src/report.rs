//! Report files: canonical JSON with an echoed configuration, plus optional
//! CSV curves.
//!
//! Every JSON report embeds the fully resolved configuration of the run that
//! produced it, so any report can be regenerated bit for bit from its own
//! echo and the referenced inputs. Field order is fixed by the structures,
//! numbers carry full precision, and files end with a newline.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use alle_core::error::Result;

/// Report envelope: the command, its resolved configuration, and the payload.
#[derive(Serialize)]
pub struct Report<C: Serialize, P: Serialize> {
    pub command: &'static str,
    pub config: C,
    pub report: P,
}

/// Writes a JSON report and returns its path.
pub fn write_json<C: Serialize, P: Serialize>(
    out_dir: &Path,
    name: &str,
    report: &Report<C, P>,
) -> Result<PathBuf> {
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join(name);
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    fs::write(&path, text)?;
    Ok(path)
}

/// Writes a CSV curve next to the JSON reports.
pub fn write_csv(out_dir: &Path, name: &str, content: &str) -> Result<PathBuf> {
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join(name);
    fs::write(&path, content)?;
    Ok(path)
}

/// Human-readable one-liner values: four decimals, matching the table style
/// of the criterion reports.
pub fn fmt4(v: f64) -> String {
    format!("{v:.4}")
}
