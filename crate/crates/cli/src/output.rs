use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use walkmax_core::Result;

use crate::args::OutputArgs;

/// Version of the JSON envelope and CSV header layout.
pub const SCHEMA_VERSION: u32 = 1;

/// Everything needed to reproduce a run: the command, the model spec as
/// given and in canonical form, every parsed flag (defaults included) and
/// the values resolved from them (grid step, grid top, x-grid).
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub command: &'static str,
    pub model: String,
    pub model_canonical: Option<String>,
    pub params: Value,
    pub resolved: Value,
    pub outputs: OutputPaths,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputPaths {
    pub json: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

/// What a subcommand produces.
pub struct Outcome {
    pub report: Value,
    /// CSV table body, header line included.
    pub table: Option<String>,
    pub resolved: Value,
    pub passed: bool,
    pub notices: Vec<String>,
    /// Additional CSV files (traces), written with the manifest header.
    pub extra: Vec<(PathBuf, String)>,
}

#[derive(Serialize)]
struct Envelope<'a> {
    schema_version: u32,
    manifest: &'a RunManifest,
    passed: bool,
    notices: &'a [String],
    report: &'a Value,
    wall_time_ms: Option<u64>,
}

/// Writes the JSON envelope (to `--json` or stdout) and the CSV table.
pub fn emit(manifest: &RunManifest, out: &OutputArgs, outcome: &Outcome, wall_time_ms: Option<u64>) -> Result<()> {
    let envelope = Envelope {
        schema_version: SCHEMA_VERSION,
        manifest,
        passed: outcome.passed,
        notices: &outcome.notices,
        report: &outcome.report,
        wall_time_ms: if out.timing { wall_time_ms } else { None },
    };
    let mut json = serde_json::to_string_pretty(&envelope)?;
    json.push('\n');
    match &out.json {
        Some(path) => write(path, &json)?,
        None => print!("{json}"),
    }
    if let (Some(path), Some(table)) = (&out.csv, &outcome.table) {
        write(path, &format!("{}{table}", manifest_comment(manifest)?))?;
    }
    for (path, contents) in &outcome.extra {
        write(path, &format!("{}{contents}", manifest_comment(manifest)?))?;
    }
    Ok(())
}

/// The manifest as a `# manifest: {…}` comment line for CSV files.
pub fn manifest_comment(manifest: &RunManifest) -> Result<String> {
    Ok(format!("# manifest: {}\n", serde_json::to_string(manifest)?))
}

pub fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents)?;
    Ok(())
}

/// CSV table from a header and pre-formatted rows.
pub fn table<I: IntoIterator<Item = String>>(header: &str, rows: I) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    s
}
