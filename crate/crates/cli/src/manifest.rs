use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

/// Everything needed to replay a run.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub tool_version: &'static str,
    pub args: Vec<String>,
    pub config: Value,
    pub seed: u64,
    pub threads: Option<usize>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub wall_time_secs: f64,
    pub exit_code: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// `out/stump.json` -> `out/stump.manifest.json`.
pub fn manifest_path_for(output: &Path) -> PathBuf {
    let stem = output
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    output.with_file_name(format!("{stem}.manifest.json"))
}
