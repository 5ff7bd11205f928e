//! Artifact writing: provenance headers and all-or-nothing file creation.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::FlatConfig;
use crate::error::Result;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// What every artifact records about the run that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: Option<u64>,
    pub config: std::collections::BTreeMap<String, String>,
}

impl Provenance {
    pub fn new(command: impl Into<String>, seed: Option<u64>, config: &FlatConfig) -> Self {
        Provenance {
            tool: "permclass",
            version: VERSION,
            command: command.into(),
            seed,
            config: config.entries().clone(),
        }
    }

    /// `# `-prefixed header lines for CSV and text outputs.
    pub fn comment_lines(&self) -> Vec<String> {
        let seed = self.seed.map_or_else(|| "none".to_string(), |s| s.to_string());
        let config = self
            .config
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ");
        vec![
            format!("{} {} {}", self.tool, self.version, self.command),
            format!("seed: {seed}"),
            format!("config: {config}"),
        ]
    }

    pub fn csv(&self, body: &str) -> String {
        let mut s = String::new();
        for line in self.comment_lines() {
            s.push_str("# ");
            s.push_str(&line);
            s.push('\n');
        }
        s.push_str(body);
        s
    }

    /// `{"meta": provenance, "result": value}`, pretty printed.
    pub fn json<T: Serialize>(&self, value: &T) -> Result<String> {
        #[derive(Serialize)]
        struct Wrapped<'a, T> {
            meta: &'a Provenance,
            result: &'a T,
        }
        let mut s = serde_json::to_string_pretty(&Wrapped { meta: self, result: value })?;
        s.push('\n');
        Ok(s)
    }
}

/// The payload of a JSON artifact: its `result` field if present, else the
/// whole document.
pub fn json_result(text: &str) -> Result<serde_json::Value> {
    let mut v: serde_json::Value = serde_json::from_str(text)?;
    Ok(match v.get_mut("result") {
        Some(r) => r.take(),
        None => v,
    })
}

fn partial_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".partial");
    path.with_file_name(name)
}

/// Write `contents` to `path.partial`, then rename it over `path`, so a failed
/// run never leaves a truncated file under the final name.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let tmp = partial_path(path);
    let mut f = fs::File::create(&tmp)?;
    f.write_all(contents.as_bytes())?;
    f.sync_all()?;
    drop(f);
    fs::rename(&tmp, path)?;
    Ok(())
}
