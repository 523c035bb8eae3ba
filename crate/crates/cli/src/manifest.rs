use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// Provenance record written next to every output file as
/// `<stem>.manifest.json`.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub command: &'a str,
    pub argv: &'a [String],
    pub params: &'a serde_json::Value,
    pub tool_version: &'static str,
    pub timestamp: String,
    pub outputs: Vec<String>,
}

/// Collects the files one command writes, then drops a manifest beside each.
pub struct Outputs<'a> {
    dir: PathBuf,
    command: &'a str,
    argv: &'a [String],
    files: Vec<PathBuf>,
}

impl<'a> Outputs<'a> {
    pub fn new(dir: &Path, command: &'a str, argv: &'a [String]) -> Result<Self> {
        fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            command,
            argv,
            files: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(path.clone());
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text)
    }

    pub fn finish(self, params: &serde_json::Value) -> Result<Vec<PathBuf>> {
        let manifest = RunManifest {
            command: self.command,
            argv: self.argv,
            params,
            tool_version: env!("CARGO_PKG_VERSION"),
            timestamp: chrono::Utc::now().to_rfc3339(),
            outputs: self.files.iter().map(|p| p.display().to_string()).collect(),
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        for file in &self.files {
            let path = manifest_path(file);
            fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(self.files)
    }
}

pub fn manifest_path(file: &Path) -> PathBuf {
    let stem = file
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    file.with_file_name(format!("{stem}.manifest.json"))
}
