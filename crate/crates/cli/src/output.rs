//! Output staging: files are rendered in memory and moved into place one
//! by one through a temporary file in the target directory, so a reader
//! never sees a partial file and a failed run writes nothing.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn new() -> Self {
        Self::default()
    }

    /// Renders one file with a writer callback from the analysis module.
    pub fn render(&mut self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> eprsim::Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        f(&mut buf).map_err(CliError::stage("render"))?;
        self.files.push((name.to_string(), buf));
        Ok(())
    }

    pub fn add(&mut self, name: &str, contents: Vec<u8>) {
        self.files.push((name.to_string(), contents));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_slice())
    }

    pub fn write_all(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| CliError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let mut written = Vec::new();
        for (name, contents) in &self.files {
            let target = dir.join(name);
            let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io(dir))?;
            tmp.write_all(contents).map_err(io(&target))?;
            tmp.as_file().sync_all().map_err(io(&target))?;
            tmp.persist(&target).map_err(|e| CliError::Io {
                path: target.clone(),
                source: e.error,
            })?;
            written.push(target);
        }
        Ok(written)
    }
}

/// CSV text with the fingerprint comment line and a header.
pub struct Table {
    text: String,
}

impl Table {
    pub fn new(fingerprint: &str, header: &[&str]) -> Self {
        Self {
            text: format!("# config_fingerprint={fingerprint}\n{}\n", header.join(",")),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.text.into_bytes()
    }
}

pub fn cell(v: f64) -> String {
    v.to_string()
}

pub fn opt_cell(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}
