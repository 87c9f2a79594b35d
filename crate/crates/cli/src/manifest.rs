use std::fs;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;

use crate::config::sha256_hex;
use crate::Failure;

#[derive(Serialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
}

/// Everything needed to rerun a command and check that the outputs match.
/// Deliberately free of timestamps and host details.
#[derive(Serialize)]
pub struct Manifest {
    pub command: String,
    pub cli_version: String,
    pub core_version: String,
    /// Hash of the resolved configuration as written in `config.json`.
    pub config_sha256: String,
    pub input_sha256: Option<String>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub outputs: Vec<OutputFile>,
}

/// Collects output files and writes them with their hashes.
pub struct Outputs<'a> {
    dir: &'a Path,
    files: Vec<OutputFile>,
}

impl<'a> Outputs<'a> {
    pub fn new(dir: &'a Path) -> Result<Self, Failure> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir,
            files: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), Failure> {
        let path = self.dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        log::info!("wrote {}", path.display());
        self.files.push(OutputFile {
            file: name.to_string(),
            sha256: sha256_hex(contents.as_bytes()),
        });
        Ok(())
    }

    pub fn finish(mut self, mut manifest: Manifest) -> Result<(), Failure> {
        manifest.outputs = std::mem::take(&mut self.files);
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        let path = self.dir.join(format!("{}.manifest.json", manifest.command));
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}
