use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use pulseflow::area::AreaSamples;
use pulseflow::io::{read_area_csv, read_contours_json};
use pulseflow::pipeline::PipelineConfig;

use crate::Failure;

/// Configuration shared by `reconstruct`, `sensitivity` and `hemo`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Area grid (`.csv`) or contour set (`.json`), relative to the config file.
    pub input: Option<PathBuf>,
    /// Report of an earlier `reconstruct`; defaults to `<out>/report.json`.
    pub report: Option<PathBuf>,
    /// Positions along the segment for the Reynolds/Womersley profile.
    pub hemo_stations: usize,
    #[serde(flatten)]
    pub pipeline: PipelineConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: None,
            report: None,
            hemo_stations: 21,
            pipeline: PipelineConfig::default(),
        }
    }
}

/// A configuration file with its paths resolved against its directory.
pub struct Loaded<T> {
    pub config: T,
    pub base: PathBuf,
}

pub fn load<T>(path: Option<&Path>) -> Result<Loaded<T>, Failure>
where
    T: Default + for<'de> Deserialize<'de>,
{
    let Some(path) = path else {
        return Ok(Loaded {
            config: T::default(),
            base: PathBuf::from("."),
        });
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let config =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Loaded { config, base })
}

impl Loaded<RunConfig> {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    /// Reads the area input; the period must come from the configuration.
    pub fn samples(&self) -> Result<(AreaSamples, Vec<u8>), Failure> {
        let Some(input) = &self.config.input else {
            bail!("the configuration has no `input` file");
        };
        let path = self.resolve(input);
        let bytes = fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
        let text = std::str::from_utf8(&bytes)
            .with_context(|| format!("{} is not UTF-8", path.display()))?;
        let period = self.config.pipeline.resolved_period(None)?;
        let samples = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => read_contours_json(text, period)?,
            _ => read_area_csv(text, period)?,
        };
        Ok((samples, bytes))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
