use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::failure::Failure;

/// Values that may come from a TOML run file; command-line flags win.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub sndlib: Option<PathBuf>,
    pub demands: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub synthetic: Option<String>,
    pub window: Option<usize>,
    pub data: Option<PathBuf>,
    pub model: Option<String>,
    pub rc: Option<String>,
    pub p: Option<usize>,
    pub hidden: Option<usize>,
    pub dvc: Option<usize>,
    pub dwc: Option<usize>,
    #[serde(alias = "T")]
    pub rounds: Option<usize>,
    pub final_dim: Option<usize>,
    pub ae_hidden: Option<Vec<usize>>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
    pub eps: Option<f64>,
    pub checkpoint: Option<PathBuf>,
    pub input: Option<PathBuf>,
    pub index: Option<usize>,
    pub artifact: Option<PathBuf>,
    pub split: Option<String>,
    pub external: Option<PathBuf>,
    pub write_recon: Option<PathBuf>,
    pub format_version: Option<u16>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
    }
}

/// `flag`, else the file value, else a config error naming the option.
pub fn required<T>(flag: Option<T>, file: Option<T>, name: &str) -> Result<T, Failure> {
    flag.or(file)
        .ok_or_else(|| Failure::config(format!("missing required option --{name}")))
}
