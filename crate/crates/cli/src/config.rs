//! Settings resolution: command-line flags, then the TOML config file, then
//! built-in defaults.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{CliError, Result};

/// Environment variable naming the default config file.
pub const CONFIG_ENV: &str = "FHMM_CONFIG";

/// Every key a config file may set. Unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub founders: Option<usize>,
    pub max_iterations: Option<usize>,
    pub tolerance: Option<f64>,
    pub pseudocount: Option<f64>,
    pub initial_stay: Option<f64>,
    pub seed: Option<u64>,
    pub flank: Option<usize>,
    pub restarts: Option<usize>,
    pub threshold: Option<f64>,
    pub mode: Option<String>,
    pub threads: Option<usize>,
    pub naive: Option<bool>,
    pub json: Option<bool>,
    pub sim_founders: Option<usize>,
    pub loci: Option<usize>,
    pub samples: Option<usize>,
    pub reference_haplotypes: Option<usize>,
    pub switch_rate: Option<f64>,
    pub error_rate: Option<f64>,
    pub missing_rate: Option<f64>,
    pub mask_fraction: Option<f64>,
    pub maf_lo: Option<f64>,
    pub maf_hi: Option<f64>,
    pub repetitions: Option<usize>,
}

impl FileConfig {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Input(format!("{source}: {}", e.message())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("{}: cannot read config: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Loads `explicit`, else the file named by `FHMM_CONFIG`, else nothing.
    pub fn discover(explicit: Option<&Path>) -> Result<Self> {
        let from_env = std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
        match explicit.map(Path::to_path_buf).or(from_env) {
            Some(p) => Self::load(&p),
            None => Ok(Self::default()),
        }
    }
}

/// First of flag, file value, default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}
