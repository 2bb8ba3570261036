//! Config file: top-level run settings plus one section per experiment.
//!
//! ```toml
//! seed = 7
//! format = "both"
//!
//! [gas]
//! n = 100000
//! iters = 5000000
//! ```
//!
//! Keys match the long flag names. Unknown keys and sections are errors.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::params::*;
use crate::report::{CliError, CliResult, Issue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
    #[default]
    Both,
}

impl Format {
    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub alternating: Option<AlternatingArgs>,
    pub gas: Option<GasArgs>,
    pub screen: Option<ScreenArgs>,
    pub doubleslit: Option<DoubleSlitArgs>,
    pub perturb: Option<PerturbArgs>,
    pub classical: Option<ClassicalArgs>,
    pub entropy: Option<EntropyArgs>,
    pub info: Option<InfoArgs>,
    pub blackhole: Option<BlackHoleArgs>,
    pub geodesics: Option<GeodesicsArgs>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::validation(vec![Issue::new("config", format!("cannot read {}: {e}", path.display()))])
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::validation(vec![Issue::new("config", e.to_string().trim_end().to_string())]))
    }
}
