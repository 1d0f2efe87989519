//! Configuration files: flat TOML with keys `n`, `B`, `c`, `horizon`, `seed`
//! and the optional dotted keys `overrides.k`, `overrides.lh`, `overrides.lv`.
//!
//! ```
//! let raw = linepack::config::parse_config("n = 16\nB = 5\nc = 5\nhorizon = 100\noverrides.lv = 12\n").unwrap();
//! assert_eq!(raw.n, Some(16));
//! assert_eq!(raw.overrides.lv, Some(12));
//! ```

use serde::Deserialize;
use thiserror::Error;

use crate::model::{Overrides, RawConfig};

#[derive(Debug, Error)]
pub enum ConfigFileError {
    #[error("config syntax: {0}")]
    Syntax(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    n: Option<u64>,
    #[serde(rename = "B")]
    buffer: Option<u64>,
    #[serde(rename = "c")]
    link: Option<u64>,
    horizon: Option<u64>,
    seed: Option<u64>,
    #[serde(default)]
    overrides: Overrides,
}

/// Parses a config file. Missing keys stay unset so flags can fill them in.
pub fn parse_config(text: &str) -> Result<RawConfig, ConfigFileError> {
    let f: FileConfig = toml::from_str(text).map_err(|e| ConfigFileError::Syntax(e.to_string()))?;
    Ok(RawConfig { n: f.n, buffer: f.buffer, link: f.link, horizon: f.horizon, seed: f.seed, overrides: f.overrides })
}
