use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::{RunConfig, Subcommand};
use crate::error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Everything needed to reproduce a run and judge its outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub version: String,
    pub subcommand: Subcommand,
    pub config: RunConfig,
    /// Grid size, spacing, time step and other values derived from the config.
    pub derived: BTreeMap<String, f64>,
    pub tolerances: BTreeMap<String, f64>,
    /// Pass/fail per invariant.
    pub audits: BTreeMap<String, bool>,
    pub results: BTreeMap<String, Value>,
    pub warnings: Vec<String>,
    /// CSV files written next to the manifest.
    pub outputs: Vec<String>,
    pub wall_time_s: f64,
}

impl RunManifest {
    pub fn passed(&self) -> bool {
        self.audits.values().all(|&ok| ok)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }
}

/// Parses and re-validates a manifest.
pub fn parse_manifest(text: &str) -> Result<RunManifest> {
    let manifest: RunManifest = serde_json::from_str(text)?;
    if manifest.config.subcommand != manifest.subcommand {
        return Err(Error::Config(format!(
            "manifest subcommand {} disagrees with its config ({})",
            manifest.subcommand, manifest.config.subcommand
        )));
    }
    manifest.config.validate()?;
    Ok(manifest)
}
