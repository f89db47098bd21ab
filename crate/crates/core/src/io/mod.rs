//! Configuration, run manifests and CSV output.

pub mod config;
pub mod emit;
pub mod manifest;
pub mod run;

pub use config::{parse_config, parse_config_str, RawConfig, RunConfig, Subcommand};
pub use emit::{emit, output_root, run_dir, Cell, Table};
pub use manifest::{parse_manifest, RunManifest};
pub use run::{execute, Outcome};
