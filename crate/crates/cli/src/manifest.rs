//! Run manifests: every output directory carries a manifest.json from
//! which the run can be reproduced exactly.

use anyhow::{Context, Result};
use serde::Serialize;
use std::path::Path;

#[derive(Serialize)]
pub struct Manifest<T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    /// Fully resolved configuration after all overrides.
    pub config: T,
    pub seeds: Vec<u64>,
    pub outputs: Vec<String>,
}

pub fn write_manifest<T: Serialize>(dir: &Path, m: &Manifest<T>) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(m)?;
    std::fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn manifest<T: Serialize>(
    command: &str,
    config: T,
    seeds: Vec<u64>,
    outputs: &[&str],
) -> Manifest<T> {
    Manifest {
        tool: "hexnet",
        version: env!("CARGO_PKG_VERSION"),
        command: command.to_string(),
        config,
        seeds,
        outputs: outputs.iter().map(|s| s.to_string()).collect(),
    }
}

/// Seed override from the environment, applied before CLI flags.
pub fn env_seed() -> Option<u64> {
    std::env::var("HEXNET_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
}
