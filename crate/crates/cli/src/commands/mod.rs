pub mod asymptotic;
pub mod baseline;
pub mod plan;
pub mod schedule;
pub mod simulate;
pub mod sweep;

use anyhow::{Context, Result};
use std::path::{Path, PathBuf};

pub fn out_dir(opt: &Option<PathBuf>, default: &str) -> Result<PathBuf> {
    let dir = opt.clone().unwrap_or_else(|| PathBuf::from(default));
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| {
            let x = x.trim();
            if x.eq_ignore_ascii_case("inf") {
                Ok(f64::INFINITY)
            } else {
                x.parse::<f64>()
                    .with_context(|| format!("bad number {x:?}"))
            }
        })
        .collect()
}

pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<u64>()
                .with_context(|| format!("bad seed {x:?}"))
        })
        .collect()
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
