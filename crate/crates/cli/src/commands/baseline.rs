//! `hexnet baseline`: one CSMA/CA baseline run, optionally with the
//! power-saving mode, on the shared scenario format.

use crate::manifest::{manifest, write_manifest};
use anyhow::Result;
use clap::Parser;
use hexnet_core::csma::{run_csma, CsmaConfig};
use hexnet_core::units::dbm_to_mw;
use serde::Serialize;
use std::path::PathBuf;

#[derive(Parser, Clone)]
pub struct Args {
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub load: Option<f64>,
    #[arg(long)]
    pub duration: Option<f64>,
    /// Power-saving (ATIM) mode.
    #[arg(long)]
    pub psm: bool,
    #[arg(long)]
    pub threshold_dbm: Option<f64>,
    #[arg(long)]
    pub target_rx_dbm: Option<f64>,
    #[arg(long)]
    pub atim_ms: Option<f64>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Summary<'a> {
    seed: u64,
    digest: String,
    config: &'a CsmaConfig,
    report: &'a hexnet_core::metrics::MetricsReport,
    attempted_tx: usize,
    failed_tx: usize,
}

pub fn run(args: Args) -> Result<()> {
    let dir = super::out_dir(&args.out, "out-baseline")?;
    let sim_args = super::simulate::Args {
        scenario: args.scenario.clone(),
        seed: args.seed,
        theta: None,
        nodes: args.nodes,
        load: args.load,
        duration: args.duration,
        planner_mode: None,
        scheduler_mode: None,
        out: None,
    };
    let mut sc = super::simulate::load_scenario(&args.scenario)?;
    super::simulate::apply_overrides(&mut sc, &sim_args);
    let mut cfg = CsmaConfig {
        psm: args.psm,
        ..CsmaConfig::default()
    };
    if let Some(t) = args.threshold_dbm {
        cfg.carrier_sense_threshold_mw = dbm_to_mw(t);
    }
    if let Some(t) = args.target_rx_dbm {
        cfg.target_rx_power_mw = dbm_to_mw(t);
    }
    if let Some(w) = args.atim_ms {
        cfg.atim_window_ms = w;
    }
    let outcome = run_csma(&sc, &cfg)?;
    super::simulate::write_trace_csv(&dir, &outcome.trace)?;
    let attempted: usize = outcome.trace.frames.iter().map(|f| f.attempted_tx).sum();
    let failed: usize = outcome.trace.frames.iter().map(|f| f.failed_tx).sum();
    let summary = Summary {
        seed: sc.seed,
        digest: format!("{:016x}", outcome.trace.digest()),
        config: &cfg,
        report: &outcome.report,
        attempted_tx: attempted,
        failed_tx: failed,
    };
    super::write_json(&dir.join("summary.json"), &summary)?;
    write_manifest(
        &dir,
        &manifest(
            "baseline",
            (sc.clone(), cfg.clone()),
            vec![sc.seed],
            &["transmissions.csv", "frames.csv", "nodes.csv", "summary.json"],
        ),
    )?;
    println!(
        "baseline: digest {:016x}, throughput {:.3e} bit*m/s -> {}",
        outcome.trace.digest(),
        outcome.report.throughput_bit_m_per_s,
        dir.display()
    );
    Ok(())
}
