//! `hexnet simulate`: one coordinator-MAC run with trace and summary
//! outputs.

use crate::manifest::{env_seed, manifest, write_manifest};
use anyhow::{Context, Result};
use clap::Parser;
use hexnet_core::planner::PlannerMode;
use hexnet_core::scenario::SimScenario;
use hexnet_core::scheduler::SchedulerMode;
use hexnet_core::sim::run_simulation_with_counters;
use hexnet_core::trace::SimTrace;
use hexnet_core::units::linear_to_db;
use serde::Serialize;
use std::path::{Path, PathBuf};

#[derive(Parser, Clone)]
pub struct Args {
    /// Scenario file (TOML); defaults apply when omitted.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Poisson load per node, bit/s (omit for saturated).
    #[arg(long)]
    pub load: Option<f64>,
    #[arg(long)]
    pub duration: Option<f64>,
    #[arg(long, value_enum)]
    pub planner_mode: Option<super::plan::ModeArg>,
    #[arg(long, value_enum)]
    pub scheduler_mode: Option<super::schedule::ModeArg>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

pub fn load_scenario(path: &Option<PathBuf>) -> Result<SimScenario> {
    match path {
        None => Ok(SimScenario::default()),
        Some(p) => {
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let sc: SimScenario = toml::from_str(&text)
                .with_context(|| format!("parsing scenario {}", p.display()))?;
            Ok(sc)
        }
    }
}

pub fn apply_overrides(sc: &mut SimScenario, args: &Args) {
    if let Some(seed) = env_seed() {
        sc.seed = seed;
    }
    if let Some(seed) = args.seed {
        sc.seed = seed;
    }
    if let Some(theta) = args.theta {
        sc.theta = theta;
    }
    if let Some(nodes) = args.nodes {
        sc.nodes = nodes;
    }
    if let Some(load) = args.load {
        sc.traffic.poisson_rate_bps_per_node = Some(load);
    }
    if let Some(d) = args.duration {
        sc.duration_s = d;
    }
    if let Some(m) = args.planner_mode {
        sc.planner_mode = PlannerMode::from(m);
    }
    if let Some(m) = args.scheduler_mode {
        sc.scheduler_mode = match m {
            super::schedule::ModeArg::Greedy => SchedulerMode::Greedy,
            super::schedule::ModeArg::Random => SchedulerMode::Random,
        };
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    seed: u64,
    digest: String,
    report: &'a hexnet_core::metrics::MetricsReport,
    counters: &'a hexnet_core::sim::SimCounters,
    attempted_tx: usize,
    failed_tx: usize,
    generated_bits: u64,
    delivered_bits_total: u64,
}

pub fn write_trace_csv(dir: &Path, trace: &SimTrace) -> Result<()> {
    let mut w = csv::Writer::from_path(dir.join("transmissions.csv"))?;
    w.write_record([
        "frame",
        "slot",
        "source",
        "dest",
        "tx_power_mw",
        "planned_sinr_db",
        "actual_sinr_db",
        "success",
        "bits",
        "distance_m",
    ])?;
    for t in &trace.transmissions {
        w.write_record([
            t.frame.to_string(),
            t.slot.to_string(),
            t.source.to_string(),
            t.dest.to_string(),
            format!("{:.4}", t.tx_power_mw),
            format!("{:.3}", linear_to_db(t.planned_sinr)),
            if t.actual_sinr > 0.0 {
                format!("{:.3}", linear_to_db(t.actual_sinr))
            } else {
                "-inf".into()
            },
            t.success.to_string(),
            t.bits.to_string(),
            format!("{:.3}", t.distance_m),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("frames.csv"))?;
    w.write_record([
        "frame",
        "attempted_tx",
        "failed_tx",
        "generated_bits",
        "queued_bits",
        "energy_j",
    ])?;
    for (i, f) in trace.frames.iter().enumerate() {
        w.write_record([
            i.to_string(),
            f.attempted_tx.to_string(),
            f.failed_tx.to_string(),
            f.generated_bits.to_string(),
            f.queued_bits.to_string(),
            format!("{:.9e}", f.energy_j.iter().sum::<f64>()),
        ])?;
    }
    w.flush()?;

    // per-node totals; coordinators follow the nodes
    let mut w = csv::Writer::from_path(dir.join("nodes.csv"))?;
    w.write_record(["entity", "kind", "delivered_bits", "rate_bps", "energy_j"])?;
    for i in 0..trace.entities() {
        let bits: u64 = trace.frames.iter().map(|f| f.delivered_bits[i]).sum();
        let energy: f64 = trace.frames.iter().map(|f| f.energy_j[i]).sum();
        w.write_record([
            i.to_string(),
            if i < trace.nodes { "node" } else { "coordinator" }.to_string(),
            bits.to_string(),
            format!("{:.3}", bits as f64 / trace.duration_s),
            format!("{energy:.9e}"),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn run(args: Args) -> Result<()> {
    let dir = super::out_dir(&args.out, "out-simulate")?;
    let mut sc = load_scenario(&args.scenario)?;
    apply_overrides(&mut sc, &args);
    let (outcome, counters) = run_simulation_with_counters(&sc)?;
    write_trace_csv(&dir, &outcome.trace)?;
    let attempted: usize = outcome.trace.frames.iter().map(|f| f.attempted_tx).sum();
    let failed: usize = outcome.trace.frames.iter().map(|f| f.failed_tx).sum();
    let summary = Summary {
        seed: sc.seed,
        digest: format!("{:016x}", outcome.trace.digest()),
        report: &outcome.report,
        counters: &counters,
        attempted_tx: attempted,
        failed_tx: failed,
        generated_bits: outcome.trace.total_generated_bits(),
        delivered_bits_total: outcome.trace.total_delivered_bits(),
    };
    super::write_json(&dir.join("summary.json"), &summary)?;
    write_manifest(
        &dir,
        &manifest(
            "simulate",
            sc.clone(),
            vec![sc.seed],
            &["transmissions.csv", "frames.csv", "nodes.csv", "summary.json"],
        ),
    )?;
    println!(
        "simulate: digest {:016x}, throughput {:.3e} bit*m/s -> {}",
        outcome.trace.digest(),
        outcome.report.throughput_bit_m_per_s,
        dir.display()
    );
    Ok(())
}
