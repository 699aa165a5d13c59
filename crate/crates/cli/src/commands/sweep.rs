//! `hexnet sweep`: batch scheme comparison over seeds and a load or
//! node-count grid, emitting per-run and aggregated CSV tables.

use crate::manifest::{env_seed, manifest, write_manifest};
use anyhow::{bail, Result};
use clap::Parser;
use hexnet_core::csma::{optimize_csma, run_csma, CsmaSweep};
use hexnet_core::planner::PlannerMode;
use hexnet_core::scenario::SimScenario;
use hexnet_core::scheduler::SchedulerMode;
use hexnet_core::sim::run_simulation;
use rayon::prelude::*;
use serde::Serialize;
use std::path::PathBuf;

#[derive(Parser, Clone)]
pub struct Args {
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Comma list of schemes: proposed,p-ran-sch,p-gmax,p-imin,p-arb,
    /// best-dcf,best-psm.
    #[arg(long, default_value = "proposed,best-dcf")]
    pub schemes: String,
    #[arg(long, default_value = "1,2,3,4,5")]
    pub seeds: String,
    /// Poisson loads per node (bit/s) for the x axis; mutually exclusive
    /// with --nodes-list. Empty = a single saturated point.
    #[arg(long)]
    pub loads: Option<String>,
    /// Node counts for the x axis.
    #[arg(long)]
    pub nodes_list: Option<String>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub duration: Option<f64>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Scheme {
    Proposed,
    PRanSch,
    PGmax,
    PImin,
    PArb,
    BestDcf,
    BestPsm,
}

impl Scheme {
    fn parse(s: &str) -> Result<Scheme> {
        Ok(match s.trim() {
            "proposed" => Scheme::Proposed,
            "p-ran-sch" => Scheme::PRanSch,
            "p-gmax" => Scheme::PGmax,
            "p-imin" => Scheme::PImin,
            "p-arb" => Scheme::PArb,
            "best-dcf" => Scheme::BestDcf,
            "best-psm" => Scheme::BestPsm,
            other => bail!("unknown scheme {other:?}"),
        })
    }

    fn name(&self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::PRanSch => "p-ran-sch",
            Scheme::PGmax => "p-gmax",
            Scheme::PImin => "p-imin",
            Scheme::PArb => "p-arb",
            Scheme::BestDcf => "best-dcf",
            Scheme::BestPsm => "best-psm",
        }
    }
}

#[derive(Serialize, Clone)]
struct RunRow {
    scheme: &'static str,
    x: f64,
    seed: u64,
    throughput_bit_m_per_s: f64,
    energy_per_bit_j: Option<f64>,
    scheduling_efficiency: f64,
    scheduling_efficiency_data_slots: f64,
    jain_fairness: f64,
}

pub fn run(args: Args) -> Result<()> {
    let dir = super::out_dir(&args.out, "out-sweep")?;
    let mut base = super::simulate::load_scenario(&args.scenario)?;
    if let Some(seed) = env_seed() {
        base.seed = seed;
    }
    if let Some(theta) = args.theta {
        base.theta = theta;
    }
    if let Some(d) = args.duration {
        base.duration_s = d;
    }
    let schemes: Vec<Scheme> = args
        .schemes
        .split(',')
        .map(Scheme::parse)
        .collect::<Result<_>>()?;
    let seeds = super::parse_seeds(&args.seeds)?;
    if args.loads.is_some() && args.nodes_list.is_some() {
        bail!("--loads and --nodes-list are mutually exclusive");
    }
    enum Axis {
        Load(Vec<f64>),
        Nodes(Vec<f64>),
        Single,
    }
    let axis = if let Some(l) = &args.loads {
        Axis::Load(super::parse_list(l)?)
    } else if let Some(nl) = &args.nodes_list {
        Axis::Nodes(super::parse_list(nl)?)
    } else {
        Axis::Single
    };
    let xs: Vec<f64> = match &axis {
        Axis::Load(v) | Axis::Nodes(v) => v.clone(),
        Axis::Single => vec![0.0],
    };

    let scenario_for = |x: f64, seed: u64| -> SimScenario {
        let mut sc = base.clone();
        sc.seed = seed;
        match &axis {
            Axis::Load(_) => sc.traffic.poisson_rate_bps_per_node = Some(x),
            Axis::Nodes(_) => sc.nodes = x as usize,
            Axis::Single => {}
        }
        sc
    };

    // Baselines are optimized once per x against the sweep's seeds, then
    // evaluated per seed with the winning configuration.
    let mut dcf_cfgs = std::collections::BTreeMap::new();
    let mut psm_cfgs = std::collections::BTreeMap::new();
    for (xi, &x) in xs.iter().enumerate() {
        if schemes.contains(&Scheme::BestDcf) {
            let (cfg, _) = optimize_csma(
                &scenario_for(x, seeds[0]),
                &CsmaSweep::quick(false, seeds.clone()),
            )?;
            dcf_cfgs.insert(xi, cfg);
        }
        if schemes.contains(&Scheme::BestPsm) {
            let (cfg, _) = optimize_csma(
                &scenario_for(x, seeds[0]),
                &CsmaSweep::quick(true, seeds.clone()),
            )?;
            psm_cfgs.insert(xi, cfg);
        }
    }

    let mut jobs: Vec<(usize, usize, u64)> = Vec::new();
    for si in 0..schemes.len() {
        for xi in 0..xs.len() {
            for &seed in &seeds {
                jobs.push((si, xi, seed));
            }
        }
    }
    let rows: Vec<RunRow> = jobs
        .par_iter()
        .map(|&(si, xi, seed)| -> Result<RunRow> {
            let scheme = schemes[si];
            let x = xs[xi];
            let mut sc = scenario_for(x, seed);
            let report = match scheme {
                Scheme::Proposed => run_simulation(&sc)?.report,
                Scheme::PRanSch => {
                    sc.scheduler_mode = SchedulerMode::Random;
                    run_simulation(&sc)?.report
                }
                Scheme::PGmax => {
                    sc.planner_mode = PlannerMode::MaxPower;
                    run_simulation(&sc)?.report
                }
                Scheme::PImin => {
                    sc.planner_mode = PlannerMode::MinInterference;
                    run_simulation(&sc)?.report
                }
                Scheme::PArb => {
                    sc.planner_mode = PlannerMode::Arbitrary;
                    run_simulation(&sc)?.report
                }
                Scheme::BestDcf => run_csma(&sc, &dcf_cfgs[&xi])?.report,
                Scheme::BestPsm => run_csma(&sc, &psm_cfgs[&xi])?.report,
            };
            Ok(RunRow {
                scheme: scheme.name(),
                x,
                seed,
                throughput_bit_m_per_s: report.throughput_bit_m_per_s,
                energy_per_bit_j: report.energy_per_bit_j,
                scheduling_efficiency: report.scheduling_efficiency,
                scheduling_efficiency_data_slots: report.scheduling_efficiency_data_slots,
                jain_fairness: report.jain_fairness,
            })
        })
        .collect::<Result<_>>()?;

    let mut w = csv::Writer::from_path(dir.join("runs.csv"))?;
    w.write_record([
        "scheme",
        "x",
        "seed",
        "throughput_bit_m_per_s",
        "energy_per_bit_j",
        "scheduling_efficiency",
        "scheduling_efficiency_data_slots",
        "jain_fairness",
    ])?;
    for r in &rows {
        w.write_record([
            r.scheme.to_string(),
            format!("{}", r.x),
            r.seed.to_string(),
            format!("{:.9e}", r.throughput_bit_m_per_s),
            r.energy_per_bit_j
                .map(|e| format!("{e:.9e}"))
                .unwrap_or_default(),
            format!("{:.6}", r.scheduling_efficiency),
            format!("{:.6}", r.scheduling_efficiency_data_slots),
            format!("{:.6}", r.jain_fairness),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("summary.csv"))?;
    w.write_record([
        "scheme",
        "x",
        "mean_throughput",
        "mean_energy_per_bit",
        "mean_efficiency_data_slots",
    ])?;
    for scheme in &schemes {
        for &x in &xs {
            let mine: Vec<&RunRow> = rows
                .iter()
                .filter(|r| r.scheme == scheme.name() && r.x == x)
                .collect();
            let thr =
                mine.iter().map(|r| r.throughput_bit_m_per_s).sum::<f64>() / mine.len() as f64;
            let energies: Vec<f64> = mine.iter().filter_map(|r| r.energy_per_bit_j).collect();
            let energy = if energies.is_empty() {
                String::new()
            } else {
                format!(
                    "{:.9e}",
                    energies.iter().sum::<f64>() / energies.len() as f64
                )
            };
            let eff = mine
                .iter()
                .map(|r| r.scheduling_efficiency_data_slots)
                .sum::<f64>()
                / mine.len() as f64;
            w.write_record([
                scheme.name().to_string(),
                format!("{x}"),
                format!("{thr:.9e}"),
                energy,
                format!("{eff:.6}"),
            ])?;
        }
    }
    w.flush()?;

    #[derive(Serialize)]
    struct SweepManifest {
        base: SimScenario,
        schemes: Vec<String>,
        xs: Vec<f64>,
    }
    write_manifest(
        &dir,
        &manifest(
            "sweep",
            SweepManifest {
                base: base.clone(),
                schemes: schemes.iter().map(|s| s.name().to_string()).collect(),
                xs,
            },
            seeds,
            &["runs.csv", "summary.csv"],
        ),
    )?;
    println!("sweep written to {}", dir.display());
    Ok(())
}
