//! `hexnet schedule`: run the sequential scheduler standalone on a
//! topology file and dump the decision log.

use crate::manifest::{manifest, write_manifest};
use anyhow::{Context, Result};
use clap::Parser;
use hexnet_core::model::{Link, Node, Topology};
use hexnet_core::planner::{Planner, PlannerMode, PlannerSettings};
use hexnet_core::scheduler::{build_schedule, SchedLink, ScheduleProblem, SchedulerMode};
use hexnet_core::util::Vec2;
use hexnet_core::RadioParams;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Parser, Serialize, Clone)]
pub struct Args {
    /// Topology file (TOML): nodes with positions, directional links.
    #[arg(long)]
    pub topology: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub slots: usize,
    #[arg(long, value_enum, default_value = "greedy")]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Energy slack for the plans.
    #[arg(long, default_value_t = f64::INFINITY)]
    pub theta: f64,
    /// Product constant override, mW^2.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Interference floor added to every budget, mW.
    #[arg(long, default_value_t = 0.0)]
    pub floor_mw: f64,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(clap::ValueEnum, Clone, Copy, Serialize)]
pub enum ModeArg {
    Greedy,
    Random,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TopologyFile {
    #[serde(default)]
    radio: Option<RadioParams>,
    nodes: Vec<NodeSpec>,
    links: Vec<LinkSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeSpec {
    x: f64,
    y: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkSpec {
    source: usize,
    dest: usize,
}

pub fn run(args: Args) -> Result<()> {
    let dir = super::out_dir(&args.out, "out-schedule")?;
    let text = std::fs::read_to_string(&args.topology)
        .with_context(|| format!("reading {}", args.topology.display()))?;
    let file: TopologyFile = toml::from_str(&text).context("parsing topology file")?;
    let params = file.radio.unwrap_or_default();
    let nodes: Vec<Node> = file
        .nodes
        .iter()
        .enumerate()
        .map(|(id, n)| Node {
            id,
            position: Vec2::new(n.x, n.y),
        })
        .collect();
    let links: Vec<Link> = file
        .links
        .iter()
        .enumerate()
        .map(|(id, l)| Link {
            id,
            source: l.source,
            dest: l.dest,
        })
        .collect();
    let topo = Topology::build(nodes, links, &params)?;

    let planner = Planner::new(params.clone(), PlannerSettings::default())?;
    let lambda = args
        .lambda
        .unwrap_or_else(|| hexnet_core::planner::default_lambda(&params));
    let mut sched_links = Vec::new();
    for l in 0..topo.link_count() {
        let plan = planner.plan_link(
            topo.link_distance(l),
            args.theta,
            lambda,
            PlannerMode::Proposed,
            args.seed,
        )?;
        sched_links.push(SchedLink {
            tx_power_mw: plan.tx_power_mw,
            target_interference_mw: plan.target_interference_mw,
            direct_gain: topo.gains.get(l, l),
            rate_cap: f64::INFINITY,
            max_slots: None,
            endpoints: (topo.links[l].source, topo.links[l].dest),
            candidate: true,
            preset_slots: Vec::new(),
        });
    }
    let problem = ScheduleProblem {
        links: sched_links,
        gains: topo.gains.clone(),
        slots: args.slots,
        floor_mw: args.floor_mw,
    };
    let mode = match args.mode {
        ModeArg::Greedy => SchedulerMode::Greedy,
        ModeArg::Random => SchedulerMode::Random,
    };
    let matrix = build_schedule(&problem, mode, args.seed);

    let mut w = csv::Writer::from_path(dir.join("schedule.csv"))?;
    w.write_record([
        "round",
        "step",
        "link",
        "slot",
        "max_power_mw",
        "residual_mw",
        "product",
    ])?;
    for r in &matrix.log {
        w.write_record([
            r.round.to_string(),
            r.step.to_string(),
            r.link.to_string(),
            r.slot.to_string(),
            r.max_power_mw
                .map(|v| format!("{v:.9e}"))
                .unwrap_or_default(),
            format!("{:.9e}", r.residual_mw),
            format!("{:.9e}", r.product),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("assignment.csv"))?;
    w.write_record(["link", "slots"])?;
    for l in 0..matrix.links {
        let slots: Vec<String> = matrix.slots_of(l).iter().map(|s| s.to_string()).collect();
        w.write_record([l.to_string(), slots.join(" ")])?;
    }
    w.flush()?;

    write_manifest(
        &dir,
        &manifest(
            "schedule",
            args.clone(),
            vec![args.seed],
            &["schedule.csv", "assignment.csv"],
        ),
    )?;
    println!(
        "schedule with {} grants written to {}",
        matrix.assigned_count(),
        dir.display()
    );
    Ok(())
}
