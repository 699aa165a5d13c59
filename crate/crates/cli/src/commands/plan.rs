//! `hexnet plan`: per-link plan tables over link-distance and
//! energy-slack grids.

use crate::manifest::{manifest, write_manifest};
use anyhow::Result;
use clap::Parser;
use hexnet_core::planner::{default_lambda, Planner, PlannerMode, PlannerSettings};
use hexnet_core::units::{linear_to_db, mw_to_dbm};
use hexnet_core::RadioParams;
use serde::Serialize;
use std::path::PathBuf;

#[derive(Parser, Serialize, Clone)]
pub struct Args {
    /// Link distances, m.
    #[arg(long, default_value = "5,10,15,20")]
    pub distances: String,
    /// Energy slack factors; "inf" accepted.
    #[arg(long, default_value = "1,1.2,1.5,2,3,5,10,100,inf")]
    pub thetas: String,
    /// Product constant, mW^2 (defaults to max power * min interference).
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, value_enum, default_value = "proposed")]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(clap::ValueEnum, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Proposed,
    MaxPower,
    MinInterference,
    Arbitrary,
}

impl From<ModeArg> for PlannerMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Proposed => PlannerMode::Proposed,
            ModeArg::MaxPower => PlannerMode::MaxPower,
            ModeArg::MinInterference => PlannerMode::MinInterference,
            ModeArg::Arbitrary => PlannerMode::Arbitrary,
        }
    }
}

pub fn run(args: Args) -> Result<()> {
    let dir = super::out_dir(&args.out, "out-plan")?;
    let params = RadioParams::default();
    let lambda = args.lambda.unwrap_or_else(|| default_lambda(&params));
    let planner = Planner::new(params.clone(), PlannerSettings::default())?;
    let distances = super::parse_list(&args.distances)?;
    let thetas = super::parse_list(&args.thetas)?;

    let mut w = csv::Writer::from_path(dir.join("plan.csv"))?;
    w.write_record([
        "theta",
        "distance_m",
        "tx_power_mw",
        "target_interference_dbm",
        "sinr_db",
        "rate_bps_hz",
        "energy_per_bit",
        "status",
    ])?;
    for &theta in &thetas {
        for &d in &distances {
            match planner.plan_link(d, theta, lambda, args.mode.into(), args.seed) {
                Ok(p) => w.write_record([
                    format!("{theta}"),
                    format!("{d}"),
                    format!("{:.6}", p.tx_power_mw),
                    format!("{:.4}", mw_to_dbm(p.target_interference_mw)),
                    format!("{:.4}", linear_to_db(p.sinr)),
                    format!("{:.6}", p.rate_bps_hz),
                    format!("{:.9e}", p.energy_per_bit),
                    "ok".into(),
                ])?,
                Err(e) => w.write_record([
                    format!("{theta}"),
                    format!("{d}"),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    format!("{e}"),
                ])?,
            }
        }
    }
    w.flush()?;
    write_manifest(
        &dir,
        &manifest("plan", args.clone(), vec![args.seed], &["plan.csv"]),
    )?;
    println!("plan table written to {}", dir.display());
    Ok(())
}
