//! `hexnet asymptotic`: (r, F, G) tables per path-loss exponent and the
//! constrained rate-density sweep over the energy budget.

use crate::manifest::{manifest, write_manifest};
use anyhow::Result;
use clap::Parser;
use hexnet_core::lattice::{lattice_f, lattice_g, solve_constrained, LatticeConfig, SolveGrid};
use hexnet_core::RadioParams;
use serde::Serialize;
use std::path::PathBuf;

#[derive(Parser, Serialize, Clone)]
pub struct Args {
    /// Path-loss exponents for the G table.
    #[arg(long, default_value = "3,3.5,4,5,6")]
    pub alphas: String,
    /// Ratio bracket for the G table.
    #[arg(long, default_value_t = 0.8)]
    pub r_lo: f64,
    #[arg(long, default_value_t = 6.0)]
    pub r_hi: f64,
    #[arg(long, default_value_t = 200)]
    pub r_points: usize,
    /// Path-loss exponent for the energy sweep.
    #[arg(long, default_value_t = 3.5)]
    pub sweep_alpha: f64,
    /// Circuit power for the energy sweep, W.
    #[arg(long, default_value_t = 1.25e-3)]
    pub sweep_circuit_w: f64,
    /// Energy-budget sweep points, J/(bit/Hz); "auto" spans the feasible
    /// range.
    #[arg(long, default_value = "auto")]
    pub e_hats: String,
    #[arg(long, default_value_t = 30)]
    pub e_points: usize,
    /// Link distance d for the sweep, m.
    #[arg(long, default_value_t = 1.0)]
    pub link_distance: f64,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

pub fn run(args: Args) -> Result<()> {
    let dir = super::out_dir(&args.out, "out-asymptotic")?;
    let alphas = super::parse_list(&args.alphas)?;

    // G table
    let mut w = csv::Writer::from_path(dir.join("g_table.csv"))?;
    w.write_record(["alpha", "r_over_d", "f_sinr", "g"])?;
    for &alpha in &alphas {
        let cfg = LatticeConfig::new(alpha);
        for i in 0..args.r_points {
            let r = args.r_lo + (args.r_hi - args.r_lo) * i as f64 / (args.r_points - 1) as f64;
            let f = lattice_f(r, &cfg)?;
            let g = lattice_g(r, &cfg)?;
            w.write_record([
                format!("{alpha}"),
                format!("{r:.6}"),
                format!("{f:.9e}"),
                format!("{g:.9e}"),
            ])?;
        }
    }
    w.flush()?;

    // constrained sweep: rate density and energy against the budget
    let params = RadioParams {
        path_loss_exponent: args.sweep_alpha,
        circuit_power_w: args.sweep_circuit_w,
        ..RadioParams::default()
    };
    let cfg = LatticeConfig::new(args.sweep_alpha);
    let grid = SolveGrid {
        link_distance_m: args.link_distance,
        ..SolveGrid::default()
    };
    let budgets: Vec<f64> = if args.e_hats == "auto" {
        let unconstrained = solve_constrained(f64::INFINITY, &params, &cfg, &grid)?;
        let f_hi = lattice_f(grid.radius_hi_over_d, &cfg)?;
        let e_min = hexnet_core::model::link_slot_power(true, params.tx_power_min_mw, &params)
            / hexnet_core::model::shannon_rate(f_hi)?;
        (0..args.e_points)
            .map(|i| {
                e_min * 1.0001
                    + (unconstrained.energy_per_bit * 1.3 - e_min) * i as f64
                        / (args.e_points - 1) as f64
            })
            .collect()
    } else {
        super::parse_list(&args.e_hats)?
    };
    let mut w = csv::Writer::from_path(dir.join("solve_sweep.csv"))?;
    w.write_record([
        "e_hat",
        "rate_density",
        "energy_per_bit",
        "tx_power_mw",
        "cell_radius_m",
        "sinr",
    ])?;
    for &e_hat in &budgets {
        match solve_constrained(e_hat, &params, &cfg, &grid) {
            Ok(sol) => w.write_record([
                format!("{e_hat:.9e}"),
                format!("{:.9e}", sol.rate_density),
                format!("{:.9e}", sol.energy_per_bit),
                format!("{:.6}", sol.tx_power_mw),
                format!("{:.6}", sol.cell_radius_m),
                format!("{:.6}", sol.sinr),
            ])?,
            Err(e) => w.write_record([
                format!("{e_hat:.9e}"),
                "infeasible".into(),
                format!("{e}"),
                String::new(),
                String::new(),
                String::new(),
            ])?,
        }
    }
    w.flush()?;

    write_manifest(
        &dir,
        &manifest(
            "asymptotic",
            args.clone(),
            vec![],
            &["g_table.csv", "solve_sweep.csv"],
        ),
    )?;
    println!("asymptotic tables written to {}", dir.display());
    Ok(())
}
