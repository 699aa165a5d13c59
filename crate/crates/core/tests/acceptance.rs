//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with the measured values. Run with
//! `cargo test --test acceptance -- --nocapture` to see every line.

mod common;

use common::*;
use hexnet_core::csma::{optimize_csma, run_csma, CsmaSweep};
use hexnet_core::lattice::{
    fit_multipliers, kkt_residual, lattice_f, lattice_f_with_derivative, lattice_g, max_g,
    solve_constrained, LatticeConfig, SolveGrid,
};
use hexnet_core::model::{link_slot_power, shannon_rate};
use hexnet_core::planner::{default_lambda, Planner, PlannerMode, PlannerSettings};
use hexnet_core::scenario::{SimScenario, TrafficConfig};
use hexnet_core::sim::run_simulation;
use hexnet_core::units::linear_to_db;
use hexnet_core::util::rel_err;
use hexnet_core::RadioParams;
use std::time::Instant;

// ---------------------------------------------------------------------------
// 1. Lattice oracle equivalence
// ---------------------------------------------------------------------------

#[test]
fn acceptance_01_lattice_matches_direct_sum() {
    let _serial = exclusive();
    // The oracle is the direct double sum over |m|,|n| <= 5000 plus a
    // Richardson tail step built from the half-size sum. The raw
    // truncated sum alone carries a ~1e-4 relative tail at alpha = 3,
    // larger than the comparison tolerance, so the tail step is needed
    // for the comparison to test the implementation rather than the
    // reference's own truncation.
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for &alpha in &[3.0, 3.4, 3.5, 6.0] {
        let cfg = LatticeConfig::new(alpha);
        for &r in &[1.0, 1.5, 2.0, 3.0, 4.0] {
            let (full, half) = direct_box_sum_with_half(r, alpha, 5000);
            let tail_step = (full - half) / (2f64.powf(alpha - 2.0) - 1.0);
            let oracle = 1.0 / (full + tail_step);
            let live = lattice_f(r, &cfg).unwrap();
            let e = rel_err(live, oracle);
            worst = worst.max(e);
            assert!(
                e < 1e-4,
                "alpha {alpha} r {r}: live {live:.9e} vs oracle {oracle:.9e} (rel {e:.2e})"
            );
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "oracle comparison took {elapsed:.1} s");
    println!(
        "ACCEPTANCE 01 lattice-oracle-equivalence: PASS (worst rel {worst:.2e}, {elapsed:.1} s)"
    );
}

#[test]
fn acceptance_01b_reference_sums_are_pinned() {
    let _serial = exclusive();
    // Reference values of the truncated direct sum at alpha = 3.5; the
    // live evaluation carries the (tiny) truncation tail of the
    // reference on top of its own tolerance.
    let pins = [
        (1.0, 0.24513879027543276),
        (1.5, 2.1764519486014273),
        (2.0, 7.189731970978043),
        (2.5, 16.962910366773002),
        (3.0, 33.420373476703496),
        (3.5, 58.68772221475253),
        (4.0, 95.07384857830947),
    ];
    let cfg = LatticeConfig::new(3.5);
    for (r, pin) in pins {
        let oracle = 1.0 / direct_box_sum(r, 3.5, 5000);
        assert!(
            rel_err(oracle, pin) < 1e-9,
            "r {r}: oracle moved off its pin"
        );
        let live = lattice_f(r, &cfg).unwrap();
        assert!(
            rel_err(live, pin) < 5e-6,
            "r {r}: live {live:.12e} pin {pin:.12e}"
        );
    }
    println!("ACCEPTANCE 01b reference-sum-pins: PASS");
}

// ---------------------------------------------------------------------------
// 2. Area-rate function shape
// ---------------------------------------------------------------------------

#[test]
fn acceptance_02_g_has_unique_interior_maximum() {
    let _serial = exclusive();
    for &alpha in &[3.0, 3.5, 4.0, 5.0, 6.0] {
        let cfg = LatticeConfig::new(alpha);
        let n = 521;
        let (lo, hi) = (0.8, 6.0);
        let step = (hi - lo) / (n - 1) as f64;
        let vals: Vec<f64> = (0..n)
            .map(|i| lattice_g(lo + step * i as f64, &cfg).unwrap())
            .collect();
        let mut maxima = Vec::new();
        for i in 1..n - 1 {
            if vals[i] > vals[i - 1] && vals[i] > vals[i + 1] {
                maxima.push(i);
            }
        }
        assert_eq!(
            maxima.len(),
            1,
            "alpha {alpha}: {} local maxima",
            maxima.len()
        );
        assert!(
            maxima[0] > 0 && maxima[0] < n - 1,
            "maximum on the boundary"
        );
        // refine the grid maximiser to 5e-4 resolution around the coarse
        // bracket, then compare against golden-section refinement
        let coarse_r = lo + step * maxima[0] as f64;
        let fine_step = 5e-4;
        let mut grid_r = coarse_r;
        let mut best = f64::NEG_INFINITY;
        let mut x = coarse_r - step;
        while x <= coarse_r + step {
            let g = lattice_g(x, &cfg).unwrap();
            if g > best {
                best = g;
                grid_r = x;
            }
            x += fine_step;
        }
        let (golden_r, _) = max_g(&cfg, lo, hi).unwrap();
        assert!(
            (grid_r - golden_r).abs() < 1e-3,
            "alpha {alpha}: grid {grid_r:.5} vs refined {golden_r:.5}"
        );
    }
    println!("ACCEPTANCE 02 unique-interior-maximum: PASS (alpha 3..6)");
}

// ---------------------------------------------------------------------------
// 3. Rate-density / energy sweep
// ---------------------------------------------------------------------------

fn sweep_params() -> (RadioParams, LatticeConfig, SolveGrid) {
    let params = RadioParams {
        path_loss_exponent: 3.5,
        circuit_power_w: 1.25e-3,
        ..RadioParams::default()
    };
    let cfg = LatticeConfig::new(3.5);
    let grid = SolveGrid::default();
    (params, cfg, grid)
}

fn budget_sweep() -> Vec<f64> {
    let (params, cfg, grid) = sweep_params();
    let unconstrained = solve_constrained(f64::INFINITY, &params, &cfg, &grid).unwrap();
    let f_hi = lattice_f(grid.radius_hi_over_d, &cfg).unwrap();
    let e_min =
        link_slot_power(true, params.tx_power_min_mw, &params) / shannon_rate(f_hi).unwrap();
    (0..24)
        .map(|i| e_min * 1.0001 + (unconstrained.energy_per_bit * 1.2 - e_min) * i as f64 / 23.0)
        .collect()
}

#[test]
fn acceptance_03_energy_sweep_trends() {
    let _serial = exclusive();
    let start = Instant::now();
    let (params, cfg, grid) = sweep_params();
    let budgets = budget_sweep();
    let unconstrained = solve_constrained(f64::INFINITY, &params, &cfg, &grid).unwrap();
    let mut prev_rate = 0.0;
    let mut prev_energy = 0.0;
    let mut binding_checked = 0;
    let radius_step = (grid.radius_hi_over_d - grid.radius_lo_over_d) * grid.link_distance_m
        / (grid.radius_points - 1) as f64;
    for &e_hat in budgets.iter() {
        let sol = solve_constrained(e_hat, &params, &cfg, &grid).unwrap();
        assert!(
            sol.rate_density >= prev_rate - 1e-12,
            "rate density decreased at budget {e_hat:.3e}"
        );
        assert!(
            sol.energy_per_bit >= prev_energy - 1e-12,
            "energy decreased at budget {e_hat:.3e}"
        );
        // rising segment: the budget still caps the achievable density
        let rising = sol.rate_density < unconstrained.rate_density * (1.0 - 1e-9);
        if rising && sol.cell_radius_m - radius_step >= grid.radius_lo_over_d {
            // active constraint: one radius step tighter violates the budget
            let e_tighter = hexnet_core::lattice::energy_per_bit(
                sol.tx_power_mw,
                (sol.cell_radius_m - radius_step) / grid.link_distance_m,
                &params,
                &cfg,
            )
            .unwrap();
            assert!(
                e_tighter > e_hat,
                "budget {e_hat:.3e} not active: tighter radius still feasible"
            );
            binding_checked += 1;
        }
        prev_rate = sol.rate_density;
        prev_energy = sol.energy_per_bit;
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "sweep took {elapsed:.1} s");
    assert!(
        binding_checked > 5,
        "too few binding points: {binding_checked}"
    );
    println!(
        "ACCEPTANCE 03 energy-sweep-trends: PASS ({} budgets, {binding_checked} binding, {elapsed:.1} s)",
        budgets.len()
    );
}

// ---------------------------------------------------------------------------
// 4. First-order optimality of the sweep optima
// ---------------------------------------------------------------------------

#[test]
fn acceptance_04_kkt_residuals_at_optima() {
    let _serial = exclusive();
    let (params, cfg, grid) = sweep_params();
    let budgets = budget_sweep();
    // derivative cross-check
    for &r in &[1.1, 1.76, 2.5, 3.5] {
        let (_, df) = lattice_f_with_derivative(r, &cfg).unwrap();
        let h = 1e-5 * r;
        let fd = (lattice_f(r + h, &cfg).unwrap() - lattice_f(r - h, &cfg).unwrap()) / (2.0 * h);
        assert!(
            rel_err(df, fd) < 1e-5,
            "dF/dr mismatch at {r}: {df:.9e} vs {fd:.9e}"
        );
    }
    let radius_step = (grid.radius_hi_over_d - grid.radius_lo_over_d) * grid.link_distance_m
        / (grid.radius_points - 1) as f64;
    let mut checked = 0;
    for &e_hat in budgets.iter().step_by(5) {
        let sol = solve_constrained(e_hat, &params, &cfg, &grid).unwrap();
        let (mu1, mu2) = fit_multipliers(
            sol.cell_radius_m,
            sol.tx_power_mw,
            e_hat,
            0.02,
            &params,
            &cfg,
            &grid,
        )
        .unwrap();
        let res = kkt_residual(
            sol.cell_radius_m,
            sol.tx_power_mw,
            mu1,
            mu2,
            e_hat,
            &params,
            &cfg,
            &grid,
        )
        .unwrap();
        // tolerance proportional to the grid spacing: the stationarity
        // residual at the grid optimum is bounded by the residual one
        // step away (the true stationary point lies within one cell)
        let neighbor = |rg: f64| -> f64 {
            kkt_residual(rg, sol.tx_power_mw, mu1, mu2, e_hat, &params, &cfg, &grid)
                .unwrap()
                .stationarity_radius
                .abs()
        };
        let scale = neighbor(sol.cell_radius_m - radius_step)
            .max(neighbor(sol.cell_radius_m + radius_step))
            .max(1e-9);
        assert!(
            res.stationarity_radius.abs() <= scale * (1.0 + 1e-9),
            "stationarity {:.3e} above neighbour scale {:.3e} at budget {e_hat:.3e}",
            res.stationarity_radius,
            scale
        );
        assert!(res.sign_violation == 0.0, "negative multiplier fitted");
        assert!(
            res.comp_energy.abs() <= 0.03 * e_hat.abs().max(1e-12) * mu1.max(1.0),
            "complementary slackness violated: {:.3e}",
            res.comp_energy
        );
        assert!(
            res.primal_violation <= 1e-12,
            "solver output infeasible: {:.3e}",
            res.primal_violation
        );
        checked += 1;
    }
    assert!(checked >= 5);
    println!("ACCEPTANCE 04 kkt-residuals: PASS ({checked} optima, analytic dF/dr to 1e-5)");
}

// ---------------------------------------------------------------------------
// 5. Relaxed-budget SINR window
// ---------------------------------------------------------------------------

#[test]
fn acceptance_05_relaxed_budget_sinr_window() {
    let _serial = exclusive();
    let planner = Planner::new(RadioParams::default(), PlannerSettings::default()).unwrap();
    let lambda = default_lambda(planner.params());
    let mut measured = Vec::new();
    for &d in &[5.0, 10.0, 15.0, 20.0] {
        let plan = planner
            .plan_link(d, f64::INFINITY, lambda, PlannerMode::Proposed, 0)
            .unwrap();
        measured.push((d, linear_to_db(plan.sinr)));
    }
    println!(
        "ACCEPTANCE 05 relaxed-budget-sinr-window: measured {:?} dB against 8 +/- 1.5 dB",
        measured
            .iter()
            .map(|(d, s)| format!("d={d}: {s:.2}"))
            .collect::<Vec<_>>()
    );
    for (d, sinr_db) in measured {
        assert!(
            (sinr_db - 8.0).abs() <= 1.5,
            "planned SINR at d = {d} m is {sinr_db:.2} dB, outside 8 +/- 1.5 dB \
             (the converged lattice optimum sits at 5.79 dB for this path-loss \
             exponent and clips to the 6 dB floor)"
        );
    }
    println!("ACCEPTANCE 05 relaxed-budget-sinr-window: PASS");
}

// ---------------------------------------------------------------------------
// 6. Tight-budget plans saturate the SINR cap
// ---------------------------------------------------------------------------

#[test]
fn acceptance_06_tight_budget_hits_sinr_cap() {
    let _serial = exclusive();
    let planner = Planner::new(RadioParams::default(), PlannerSettings::default()).unwrap();
    let lambda = default_lambda(planner.params());
    // distances whose cap-SINR point lies inside the power box
    for &d in &[3.0, 5.0, 7.0] {
        let plan = planner
            .plan_link(d, 1.0, lambda, PlannerMode::Proposed, 0)
            .unwrap();
        assert_eq!(
            plan.sinr,
            planner.params().sinr_max,
            "theta = 1 at d = {d} m planned {:.2} dB instead of the cap",
            linear_to_db(plan.sinr)
        );
    }
    println!("ACCEPTANCE 06 tight-budget-sinr-cap: PASS (30 dB at d in {{3, 5, 7}} m)");
}

// ---------------------------------------------------------------------------
// 7. Scheduler selection oracle and fuzz invariants
// ---------------------------------------------------------------------------

#[test]
fn acceptance_07_scheduler_oracle_and_fuzz() {
    let _serial = exclusive();
    let start = Instant::now();
    let oracle_instances = scheduler_oracle_check(100);
    let fuzz_instances = scheduler_fuzz_check(1000);
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 120.0, "scheduler checks took {elapsed:.1} s");
    println!(
        "ACCEPTANCE 07 scheduler-oracle-and-fuzz: PASS ({oracle_instances} oracle instances, \
         {fuzz_instances} fuzzed builds, {elapsed:.1} s)"
    );
}

// ---------------------------------------------------------------------------
// 8. Equal-product minimax
// ---------------------------------------------------------------------------

#[test]
fn acceptance_08_equal_product_minimax() {
    let _serial = exclusive();
    use hexnet_core::planner::equal_product_bound;
    use rand::{Rng, SeedableRng};
    let params = RadioParams::default();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(88);
    let mut worst_gap: f64 = 0.0;
    for _ in 0..100 {
        let draw = |rng: &mut rand_chacha::ChaCha8Rng, lo: f64, hi: f64| -> f64 {
            (lo.ln() + rng.gen::<f64>() * (hi.ln() - lo.ln())).exp()
        };
        let g1 = draw(&mut rng, params.tx_power_min_mw, params.tx_power_max_mw);
        let g2 = draw(&mut rng, params.tx_power_min_mw, params.tx_power_max_mw);
        let i1 = draw(
            &mut rng,
            params.interference_min_mw,
            params.interference_max_mw,
        );
        let i2 = draw(
            &mut rng,
            params.interference_min_mw,
            params.interference_max_mw,
        );
        // balanced scaling: products match
        let s_star = ((g2 * i2) / (g1 * i1)).sqrt();
        let balanced = equal_product_bound(g1, i1, g2, i2, s_star, 1.0, &params);
        for _ in 0..10_000 {
            let s1 = draw(&mut rng, 0.01, 100.0);
            let s2 = draw(&mut rng, 0.01, 100.0);
            let b = equal_product_bound(g1, i1, g2, i2, s1, s2, &params);
            let gap = (balanced - b) / balanced;
            worst_gap = worst_gap.max(gap);
            assert!(
                b >= balanced * (1.0 - 1e-9),
                "scaling ({s1:.3}, {s2:.3}) beat the balanced bound: {b:.6e} < {balanced:.6e}"
            );
        }
    }
    println!(
        "ACCEPTANCE 08 equal-product-minimax: PASS (10^6 scalings, worst gap {worst_gap:.1e})"
    );
}

// ---------------------------------------------------------------------------
// 9. Ablation ordering at desk scale
// ---------------------------------------------------------------------------

#[test]
fn acceptance_09_ablation_ordering() {
    let _serial = exclusive();
    let proposed = mean_throughput(Variant::Proposed);
    let random_sched = mean_throughput(Variant::RandomScheduler);
    let max_power = mean_throughput(Variant::MaxPower);
    let min_interference = mean_throughput(Variant::MinInterference);
    println!(
        "ACCEPTANCE 09 ablation-ordering: proposed {proposed:.4e}, random-scheduler \
         {random_sched:.4e}, max-power {max_power:.4e}, min-interference {min_interference:.4e}"
    );
    assert!(
        proposed >= max_power,
        "proposed {proposed:.4e} below max-power ablation {max_power:.4e}"
    );
    assert!(
        proposed >= min_interference,
        "proposed {proposed:.4e} below min-interference ablation {min_interference:.4e}"
    );
    assert!(
        proposed >= random_sched,
        "proposed {proposed:.4e} below random-scheduler ablation {random_sched:.4e} \
         (the published tight-fit selection rule loses to uniform random selection \
         at this density; see the scheduler density study in the test suite)"
    );
    println!("ACCEPTANCE 09 ablation-ordering: PASS");
}

// ---------------------------------------------------------------------------
// 10. Baseline comparison
// ---------------------------------------------------------------------------

#[test]
fn acceptance_10_baseline_comparison() {
    let _serial = exclusive();
    let start = Instant::now();
    let seeds = SEEDS.to_vec();
    let scenario = desk_scenario(1);
    // optimized plain CSMA
    let (dcf_cfg, _) = optimize_csma(&scenario, &CsmaSweep::quick(false, seeds.clone())).unwrap();
    let mut dcf_thr = 0.0;
    for &seed in &seeds {
        let mut sc = desk_scenario(seed);
        sc.seed = seed;
        dcf_thr += run_csma(&sc, &dcf_cfg)
            .unwrap()
            .report
            .throughput_bit_m_per_s;
    }
    dcf_thr /= seeds.len() as f64;
    // power-saving variant: sweep the ATIM window on top of the winning
    // carrier parameters
    let psm_sweep = CsmaSweep {
        thresholds_dbm: vec![hexnet_core::units::mw_to_dbm(
            dcf_cfg.carrier_sense_threshold_mw,
        )],
        target_rx_dbm: vec![hexnet_core::units::mw_to_dbm(dcf_cfg.target_rx_power_mw)],
        atim_windows_ms: vec![5.0, 10.0, 20.0, 40.0],
        seeds: seeds.clone(),
        psm: true,
    };
    let (psm_cfg, _) = optimize_csma(&scenario, &psm_sweep).unwrap();
    let mut psm_energy = Vec::new();
    for &seed in &seeds {
        let mut sc = desk_scenario(seed);
        sc.seed = seed;
        if let Some(e) = run_csma(&sc, &psm_cfg).unwrap().report.energy_per_bit_j {
            psm_energy.push(e);
        }
    }
    let psm_energy = psm_energy.iter().sum::<f64>() / psm_energy.len() as f64;

    let proposed_thr = mean_throughput(Variant::Proposed);
    let proposed_energy = mean_energy(Variant::Proposed);
    let elapsed = start.elapsed().as_secs_f64();
    println!(
        "ACCEPTANCE 10 baseline-comparison: proposed thr {proposed_thr:.4e} vs best-DCF \
         {dcf_thr:.4e} (x{:.2}); proposed energy {proposed_energy:.3e} vs best-PSM \
         {psm_energy:.3e} (x{:.2}); {elapsed:.0} s",
        proposed_thr / dcf_thr,
        proposed_energy / psm_energy
    );
    assert!(elapsed < 900.0, "baseline comparison took {elapsed:.0} s");
    assert!(
        proposed_thr >= 1.2 * dcf_thr,
        "throughput ratio {:.3} below 1.2",
        proposed_thr / dcf_thr
    );
    assert!(
        proposed_energy <= 0.5 * psm_energy,
        "energy ratio {:.3} above 0.5",
        proposed_energy / psm_energy
    );
    println!("ACCEPTANCE 10 baseline-comparison: PASS");
}

// ---------------------------------------------------------------------------
// 11. Scheduling-efficiency window and per-seed regression pins
// ---------------------------------------------------------------------------

#[test]
fn acceptance_11_scheduling_efficiency_window() {
    let _serial = exclusive();
    let mut per_seed = Vec::new();
    for &seed in SEEDS {
        let eff = cached_report(Variant::Proposed, seed).scheduling_efficiency_data_slots;
        assert!(
            (0.4..=0.9).contains(&eff),
            "seed {seed}: data-slot efficiency {eff:.3} outside [0.4, 0.9]"
        );
        per_seed.push((seed, eff));
    }
    check_efficiency_pins(&per_seed);
    println!(
        "ACCEPTANCE 11 scheduling-efficiency: PASS ({}; large-network reference value 0.78)",
        per_seed
            .iter()
            .map(|(s, e)| format!("seed {s}: {e:.3}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
}

// ---------------------------------------------------------------------------
// 12. Determinism and conservation
// ---------------------------------------------------------------------------

#[test]
fn acceptance_12_determinism_and_conservation() {
    let _serial = exclusive();
    let mut checked = 0;
    for seed in 0..8u64 {
        let mut sc = SimScenario {
            nodes: 8 + (seed as usize % 3) * 9,
            seed: 40 + seed,
            duration_s: 0.6,
            ..SimScenario::default()
        };
        if seed % 2 == 0 {
            sc.traffic = TrafficConfig {
                poisson_rate_bps_per_node: Some(1e5 * (1.0 + seed as f64)),
                packet_bits: 2000,
            };
        }
        if seed % 3 == 0 {
            sc.mobility = Some(hexnet_core::scenario::MobilityConfig::default());
        }
        let a = run_simulation(&sc).unwrap();
        let b = run_simulation(&sc).unwrap();
        assert_eq!(
            a.trace.digest(),
            b.trace.digest(),
            "digest differs at seed {seed}"
        );
        if !sc.traffic.saturated() {
            let generated = a.trace.total_generated_bits();
            let delivered = a.trace.total_delivered_bits();
            let queued = a.trace.frames.last().unwrap().queued_bits;
            assert_eq!(
                generated,
                delivered + queued,
                "bit conservation broken at seed {seed}"
            );
        }
        // energy accounting: every entity pays at least sleep power for
        // the whole run and no more than always-on transmit power
        let per_frame_cap = (sc.radio.circuit_power_w
            + sc.radio.amp_inverse_efficiency * 1e-3 * sc.radio.tx_power_max_mw)
            * sc.frame.frame_s();
        for f in &a.trace.frames {
            for &e in &f.energy_j {
                assert!(e >= sc.radio.sleep_power_w * sc.frame.frame_s() - 1e-12);
                assert!(e <= per_frame_cap * (1.0 + 1e-9), "energy {e} above cap");
            }
        }
        checked += 1;
    }
    println!("ACCEPTANCE 12 determinism-and-conservation: PASS ({checked} fuzzed scenarios)");
}
