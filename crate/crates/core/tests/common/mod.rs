//! Shared test machinery: the direct lattice-sum oracle, the independent
//! scheduler-selection oracle, fuzzed instance generation, and a cache of
//! desk-scale simulation runs shared by the acceptance tests.

#![allow(dead_code)]

use hexnet_core::metrics::MetricsReport;
use hexnet_core::model::{channel_gain, RadioParams};
use hexnet_core::planner::PlannerMode;
use hexnet_core::scenario::SimScenario;
use hexnet_core::scheduler::{
    build_schedule, SchedLink, ScheduleProblem, SchedulerMode, SchedulerState,
};
use hexnet_core::sim::run_simulation;
use hexnet_core::util::{SquareMatrix, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::sync::{Mutex, OnceLock};

const SQRT3: f64 = 1.7320508075688772;

/// Serialises acceptance tests so timing-gated checks get the whole
/// machine. Failing tests poison the lock; later tests just reclaim it.
pub fn exclusive() -> std::sync::MutexGuard<'static, ()> {
    static LOCK: Mutex<()> = Mutex::new(());
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

// ---------------------------------------------------------------------------
// Direct lattice-sum oracle
// ---------------------------------------------------------------------------

/// Plain truncated double sum of dist^(-alpha) over the index block
/// [-m, m]^2 minus the origin. Row-pair symmetry halves the work and the
/// kernels avoid transcendental calls where the exponent allows.
pub fn direct_box_sum(r: f64, alpha: f64, m: i64) -> f64 {
    direct_box_sum_with_half(r, alpha, m).0
}

/// One pass returning the block sum at `m` together with the sum over
/// the half-size block, which feeds the Richardson tail step.
pub fn direct_box_sum_with_half(r: f64, alpha: f64, m: i64) -> (f64, f64) {
    if (alpha - 3.0).abs() < 1e-12 {
        box_sum_kernel(r, m, |d2| 1.0 / (d2 * d2.sqrt()))
    } else if (alpha - 3.5).abs() < 1e-12 {
        box_sum_kernel(r, m, |d2| 1.0 / (d2 * (d2 * d2.sqrt()).sqrt()))
    } else if (alpha - 6.0).abs() < 1e-12 {
        box_sum_kernel(r, m, |d2| 1.0 / (d2 * d2 * d2))
    } else {
        let p = -alpha / 2.0;
        box_sum_kernel(r, m, move |d2| d2.powf(p))
    }
}

fn box_sum_kernel<K: Fn(f64) -> f64 + Sync>(r: f64, m: i64, kernel: K) -> (f64, f64) {
    // Rows n and -n share values up to an index shift, so one extended
    // row pass [-m-n, m] serves both. Each pass is split at the window
    // boundaries of the full block and the half block; a segment's sum
    // enters each output with the number of windows covering it.
    let h = m / 2;
    (0..=m)
        .into_par_iter()
        .map(|n| {
            let y2 = (1.5 * n as f64 * r) * (1.5 * n as f64 * r);
            let base = n as f64 * 0.5 * SQRT3 * r - 1.0;
            let stride = SQRT3 * r;
            let row = |lo: i64, hi: i64| -> f64 {
                if hi < lo {
                    return 0.0;
                }
                let count = (hi - lo + 1) as usize;
                let mut acc = [0.0f64; 4];
                let mut x = [
                    lo as f64 * stride + base,
                    (lo + 1) as f64 * stride + base,
                    (lo + 2) as f64 * stride + base,
                    (lo + 3) as f64 * stride + base,
                ];
                let step = 4.0 * stride;
                for _ in 0..count / 4 {
                    acc[0] += kernel(x[0] * x[0] + y2);
                    acc[1] += kernel(x[1] * x[1] + y2);
                    acc[2] += kernel(x[2] * x[2] + y2);
                    acc[3] += kernel(x[3] * x[3] + y2);
                    x[0] += step;
                    x[1] += step;
                    x[2] += step;
                    x[3] += step;
                }
                for k in 0..count % 4 {
                    acc[k] += kernel(x[k] * x[k] + y2);
                }
                acc[0] + acc[1] + acc[2] + acc[3]
            };
            if n == 0 {
                let full = row(-m, -1) + row(1, m);
                let outside = row(-m, -h - 1) + row(h + 1, m);
                return (full, full - outside);
            }
            // full windows: [-m, m] for row +n, [-m-n, m-n] for row -n;
            // half windows (rows n <= h): [-h, h] and [-h-n, h-n]
            if n > h {
                let full = row(-m - n, -m - 1) + 2.0 * row(-m, m - n) + row(m - n + 1, m);
                (full, 0.0)
            } else {
                let s1 = row(-m - n, -m - 1); // neg full only
                let s2 = row(-m, -h - n - 1); // both full
                let s3 = row(-h - n, -h - 1); // both full + neg half
                let s4 = row(-h, h - n); // both full + both half
                let s5 = row(h - n + 1, h); // both full + pos half
                let s6 = row(h + 1, m - n); // both full
                let s7 = row(m - n + 1, m); // pos full only
                let full = s1 + 2.0 * (s2 + s3 + s4 + s5 + s6) + s7;
                let half = s3 + 2.0 * s4 + s5;
                (full, half)
            }
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1))
}

// ---------------------------------------------------------------------------
// Random scheduling instances
// ---------------------------------------------------------------------------

pub fn random_instance(
    links: usize,
    slots: usize,
    side_m: f64,
    seed: u64,
    params: &RadioParams,
) -> ScheduleProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sources: Vec<Vec2> = Vec::new();
    let mut dests: Vec<Vec2> = Vec::new();
    for _ in 0..links {
        loop {
            let s = Vec2::new(rng.gen::<f64>() * side_m, rng.gen::<f64>() * side_m);
            let ang = rng.gen::<f64>() * std::f64::consts::TAU;
            let reach = 2.0 + rng.gen::<f64>() * (params.max_link_distance_m - 2.0);
            let d = Vec2::new(s.x + reach * ang.cos(), s.y + reach * ang.sin());
            let ok = sources
                .iter()
                .chain(dests.iter())
                .all(|p| p.dist(s) > 0.5 && p.dist(d) > 0.5);
            if ok {
                sources.push(s);
                dests.push(d);
                break;
            }
        }
    }
    let gains = SquareMatrix::from_fn(links, |l, k| {
        channel_gain(sources[l].dist(dests[k]), params).unwrap()
    });
    let mut problem_links = Vec::new();
    for l in 0..links {
        let gamma = params.tx_power_min_mw
            * (params.tx_power_max_mw / params.tx_power_min_mw).powf(rng.gen::<f64>());
        let rx = gamma * gains.get(l, l);
        let eta = params.sinr_min * (params.sinr_max / params.sinr_min).powf(rng.gen::<f64>());
        let target = (rx / eta).clamp(params.interference_min_mw, params.interference_max_mw);
        let max_slots = if rng.gen::<f64>() < 0.3 {
            Some(rng.gen_range(1..=slots))
        } else {
            None
        };
        problem_links.push(SchedLink {
            tx_power_mw: gamma,
            target_interference_mw: target,
            direct_gain: gains.get(l, l),
            rate_cap: f64::INFINITY,
            max_slots,
            endpoints: (2 * l, 2 * l + 1),
            candidate: true,
            preset_slots: Vec::new(),
        });
    }
    ScheduleProblem {
        links: problem_links,
        gains,
        slots,
        floor_mw: 0.0,
    }
}

// ---------------------------------------------------------------------------
// Independent scheduler-selection oracle
// ---------------------------------------------------------------------------

/// Straight-from-definition re-evaluation of the greedy selection: every
/// quantity is recomputed from the raw assignment at every step.
pub struct SelectionOracle {
    pub assigned: Vec<Vec<bool>>,
    pub round_used: Vec<bool>,
    pub held: Vec<usize>,
}

impl SelectionOracle {
    pub fn new(links: usize, slots: usize) -> SelectionOracle {
        SelectionOracle {
            assigned: vec![vec![false; slots]; links],
            round_used: vec![false; links],
            held: vec![0; links],
        }
    }

    pub fn interference_at(&self, p: &ScheduleProblem, k: usize, t: usize) -> f64 {
        let mut sum = 0.0;
        for (j, lj) in p.links.iter().enumerate() {
            if j != k && self.assigned[j][t] {
                sum += lj.tx_power_mw * p.gains.get(j, k);
            }
        }
        sum
    }

    pub fn max_power(&self, p: &ScheduleProblem, l: usize, t: usize) -> Option<f64> {
        let mut best: Option<f64> = None;
        for (k, lk) in p.links.iter().enumerate() {
            if k == l || !self.assigned[k][t] {
                continue;
            }
            let head = lk.target_interference_mw - self.interference_at(p, k, t) - p.floor_mw;
            let cap = head / p.gains.get(l, k);
            best = Some(best.map_or(cap, |b: f64| b.min(cap)));
        }
        best
    }

    pub fn feasible(&self, p: &ScheduleProblem, l: usize, t: usize) -> bool {
        let lk = &p.links[l];
        if self.round_used[l] || self.assigned[l][t] {
            return false;
        }
        if let Some(q) = lk.max_slots {
            if self.held[l] + 1 > q {
                return false;
            }
        }
        if lk.rate_cap.is_finite() {
            let after = (self.held[l] + 1) as f64 * lk.slot_rate() / p.slots as f64;
            if after > lk.rate_cap * (1.0 + 1e-12) {
                return false;
            }
        }
        let (s, d) = lk.endpoints;
        for (k, other) in p.links.iter().enumerate() {
            if k != l && self.assigned[k][t] {
                let (os, od) = other.endpoints;
                if os == s || os == d || od == s || od == d {
                    return false;
                }
            }
        }
        if self.interference_at(p, l, t) + p.floor_mw > lk.target_interference_mw {
            return false;
        }
        match self.max_power(p, l, t) {
            None => true,
            Some(cap) => cap >= lk.tx_power_mw,
        }
    }

    pub fn product(&self, p: &ScheduleProblem, l: usize, t: usize) -> f64 {
        let lk = &p.links[l];
        let pr = match self.max_power(p, l, t) {
            None => 0.0,
            Some(cap) => lk.tx_power_mw / cap,
        };
        pr * (self.interference_at(p, l, t) + p.floor_mw) / lk.target_interference_mw
    }

    pub fn step(&self, p: &ScheduleProblem) -> Option<(usize, usize)> {
        let mut best: Option<(f64, usize, usize)> = None;
        for l in 0..p.links.len() {
            for t in 0..p.slots {
                if !self.feasible(p, l, t) {
                    continue;
                }
                let v = self.product(p, l, t);
                if best.is_none() || v > best.unwrap().0 {
                    best = Some((v, l, t));
                }
            }
        }
        best.map(|(_, l, t)| (l, t))
    }

    pub fn apply(&mut self, l: usize, t: usize) {
        self.assigned[l][t] = true;
        self.round_used[l] = true;
        self.held[l] += 1;
    }
}

/// Drive the live scheduler against the oracle step by step over random
/// small instances; returns the number of instances checked.
pub fn scheduler_oracle_check(instances: u64) -> u64 {
    let params = RadioParams::default();
    for seed in 0..instances {
        let links = 2 + (seed as usize % 3);
        let slots = 1 + (seed as usize % 3);
        let p = random_instance(links, slots, 60.0, seed, &params);
        let mut st = SchedulerState::new(&p);
        let mut oracle = SelectionOracle::new(links, slots);
        loop {
            let mine = st.greedy_step();
            let theirs = oracle.step(&p);
            assert_eq!(mine, theirs, "selection divergence at seed {seed}");
            let Some((l, t)) = mine else {
                if !st.close_round() {
                    break;
                }
                oracle.round_used.iter_mut().for_each(|b| *b = false);
                continue;
            };
            // admission safety: the grant never violates a standing target
            if let Some(cap) = st.max_allowed_power(l, t) {
                assert!(
                    cap >= p.links[l].tx_power_mw,
                    "admission unsafe at seed {seed}"
                );
            }
            st.apply_step(l, t);
            oracle.apply(l, t);
        }
    }
    instances
}

/// Structural invariants over fuzzed builds; returns instances checked.
pub fn scheduler_fuzz_check(instances: u64) -> u64 {
    let params = RadioParams::default();
    for seed in 0..instances {
        let links = 2 + (seed as usize % 11);
        let slots = 1 + (seed as usize % 6);
        let p = random_instance(links, slots, 80.0, seed + 10_000, &params);
        let mode = if seed % 3 == 0 {
            SchedulerMode::Random
        } else {
            SchedulerMode::Greedy
        };
        let m = build_schedule(&p, mode, seed);
        for t in 0..slots {
            for l in 0..links {
                if !m.is_assigned(l, t) {
                    continue;
                }
                let mut interference = p.floor_mw;
                for k in 0..links {
                    if k != l && m.is_assigned(k, t) {
                        interference += p.links[k].tx_power_mw * p.gains.get(k, l);
                    }
                }
                assert!(
                    interference <= p.links[l].target_interference_mw * (1.0 + 1e-9),
                    "target violated at seed {seed}"
                );
            }
        }
        let mut max_round = 0;
        for r in &m.log {
            max_round = max_round.max(r.round);
            if let Some(cap) = r.max_power_mw {
                assert!(cap >= p.links[r.link].tx_power_mw * (1.0 - 1e-12));
            }
        }
        for round in 1..=max_round {
            let mut seen = std::collections::BTreeSet::new();
            for r in m.log.iter().filter(|r| r.round == round) {
                assert!(seen.insert(r.link), "round fairness broken at seed {seed}");
            }
        }
        assert_eq!(m.log.len(), m.assigned_count());
        assert!(m.log.len() <= links * slots);
        let again = build_schedule(&p, mode, seed);
        assert_eq!(
            m.digest(),
            again.digest(),
            "nondeterministic at seed {seed}"
        );
    }
    instances
}

// ---------------------------------------------------------------------------
// Desk-scale simulation cache
// ---------------------------------------------------------------------------

pub const SEEDS: &[u64] = &[1, 2, 3, 4, 5];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Variant {
    Proposed,
    RandomScheduler,
    MaxPower,
    MinInterference,
}

pub fn desk_scenario(seed: u64) -> SimScenario {
    SimScenario {
        nodes: 100,
        seed,
        duration_s: 5.0,
        ..SimScenario::default()
    }
}

fn cache() -> &'static Mutex<BTreeMap<(Variant, u64), MetricsReport>> {
    static CELL: OnceLock<Mutex<BTreeMap<(Variant, u64), MetricsReport>>> = OnceLock::new();
    CELL.get_or_init(|| Mutex::new(BTreeMap::new()))
}

pub fn cached_report(variant: Variant, seed: u64) -> MetricsReport {
    let mut guard = cache().lock().unwrap();
    if let Some(r) = guard.get(&(variant, seed)) {
        return r.clone();
    }
    let mut sc = desk_scenario(seed);
    match variant {
        Variant::Proposed => {}
        Variant::RandomScheduler => sc.scheduler_mode = SchedulerMode::Random,
        Variant::MaxPower => sc.planner_mode = PlannerMode::MaxPower,
        Variant::MinInterference => sc.planner_mode = PlannerMode::MinInterference,
    }
    let report = run_simulation(&sc).unwrap().report;
    guard.insert((variant, seed), report.clone());
    report
}

pub fn mean_throughput(variant: Variant) -> f64 {
    SEEDS
        .iter()
        .map(|&s| cached_report(variant, s).throughput_bit_m_per_s)
        .sum::<f64>()
        / SEEDS.len() as f64
}

pub fn mean_energy(variant: Variant) -> f64 {
    let vals: Vec<f64> = SEEDS
        .iter()
        .filter_map(|&s| cached_report(variant, s).energy_per_bit_j)
        .collect();
    vals.iter().sum::<f64>() / vals.len() as f64
}

// ---------------------------------------------------------------------------
// Golden pins
// ---------------------------------------------------------------------------

fn golden_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

/// Compare per-seed efficiencies against the pinned regression values;
/// regenerate with UPDATE_GOLDEN=1.
pub fn check_efficiency_pins(per_seed: &[(u64, f64)]) {
    let path = golden_path("efficiency_pins.json");
    let update = std::env::var("UPDATE_GOLDEN").is_ok();
    if update || !path.exists() {
        let map: BTreeMap<String, f64> =
            per_seed.iter().map(|(s, e)| (s.to_string(), *e)).collect();
        std::fs::write(&path, serde_json::to_string_pretty(&map).unwrap()).unwrap();
        println!("(regenerated {})", path.display());
        return;
    }
    let pinned: BTreeMap<String, f64> =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    for (seed, eff) in per_seed {
        let pin = pinned
            .get(&seed.to_string())
            .unwrap_or_else(|| panic!("seed {seed} missing from pins"));
        assert!(
            (eff - pin).abs() <= 1e-9 * pin.abs().max(1.0),
            "seed {seed}: efficiency {eff:.12} drifted from pin {pin:.12} \
             (set UPDATE_GOLDEN=1 to accept)"
        );
    }
}
