//! Sequential greedy link scheduling over a slot horizon.
//!
//! Links carry a planned (tx power, target interference) pair. A link may
//! be added to a slot only if (a) its own residual interference in that
//! slot stays at or below its target and (b) its transmission would not
//! push any already-scheduled destination above its target. Among the
//! feasible (link, slot) pairs the greedy rule picks the one whose
//! interference budget is closest to fully used on both sides, packing
//! links as tightly as the targets allow.
//!
//! Scheduling runs in rounds for fairness: within a round every link is
//! granted at most one slot; rounds repeat until nothing can be added.

use crate::util::{Digest, SquareMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// One link as the scheduler sees it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedLink {
    /// Planned transmit power, mW.
    pub tx_power_mw: f64,
    /// Planned target interference, mW.
    pub target_interference_mw: f64,
    /// Gain from the link's own source to its own destination.
    pub direct_gain: f64,
    /// Rate cap, bit/s/Hz (`INFINITY` when unbounded).
    pub rate_cap: f64,
    /// Maximum slots this link may hold (demand quota).
    pub max_slots: Option<usize>,
    /// Endpoint node ids (source, dest); links sharing a node are
    /// half-duplex conflicting and never share a slot.
    pub endpoints: (usize, usize),
    /// False for links that were scheduled elsewhere: they constrain the
    /// packing but are never picked.
    pub candidate: bool,
    /// Pre-existing slot assignments (e.g. grants overheard from other
    /// schedulers).
    pub preset_slots: Vec<usize>,
}

impl SchedLink {
    pub fn planned_sinr(&self) -> f64 {
        self.tx_power_mw * self.direct_gain / self.target_interference_mw
    }

    pub fn slot_rate(&self) -> f64 {
        (1.0 + self.planned_sinr()).log2()
    }
}

/// A scheduling instance.
#[derive(Debug, Clone)]
pub struct ScheduleProblem {
    pub links: Vec<SchedLink>,
    /// `gains.get(l, k)`: gain from the source of link `l` to the
    /// destination of link `k`.
    pub gains: SquareMatrix,
    pub slots: usize,
    /// Interference floor added to every budget evaluation (remote bound
    /// plus noise in distributed operation; zero when centralised).
    pub floor_mw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SchedulerMode {
    #[default]
    Greedy,
    Random,
}

/// One scheduling decision, for dump and debugging.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub round: usize,
    pub step: usize,
    pub link: usize,
    pub slot: usize,
    /// Max power admissible at selection time (None = empty slot).
    pub max_power_mw: Option<f64>,
    /// Residual interference at selection time, mW.
    pub residual_mw: f64,
    /// Greedy selection product.
    pub product: f64,
}

/// The resulting assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleMatrix {
    pub links: usize,
    pub slots: usize,
    assigned: Vec<bool>,
    tx_power_mw: Vec<f64>,
    pub log: Vec<StepRecord>,
}

impl ScheduleMatrix {
    pub fn is_assigned(&self, link: usize, slot: usize) -> bool {
        self.assigned[link * self.slots + slot]
    }

    pub fn tx_power(&self, link: usize, slot: usize) -> f64 {
        self.tx_power_mw[link * self.slots + slot]
    }

    pub fn slots_of(&self, link: usize) -> Vec<usize> {
        (0..self.slots)
            .filter(|&t| self.is_assigned(link, t))
            .collect()
    }

    pub fn assigned_count(&self) -> usize {
        self.assigned.iter().filter(|&&b| b).count()
    }

    pub fn digest(&self) -> u64 {
        let mut d = Digest::new();
        d.usize(self.links).usize(self.slots);
        for &b in &self.assigned {
            d.bool(b);
        }
        for &p in &self.tx_power_mw {
            d.f64(p);
        }
        for r in &self.log {
            d.usize(r.round).usize(r.step).usize(r.link).usize(r.slot);
        }
        d.finish()
    }
}

/// Live scheduler state: the current assignment plus incrementally
/// maintained per-destination interference sums.
pub struct SchedulerState<'a> {
    problem: &'a ScheduleProblem,
    assigned: Vec<bool>,
    /// interference[k * T + t] = sum over scheduled j != k of
    /// gamma_j * h_jk at slot t (floor excluded; added on read).
    interference: Vec<f64>,
    scheduled_at: Vec<Vec<usize>>,
    slots_held: Vec<usize>,
    round_used: Vec<bool>,
    pub step: usize,
    pub round: usize,
}

impl<'a> SchedulerState<'a> {
    pub fn new(problem: &'a ScheduleProblem) -> Self {
        let l = problem.links.len();
        let t = problem.slots;
        let mut s = SchedulerState {
            problem,
            assigned: vec![false; l * t],
            interference: vec![0.0; l * t],
            scheduled_at: vec![Vec::new(); t],
            slots_held: vec![0; l],
            round_used: vec![false; l],
            step: 0,
            round: 0,
        };
        // apply presets in deterministic (link, slot) order
        for l_id in 0..l {
            for &slot in &problem.links[l_id].preset_slots {
                assert!(slot < t, "preset slot out of range");
                if !s.assigned[l_id * t + slot] {
                    s.apply(l_id, slot);
                }
            }
        }
        s
    }

    pub fn is_assigned(&self, link: usize, slot: usize) -> bool {
        self.assigned[link * self.problem.slots + slot]
    }

    pub fn slots_held(&self, link: usize) -> usize {
        self.slots_held[link]
    }

    /// Maximum power a new transmitter on `link` could use in `slot`
    /// without pushing any scheduled destination above its target.
    /// `None` when no other link is scheduled there (unbounded).
    pub fn max_allowed_power(&self, link: usize, slot: usize) -> Option<f64> {
        let t = self.problem.slots;
        let mut best: Option<f64> = None;
        for &k in &self.scheduled_at[slot] {
            if k == link {
                continue;
            }
            let lk = &self.problem.links[k];
            let headroom =
                lk.target_interference_mw - self.interference[k * t + slot] - self.problem.floor_mw;
            let h = self.problem.gains.get(link, k);
            let cap = headroom / h;
            best = Some(match best {
                None => cap,
                Some(b) => b.min(cap),
            });
        }
        best
    }

    /// Interference already present at `link`'s destination in `slot`,
    /// including the floor.
    pub fn residual_interference(&self, link: usize, slot: usize) -> f64 {
        self.interference[link * self.problem.slots + slot] + self.problem.floor_mw
    }

    fn conflicts(&self, link: usize, slot: usize) -> bool {
        let (s, d) = self.problem.links[link].endpoints;
        self.scheduled_at[slot].iter().any(|&k| {
            let (ks, kd) = self.problem.links[k].endpoints;
            ks == s || ks == d || kd == s || kd == d
        })
    }

    /// Admissibility of adding (link, slot), with the rate cap evaluated
    /// on the rate after the hypothetical addition.
    pub fn feasible(&self, link: usize, slot: usize) -> bool {
        let lk = &self.problem.links[link];
        if !lk.candidate || self.round_used[link] || self.is_assigned(link, slot) {
            return false;
        }
        if let Some(q) = lk.max_slots {
            if self.slots_held[link] + 1 > q {
                return false;
            }
        }
        if lk.rate_cap.is_finite() {
            let after =
                (self.slots_held[link] + 1) as f64 * lk.slot_rate() / self.problem.slots as f64;
            if after > lk.rate_cap * (1.0 + 1e-12) {
                return false;
            }
        }
        if self.conflicts(link, slot) {
            return false;
        }
        if self.residual_interference(link, slot) > lk.target_interference_mw {
            return false;
        }
        match self.max_allowed_power(link, slot) {
            None => true,
            Some(cap) => cap >= lk.tx_power_mw,
        }
    }

    /// Greedy selection product: how fully the interference budgets are
    /// used on both sides. Zero on an empty slot.
    pub fn product(&self, link: usize, slot: usize) -> f64 {
        let lk = &self.problem.links[link];
        let power_ratio = match self.max_allowed_power(link, slot) {
            None => 0.0,
            Some(cap) => lk.tx_power_mw / cap,
        };
        let interference_ratio = self.residual_interference(link, slot) / lk.target_interference_mw;
        power_ratio * interference_ratio
    }

    /// Best feasible (link, slot) under the greedy rule; ties broken to
    /// the smaller link id, then the smaller slot.
    pub fn greedy_step(&self) -> Option<(usize, usize)> {
        let mut best: Option<(f64, usize, usize)> = None;
        for l in 0..self.problem.links.len() {
            for t in 0..self.problem.slots {
                if !self.feasible(l, t) {
                    continue;
                }
                let p = self.product(l, t);
                let better = match best {
                    None => true,
                    Some((bp, ..)) => p > bp,
                };
                if better {
                    best = Some((p, l, t));
                }
            }
        }
        best.map(|(_, l, t)| (l, t))
    }

    /// Uniform choice among all feasible (link, slot) pairs.
    pub fn random_step(&self, rng: &mut ChaCha8Rng) -> Option<(usize, usize)> {
        let mut feasible = Vec::new();
        for l in 0..self.problem.links.len() {
            for t in 0..self.problem.slots {
                if self.feasible(l, t) {
                    feasible.push((l, t));
                }
            }
        }
        if feasible.is_empty() {
            None
        } else {
            Some(feasible[rng.gen_range(0..feasible.len())])
        }
    }

    fn apply(&mut self, link: usize, slot: usize) {
        let t = self.problem.slots;
        self.assigned[link * t + slot] = true;
        self.scheduled_at[slot].push(link);
        self.slots_held[link] += 1;
        self.round_used[link] = true;
        let gamma = self.problem.links[link].tx_power_mw;
        for k in 0..self.problem.links.len() {
            if k != link {
                self.interference[k * t + slot] += gamma * self.problem.gains.get(link, k);
            }
        }
    }

    /// Commit a selected (link, slot) and advance the step counter.
    pub fn apply_step(&mut self, link: usize, slot: usize) {
        self.step += 1;
        self.apply(link, slot);
    }

    /// Close the current round. Returns true when another round could
    /// still add something.
    pub fn close_round(&mut self) -> bool {
        self.round += 1;
        self.round_used.iter_mut().for_each(|b| *b = false);
        for l in 0..self.problem.links.len() {
            for t in 0..self.problem.slots {
                if self.feasible(l, t) {
                    return true;
                }
            }
        }
        false
    }
}

/// Run the round-based sequential scheduler.
pub fn build_schedule(problem: &ScheduleProblem, mode: SchedulerMode, seed: u64) -> ScheduleMatrix {
    let l = problem.links.len();
    let t = problem.slots;
    debug_assert_eq!(problem.gains.size(), l);
    let mut state = SchedulerState::new(problem);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut log = Vec::new();

    loop {
        state.round += 1;
        state.round_used.iter_mut().for_each(|b| *b = false);
        let mut progressed = false;
        loop {
            let pick = match mode {
                SchedulerMode::Greedy => state.greedy_step(),
                SchedulerMode::Random => state.random_step(&mut rng),
            };
            let Some((link, slot)) = pick else { break };
            state.step += 1;
            log.push(StepRecord {
                round: state.round,
                step: state.step,
                link,
                slot,
                max_power_mw: state.max_allowed_power(link, slot),
                residual_mw: state.residual_interference(link, slot),
                product: state.product(link, slot),
            });
            state.apply(link, slot);
            progressed = true;
        }
        if !progressed {
            break;
        }
    }

    let mut tx_power_mw = vec![0.0; l * t];
    for link in 0..l {
        for slot in 0..t {
            if state.assigned[link * t + slot] {
                tx_power_mw[link * t + slot] = problem.links[link].tx_power_mw;
            }
        }
    }
    ScheduleMatrix {
        links: l,
        slots: t,
        assigned: state.assigned,
        tx_power_mw,
        log,
    }
}
