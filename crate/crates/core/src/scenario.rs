//! Scenario configuration (the on-disk schema) and the node population
//! shared by the slotted MAC simulator and the CSMA baseline: placement,
//! destination selection, traffic arrivals and mobility.

use crate::cells::CellGrid;
use crate::error::{Error, Result};
use crate::model::RadioParams;
use crate::planner::PlannerMode;
use crate::scheduler::SchedulerMode;
use crate::util::{subseed, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Frame layout and signalling constants of the slotted MAC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrameConfig {
    /// Slot duration, ms.
    pub slot_ms: f64,
    pub contention_slots: usize,
    pub scheduling_slots: usize,
    pub data_slots: usize,
    /// Signalling rate for control packets, bit/s.
    pub signaling_rate_bps: f64,
    pub request_bits: u64,
    /// Size of one per-link schedule record in a scheduling packet.
    pub schedule_entry_bits: u64,
    pub mini_slot_us: f64,
    pub sifs_us: f64,
    pub preamble_us: f64,
    pub cw_min: u32,
    pub cw_max: u32,
}

impl Default for FrameConfig {
    fn default() -> Self {
        FrameConfig {
            slot_ms: 1.0,
            contention_slots: 3,
            scheduling_slots: 7,
            data_slots: 90,
            signaling_rate_bps: 6e6,
            request_bits: 160,
            schedule_entry_bits: 200,
            mini_slot_us: 20.0,
            sifs_us: 10.0,
            preamble_us: 72.0,
            cw_min: 15,
            cw_max: 1023,
        }
    }
}

impl FrameConfig {
    pub fn total_slots(&self) -> usize {
        self.contention_slots + self.scheduling_slots + self.data_slots
    }

    pub fn frame_s(&self) -> f64 {
        self.total_slots() as f64 * self.slot_ms * 1e-3
    }

    pub fn data_slot_fraction(&self) -> f64 {
        self.data_slots as f64 / self.total_slots() as f64
    }

    /// Schedule records that fit one scheduling packet.
    pub fn schedule_packet_capacity(&self) -> usize {
        ((self.slot_ms * 1e-3 * self.signaling_rate_bps) / self.schedule_entry_bits as f64).floor()
            as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.contention_slots == 0 || self.scheduling_slots == 0 || self.data_slots == 0 {
            return Err(Error::Config(
                "frame needs contention, scheduling and data slots".into(),
            ));
        }
        if self.schedule_packet_capacity() == 0 {
            return Err(Error::Config(
                "scheduling packet cannot hold a single record".into(),
            ));
        }
        if !(self.slot_ms > 0.0 && self.mini_slot_us > 0.0) {
            return Err(Error::Config("slot durations must be positive".into()));
        }
        Ok(())
    }
}

/// Cell layout parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub cell_radius_m: f64,
    pub info_radius_factor: f64,
    pub rings: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            cell_radius_m: 20.0,
            info_radius_factor: 1.5,
            rings: 2,
        }
    }
}

/// Traffic model: Poisson packet arrivals per node, or saturated queues
/// when no rate is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrafficConfig {
    /// Bits per second generated at each node; `None` = saturated.
    pub poisson_rate_bps_per_node: Option<f64>,
    pub packet_bits: u64,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        TrafficConfig {
            poisson_rate_bps_per_node: None,
            packet_bits: 6000,
        }
    }
}

impl TrafficConfig {
    pub fn saturated(&self) -> bool {
        self.poisson_rate_bps_per_node.is_none()
    }
}

/// Random-direction mobility with periodic location reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MobilityConfig {
    pub max_speed_mps: f64,
    pub report_period_s: f64,
}

impl Default for MobilityConfig {
    fn default() -> Self {
        MobilityConfig {
            max_speed_mps: 2.0,
            report_period_s: 1.0,
        }
    }
}

/// A complete simulation scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimScenario {
    pub nodes: usize,
    pub seed: u64,
    pub duration_s: f64,
    pub theta: f64,
    /// Product constant override; default max power * min interference.
    pub lambda_mw2: Option<f64>,
    pub planner_mode: PlannerMode,
    pub scheduler_mode: SchedulerMode,
    /// Links shorter than this are never formed (the planner's feasible
    /// box empties at very short range).
    pub min_link_distance_m: f64,
    pub traffic: TrafficConfig,
    pub mobility: Option<MobilityConfig>,
    pub radio: RadioParams,
    pub grid: GridConfig,
    pub frame: FrameConfig,
}

impl Default for SimScenario {
    fn default() -> Self {
        SimScenario {
            nodes: 100,
            seed: 1,
            duration_s: 5.0,
            theta: f64::INFINITY,
            lambda_mw2: None,
            planner_mode: PlannerMode::Proposed,
            scheduler_mode: SchedulerMode::Greedy,
            min_link_distance_m: 1.0,
            traffic: TrafficConfig::default(),
            mobility: None,
            radio: RadioParams::default(),
            grid: GridConfig::default(),
            frame: FrameConfig::default(),
        }
    }
}

impl SimScenario {
    pub fn validate(&self) -> Result<()> {
        self.radio.validate()?;
        self.frame.validate()?;
        if self.nodes == 0 {
            return Err(Error::Config("need at least one node".into()));
        }
        if !(self.duration_s > 0.0) {
            return Err(Error::Config("duration must be positive".into()));
        }
        if !(self.theta >= 1.0) {
            return Err(Error::Config("theta must be >= 1".into()));
        }
        if self.grid.cell_radius_m < self.radio.max_link_distance_m {
            return Err(Error::Config(format!(
                "cell radius {} below the maximum link distance {}",
                self.grid.cell_radius_m, self.radio.max_link_distance_m
            )));
        }
        if let Some(m) = &self.mobility {
            if !(m.max_speed_mps >= 0.0 && m.report_period_s > 0.0) {
                return Err(Error::Config("bad mobility parameters".into()));
            }
        }
        Ok(())
    }

    /// Product constant for the planner. The default puts the longest
    /// admissible link exactly at its budget corner: transmitting at max
    /// power with the largest interference target it can tolerate at the
    /// minimum SINR. Smaller defaults give long links targets below the
    /// distributed floor and starve them.
    pub fn lambda(&self) -> f64 {
        self.lambda_mw2.unwrap_or_else(|| {
            let r = &self.radio;
            let cd = r.channel_constant * r.max_link_distance_m.powf(-r.path_loss_exponent);
            r.tx_power_max_mw * (cd * r.tx_power_max_mw / r.sinr_min)
        })
    }

    pub fn build_grid(&self) -> Result<CellGrid> {
        CellGrid::hexagonal(
            self.grid.cell_radius_m,
            self.grid.info_radius_factor,
            self.grid.rings,
        )
    }

    pub fn frames(&self) -> usize {
        (self.duration_s / self.frame.frame_s()).round().max(1.0) as usize
    }
}

// ---------------------------------------------------------------------------
// Population
// ---------------------------------------------------------------------------

/// Traffic queue of one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Queue {
    Saturated,
    Bits(u64),
}

impl Queue {
    pub fn backlog(&self) -> u64 {
        match self {
            Queue::Saturated => u64::MAX / 4,
            Queue::Bits(b) => *b,
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Queue::Bits(0))
    }

    pub fn drain(&mut self, bits: u64) -> u64 {
        match self {
            Queue::Saturated => bits,
            Queue::Bits(b) => {
                let taken = bits.min(*b);
                *b -= taken;
                taken
            }
        }
    }
}

/// Mutable per-node state shared by both simulators.
#[derive(Debug, Clone)]
pub struct PopNode {
    pub pos: Vec2,
    pub vel: Vec2,
    pub dest: Option<usize>,
    pub queue: Queue,
}

/// The node population plus the RNG streams that drive it.
pub struct Population {
    pub nodes: Vec<PopNode>,
    grid_box: (Vec2, Vec2),
    dest_rng: ChaCha8Rng,
    traffic_rng: ChaCha8Rng,
    mobility_rng: ChaCha8Rng,
    pub generated_bits: u64,
}

impl Population {
    /// Place `n` nodes uniformly in the cell-union area, assign initial
    /// velocities and destinations.
    pub fn new(scenario: &SimScenario, grid: &CellGrid) -> Population {
        let mut place_rng = ChaCha8Rng::seed_from_u64(subseed(scenario.seed, "placement", 0));
        let (lo, hi) = grid.bounding_box();
        let mut nodes = Vec::with_capacity(scenario.nodes);
        for _ in 0..scenario.nodes {
            let pos = loop {
                let p = Vec2::new(
                    lo.x + place_rng.gen::<f64>() * (hi.x - lo.x),
                    lo.y + place_rng.gen::<f64>() * (hi.y - lo.y),
                );
                if grid.contains(p) {
                    break p;
                }
            };
            let vel = match &scenario.mobility {
                None => Vec2::ZERO,
                Some(m) => {
                    let speed = place_rng.gen::<f64>() * m.max_speed_mps;
                    let heading =
                        place_rng.gen::<f64>() * 2.0 * std::f64::consts::PI - std::f64::consts::PI;
                    Vec2::new(speed * heading.cos(), speed * heading.sin())
                }
            };
            let queue = if scenario.traffic.saturated() {
                Queue::Saturated
            } else {
                Queue::Bits(0)
            };
            nodes.push(PopNode {
                pos,
                vel,
                dest: None,
                queue,
            });
        }
        let mut pop = Population {
            nodes,
            grid_box: (lo, hi),
            dest_rng: ChaCha8Rng::seed_from_u64(subseed(scenario.seed, "destinations", 0)),
            traffic_rng: ChaCha8Rng::seed_from_u64(subseed(scenario.seed, "traffic", 0)),
            mobility_rng: ChaCha8Rng::seed_from_u64(subseed(scenario.seed, "mobility", 0)),
            generated_bits: 0,
        };
        pop.reselect_destinations(scenario);
        pop
    }

    /// (Re)pick destinations for nodes whose current destination is
    /// missing or out of range: uniform over nodes within
    /// [min_link_distance, max_link_distance].
    pub fn reselect_destinations(&mut self, scenario: &SimScenario) {
        let d_max = scenario.radio.max_link_distance_m;
        let d_min = scenario.min_link_distance_m;
        for i in 0..self.nodes.len() {
            let keep = self.nodes[i].dest.is_some_and(|d| {
                let dist = self.nodes[i].pos.dist(self.nodes[d].pos);
                dist <= d_max && dist >= d_min
            });
            if keep {
                continue;
            }
            let mut in_range = Vec::new();
            for (j, other) in self.nodes.iter().enumerate() {
                if j == i {
                    continue;
                }
                let dist = self.nodes[i].pos.dist(other.pos);
                if dist >= d_min && dist <= d_max {
                    in_range.push(j);
                }
            }
            self.nodes[i].dest = if in_range.is_empty() {
                None
            } else {
                Some(in_range[self.dest_rng.gen_range(0..in_range.len())])
            };
        }
    }

    /// Advance positions by `dt` seconds, reflecting at the layout's
    /// bounding box. Headings persist between reflections.
    pub fn step_mobility(&mut self, scenario: &SimScenario, dt: f64) {
        let Some(_m) = &scenario.mobility else { return };
        let (lo, hi) = self.grid_box;
        for n in &mut self.nodes {
            n.pos.x += n.vel.x * dt;
            n.pos.y += n.vel.y * dt;
            if n.pos.x < lo.x {
                n.pos.x = 2.0 * lo.x - n.pos.x;
                n.vel.x = -n.vel.x;
            }
            if n.pos.x > hi.x {
                n.pos.x = 2.0 * hi.x - n.pos.x;
                n.vel.x = -n.vel.x;
            }
            if n.pos.y < lo.y {
                n.pos.y = 2.0 * lo.y - n.pos.y;
                n.vel.y = -n.vel.y;
            }
            if n.pos.y > hi.y {
                n.pos.y = 2.0 * hi.y - n.pos.y;
                n.vel.y = -n.vel.y;
            }
        }
        let _ = &mut self.mobility_rng; // headings are fixed per node; stream reserved
    }

    /// Poisson packet arrivals over an interval of `dt` seconds.
    /// Returns the bits generated.
    pub fn arrivals(&mut self, scenario: &SimScenario, dt: f64) -> u64 {
        let Some(rate) = scenario.traffic.poisson_rate_bps_per_node else {
            return 0;
        };
        let pkt = scenario.traffic.packet_bits;
        let lambda = rate * dt / pkt as f64;
        let mut total = 0u64;
        for n in &mut self.nodes {
            let k = sample_poisson(&mut self.traffic_rng, lambda);
            let bits = k * pkt;
            if let Queue::Bits(b) = &mut n.queue {
                *b += bits;
            }
            total += bits;
        }
        self.generated_bits += total;
        total
    }

    pub fn queued_bits(&self) -> u64 {
        self.nodes
            .iter()
            .map(|n| match n.queue {
                Queue::Saturated => 0,
                Queue::Bits(b) => b,
            })
            .sum()
    }
}

/// Knuth-style Poisson sampler; switches to a normal approximation for
/// large means where the product underflows.
fn sample_poisson(rng: &mut ChaCha8Rng, lambda: f64) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    if lambda < 30.0 {
        let l = (-lambda).exp();
        let mut k = 0u64;
        let mut p = 1.0;
        loop {
            p *= rng.gen::<f64>();
            if p <= l {
                return k;
            }
            k += 1;
        }
    } else {
        // normal approximation with continuity correction
        let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
        let u2: f64 = rng.gen();
        let z = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        (lambda + lambda.sqrt() * z + 0.5).max(0.0) as u64
    }
}
