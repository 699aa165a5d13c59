//! DCF-style CSMA/CA baseline with an optional power-saving (ATIM) mode.
//!
//! Time advances in mini-slot ticks. A node with pending traffic counts
//! its backoff down while the power it senses stays below the
//! carrier-sense threshold, then transmits a 1 ms data packet; reception
//! succeeds if the destination's SINR stays above the requirement of the
//! chosen rate for the whole packet. Transmit power follows the
//! fixed-sensing-threshold rule: each source scales its power to reach a
//! common target received power at its destination. Per-link rates are
//! chosen empirically: a round-robin over a rate ladder during warmup,
//! then the best-goodput rung.
//!
//! In power-saving mode each beacon interval opens with an ATIM window;
//! sources announce pending traffic (ATIM / ATIM-ACK exchange) and nodes
//! that end the window without announced traffic sleep until the next
//! beacon.

use crate::error::Result;
use crate::metrics::{build_report, RegionFilter};
use crate::model::channel_gain;
use crate::scenario::{Population, SimScenario};
use crate::trace::{FrameStats, SimTrace, TxRecord};
use crate::units::dbm_to_mw;
use crate::util::subseed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Baseline configuration. Contention constants (CW bounds, mini-slot,
/// SIFS, preamble) come from the scenario's frame config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsmaConfig {
    pub carrier_sense_threshold_mw: f64,
    /// Common target received power; tx power = target * d^alpha / c,
    /// clamped to the power box.
    pub target_rx_power_mw: f64,
    pub psm: bool,
    pub atim_window_ms: f64,
    pub atim_bits: u64,
    pub atim_ack_bits: u64,
    /// Candidate packet SINR requirements, dB.
    pub rate_ladder_db: Vec<f64>,
    /// Rate-adaptation warmup, seconds.
    pub warmup_s: f64,
}

impl Default for CsmaConfig {
    fn default() -> Self {
        CsmaConfig {
            carrier_sense_threshold_mw: dbm_to_mw(-75.0),
            target_rx_power_mw: dbm_to_mw(-58.0),
            psm: false,
            atim_window_ms: 20.0,
            atim_bits: 224,
            atim_ack_bits: 112,
            rate_ladder_db: vec![6.0, 9.0, 12.0, 15.0, 18.0, 21.0, 24.0, 27.0, 30.0],
            warmup_s: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TxKind {
    Data,
    Atim,
    AtimAck,
}

#[derive(Debug, Clone)]
struct ActiveTx {
    src: usize,
    dst: usize,
    kind: TxKind,
    power_mw: f64,
    end: usize,
    signal_mw: f64,
    interference_mw: f64,
    min_sinr: f64,
    required_sinr: f64,
    bits: u64,
    rung: usize,
    rx_blocked: bool,
    /// Received power at every node, for sensing bookkeeping.
    rx_at: Vec<f64>,
}

struct NodeCsma {
    power_mw: f64,
    cw: u32,
    backoff: u32,
    in_tx: bool,
    awake: bool,
    announced: bool,
    rung_attempts: Vec<u64>,
    rung_bits: Vec<u64>,
    attempts_total: u64,
    awake_ticks: u64,
    amp_energy_j: f64,
}

pub fn run_csma(scenario: &SimScenario, cfg: &CsmaConfig) -> Result<crate::sim::SimOutcome> {
    scenario.validate()?;
    let grid = scenario.build_grid()?;
    let params = &scenario.radio;
    let frame = &scenario.frame;
    let mut pop = Population::new(scenario, &grid);
    let n = scenario.nodes;

    let tick_s = frame.mini_slot_us * 1e-6;
    let interval_s = frame.frame_s();
    let ticks_per_interval = (interval_s / tick_s).round() as usize;
    let intervals = scenario.frames();
    let data_ticks =
        ((frame.preamble_us + frame.slot_ms * 1000.0) / frame.mini_slot_us).ceil() as usize;
    let atim_ticks = ((frame.preamble_us + cfg.atim_bits as f64 / frame.signaling_rate_bps * 1e6)
        / frame.mini_slot_us)
        .ceil() as usize;
    let ack_ticks = ((frame.preamble_us
        + cfg.atim_ack_bits as f64 / frame.signaling_rate_bps * 1e6)
        / frame.mini_slot_us)
        .ceil() as usize;
    let sifs_ticks = (frame.sifs_us / frame.mini_slot_us).ceil().max(1.0) as usize;
    let window_ticks = if cfg.psm {
        ((cfg.atim_window_ms * 1e-3 / tick_s).round() as usize).min(ticks_per_interval)
    } else {
        0
    };
    let warmup_intervals = (cfg.warmup_s / interval_s).ceil() as usize;
    let ladder: Vec<f64> = cfg.rate_ladder_db.iter().map(|db| dbm_to_mw(*db)).collect();
    let ladder_bits: Vec<u64> = ladder
        .iter()
        .map(|thr| ((1.0 + thr).log2() * params.bandwidth_hz * frame.slot_ms * 1e-3).floor() as u64)
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(subseed(scenario.seed, "csma", 0));
    let mut nodes: Vec<NodeCsma> = (0..n)
        .map(|_| NodeCsma {
            power_mw: params.tx_power_max_mw,
            cw: frame.cw_min,
            backoff: 0,
            in_tx: false,
            awake: true,
            announced: false,
            rung_attempts: vec![0; ladder.len()],
            rung_bits: vec![0; ladder.len()],
            attempts_total: 0,
            awake_ticks: 0,
            amp_energy_j: 0.0,
        })
        .collect();

    let mut trace = SimTrace {
        nodes: n,
        coordinators: 0,
        duration_s: intervals as f64 * interval_s,
        bandwidth_hz: params.bandwidth_hz,
        data_slot_fraction: 1.0,
        frames: Vec::with_capacity(intervals),
        transmissions: Vec::new(),
    };

    let gain = |a: crate::util::Vec2, b: crate::util::Vec2| -> f64 {
        channel_gain(a.dist(b).max(0.1), params).unwrap()
    };
    let power_rule = |d: f64| -> f64 {
        (cfg.target_rx_power_mw * d.max(0.1).powf(params.path_loss_exponent)
            / params.channel_constant)
            .clamp(params.tx_power_min_mw, params.tx_power_max_mw)
    };

    for interval in 0..intervals {
        // per-interval setup: powers from current link distances
        for i in 0..n {
            if let Some(d) = pop.nodes[i].dest {
                let dist = pop.nodes[i].pos.dist(pop.nodes[d].pos);
                nodes[i].power_mw = power_rule(dist);
            }
            nodes[i].awake = true;
            nodes[i].announced = !cfg.psm; // without PSM everyone counts as announced
            nodes[i].awake_ticks = 0;
            nodes[i].amp_energy_j = 0.0;
            nodes[i].in_tx = false;
        }
        let mut active: Vec<ActiveTx> = Vec::new();
        let mut sensed = vec![0.0f64; n];
        let mut pending_acks: Vec<(usize, usize, usize)> = Vec::new(); // (start, src=dst of atim, dst=src of atim)
        let mut fs = FrameStats::new(n);

        for tick in 0..ticks_per_interval {
            let in_window = cfg.psm && tick < window_ticks;
            if cfg.psm && tick == window_ticks {
                // window closes: unannounced nodes sleep out the interval
                for node in nodes.iter_mut() {
                    if !node.announced {
                        node.awake = false;
                    }
                }
            }

            // --- transmission ends -----------------------------------------
            let mut ended: Vec<ActiveTx> = Vec::new();
            let mut kept: Vec<ActiveTx> = Vec::new();
            for tx in active.drain(..) {
                if tx.end <= tick {
                    ended.push(tx);
                } else {
                    kept.push(tx);
                }
            }
            active = kept;
            for tx in &ended {
                for i in 0..n {
                    sensed[i] -= tx.rx_at[i];
                }
                for other in active.iter_mut() {
                    other.interference_mw -= tx.rx_at.get(other.dst).copied().unwrap_or(0.0);
                }
                nodes[tx.src].in_tx = false;
            }
            for tx in ended {
                let ok = !tx.rx_blocked && tx.min_sinr >= tx.required_sinr;
                match tx.kind {
                    TxKind::Data => {
                        let node = &mut nodes[tx.src];
                        node.rung_attempts[tx.rung] += 1;
                        node.attempts_total += 1;
                        let d = pop.nodes[tx.src].pos.dist(pop.nodes[tx.dst].pos);
                        let mut delivered = 0u64;
                        if ok {
                            delivered = pop.nodes[tx.src].queue.drain(tx.bits);
                            nodes[tx.src].rung_bits[tx.rung] += delivered;
                            nodes[tx.src].cw = frame.cw_min;
                            fs.delivered_bits[tx.src] += delivered;
                            fs.bits_distance[tx.src] += delivered as f64 * d;
                            fs.bits_distance2[tx.src] += delivered as f64 * d * d;
                        } else {
                            nodes[tx.src].cw = (2 * (nodes[tx.src].cw + 1) - 1).min(frame.cw_max);
                            fs.failed_tx += 1;
                        }
                        fs.attempted_tx += 1;
                        trace.transmissions.push(TxRecord {
                            frame: interval,
                            slot: tx.end,
                            source: tx.src,
                            dest: tx.dst,
                            tx_power_mw: tx.power_mw,
                            planned_sinr: tx.required_sinr,
                            actual_sinr: tx.min_sinr,
                            success: ok,
                            bits: delivered,
                            distance_m: d,
                        });
                        nodes[tx.src].backoff = rng.gen_range(0..=nodes[tx.src].cw);
                    }
                    TxKind::Atim => {
                        if ok && !nodes[tx.dst].in_tx {
                            pending_acks.push((tick + sifs_ticks, tx.dst, tx.src));
                        } else {
                            nodes[tx.src].cw = (2 * (nodes[tx.src].cw + 1) - 1).min(frame.cw_max);
                            nodes[tx.src].backoff = rng.gen_range(0..=nodes[tx.src].cw);
                        }
                    }
                    TxKind::AtimAck => {
                        // tx.src is the data receiver, tx.dst the announcer
                        if ok {
                            nodes[tx.dst].announced = true;
                            nodes[tx.src].announced = true;
                            nodes[tx.dst].cw = frame.cw_min;
                        } else {
                            nodes[tx.dst].cw = (2 * (nodes[tx.dst].cw + 1) - 1).min(frame.cw_max);
                            nodes[tx.dst].backoff = rng.gen_range(0..=nodes[tx.dst].cw);
                        }
                    }
                }
            }

            // --- new transmissions ------------------------------------------
            let mut starts: Vec<ActiveTx> = Vec::new();
            // due ATIM-ACKs
            pending_acks.retain(|&(start, src, dst)| {
                if start > tick {
                    return true;
                }
                if !nodes[src].in_tx && nodes[src].awake {
                    let d = pop.nodes[src].pos.dist(pop.nodes[dst].pos);
                    starts.push(ActiveTx {
                        src,
                        dst,
                        kind: TxKind::AtimAck,
                        power_mw: power_rule(d),
                        end: tick + ack_ticks,
                        signal_mw: 0.0,
                        interference_mw: 0.0,
                        min_sinr: f64::INFINITY,
                        required_sinr: params.sinr_min,
                        bits: 0,
                        rung: 0,
                        rx_blocked: nodes[dst].in_tx,
                        rx_at: Vec::new(),
                    });
                }
                false
            });
            // backoff countdown and channel access
            for i in 0..n {
                if nodes[i].in_tx || !nodes[i].awake {
                    continue;
                }
                let Some(dest) = pop.nodes[i].dest else {
                    continue;
                };
                let dest_awake = nodes[dest].awake;
                let node = &mut nodes[i];
                let want_atim =
                    in_window && cfg.psm && !node.announced && !pop.nodes[i].queue.is_empty();
                let want_data = !in_window
                    && node.announced
                    && !pop.nodes[i].queue.is_empty()
                    && (!cfg.psm || dest_awake);
                if !(want_atim || want_data) {
                    continue;
                }
                let dur = if want_atim { atim_ticks } else { data_ticks };
                let fits = if in_window {
                    tick + dur <= window_ticks
                } else {
                    tick + dur <= ticks_per_interval
                };
                if !fits {
                    continue;
                }
                if sensed[i] >= cfg.carrier_sense_threshold_mw {
                    continue; // busy: freeze
                }
                if node.backoff > 0 {
                    node.backoff -= 1;
                    continue;
                }
                // transmit
                let (kind, required, bits, rung) = if want_atim {
                    (TxKind::Atim, params.sinr_min, 0u64, 0usize)
                } else {
                    let rung = if interval < warmup_intervals {
                        (node.attempts_total % ladder.len() as u64) as usize
                    } else {
                        best_rung(node)
                    };
                    (TxKind::Data, ladder[rung], ladder_bits[rung], rung)
                };
                node.backoff = rng.gen_range(0..=node.cw); // refreshed after tx too
                starts.push(ActiveTx {
                    src: i,
                    dst: dest,
                    kind,
                    power_mw: node.power_mw,
                    end: tick + dur,
                    signal_mw: 0.0,
                    interference_mw: 0.0,
                    min_sinr: f64::INFINITY,
                    required_sinr: required,
                    bits,
                    rung,
                    rx_blocked: false,
                    rx_at: Vec::new(),
                });
            }
            if !starts.is_empty() {
                for tx in starts.iter_mut() {
                    nodes[tx.src].in_tx = true;
                    let src_pos = pop.nodes[tx.src].pos;
                    let mut rx_at = vec![0.0; n];
                    for (j, r) in rx_at.iter_mut().enumerate() {
                        if j != tx.src {
                            *r = tx.power_mw * gain(src_pos, pop.nodes[j].pos);
                        }
                    }
                    tx.signal_mw = rx_at[tx.dst];
                    tx.rx_blocked =
                        tx.rx_blocked || nodes[tx.dst].in_tx || (cfg.psm && !nodes[tx.dst].awake);
                    tx.rx_at = rx_at;
                }
                // everyone already on air gets more interference; receivers
                // of new transmissions may be blocked by sources starting now
                for tx in &starts {
                    for i in 0..n {
                        sensed[i] += tx.rx_at[i];
                    }
                    for other in active.iter_mut() {
                        other.interference_mw += tx.rx_at[other.dst];
                        if tx.src == other.dst {
                            other.rx_blocked = true;
                        }
                    }
                }
                for mut tx in starts {
                    let mut interf = params.noise_mw;
                    for other in active.iter() {
                        interf += other.rx_at.get(tx.dst).copied().unwrap_or(0.0);
                    }
                    // interference from simultaneous starters resolved below
                    tx.interference_mw = interf;
                    active.push(tx);
                }
                // simultaneous starters interfere with each other
                let snapshot: Vec<(usize, Vec<f64>)> = active
                    .iter()
                    .filter(|t| {
                        t.end == tick + data_ticks
                            || t.end == tick + atim_ticks
                            || t.end == tick + ack_ticks
                    })
                    .filter(|t| t.end - ticks_of(t.kind, data_ticks, atim_ticks, ack_ticks) == tick)
                    .map(|t| (t.src, t.rx_at.clone()))
                    .collect();
                for tx in active.iter_mut() {
                    let started_now =
                        tx.end - ticks_of(tx.kind, data_ticks, atim_ticks, ack_ticks) == tick;
                    if started_now {
                        for (src, rx) in &snapshot {
                            if *src != tx.src {
                                tx.interference_mw += rx[tx.dst];
                            }
                        }
                    }
                }
                for tx in active.iter_mut() {
                    let s = tx.signal_mw / tx.interference_mw;
                    if s < tx.min_sinr {
                        tx.min_sinr = s;
                    }
                }
            }

            // --- energy ------------------------------------------------------
            for (i, node) in nodes.iter_mut().enumerate() {
                if node.awake {
                    node.awake_ticks += 1;
                    if node.in_tx {
                        node.amp_energy_j +=
                            params.amp_inverse_efficiency * 1e-3 * tx_power_of(&active, i) * tick_s;
                    }
                }
            }
        }

        // flush transmissions still on air at the interval end (none start
        // that late, but be safe)
        for tx in active.drain(..) {
            nodes[tx.src].in_tx = false;
            let _ = tx;
        }

        for i in 0..n {
            fs.energy_j[i] = params.sleep_power_w * interval_s
                + (params.circuit_power_w - params.sleep_power_w)
                    * nodes[i].awake_ticks as f64
                    * tick_s
                + nodes[i].amp_energy_j;
            fs.cell[i] = grid.nearest_cell(pop.nodes[i].pos) as u16;
        }
        fs.generated_bits = pop.arrivals(scenario, interval_s);
        fs.queued_bits = pop.queued_bits();
        trace.frames.push(fs);

        if scenario.mobility.is_some() {
            pop.step_mobility(scenario, interval_s);
            pop.reselect_destinations(scenario);
        }
    }

    let lattice_cfg = crate::lattice::LatticeConfig::new(params.path_loss_exponent);
    let (_, g_max) = crate::lattice::max_g(&lattice_cfg, 0.8, 6.0)?;
    let filter = RegionFilter::inner(&grid);
    let report = build_report(&trace, &filter, g_max);
    Ok(crate::sim::SimOutcome { trace, report })
}

fn ticks_of(kind: TxKind, data: usize, atim: usize, ack: usize) -> usize {
    match kind {
        TxKind::Data => data,
        TxKind::Atim => atim,
        TxKind::AtimAck => ack,
    }
}

fn tx_power_of(active: &[ActiveTx], src: usize) -> f64 {
    active
        .iter()
        .find(|t| t.src == src)
        .map(|t| t.power_mw)
        .unwrap_or(0.0)
}

fn best_rung(node: &NodeCsma) -> usize {
    let mut best = 0usize;
    let mut best_goodput = -1.0;
    for r in 0..node.rung_attempts.len() {
        let attempts = node.rung_attempts[r].max(1) as f64;
        let goodput = node.rung_bits[r] as f64 / attempts;
        if goodput > best_goodput {
            best_goodput = goodput;
            best = r;
        }
    }
    best
}

/// Sweep grid for the empirical baseline optimisation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CsmaSweep {
    pub thresholds_dbm: Vec<f64>,
    pub target_rx_dbm: Vec<f64>,
    /// Only used when `psm`.
    pub atim_windows_ms: Vec<f64>,
    pub seeds: Vec<u64>,
    pub psm: bool,
}

impl CsmaSweep {
    pub fn quick(psm: bool, seeds: Vec<u64>) -> CsmaSweep {
        CsmaSweep {
            thresholds_dbm: vec![-85.0, -75.0, -65.0],
            target_rx_dbm: vec![-64.0, -58.0, -52.0],
            atim_windows_ms: vec![5.0, 10.0, 20.0, 40.0],
            seeds,
            psm,
        }
    }

    fn configs(&self) -> Vec<CsmaConfig> {
        let mut out = Vec::new();
        let windows: &[f64] = if self.psm {
            &self.atim_windows_ms
        } else {
            &[0.0]
        };
        for &t in &self.thresholds_dbm {
            for &p in &self.target_rx_dbm {
                for &w in windows {
                    out.push(CsmaConfig {
                        carrier_sense_threshold_mw: dbm_to_mw(t),
                        target_rx_power_mw: dbm_to_mw(p),
                        psm: self.psm,
                        atim_window_ms: if self.psm {
                            w
                        } else {
                            CsmaConfig::default().atim_window_ms
                        },
                        ..CsmaConfig::default()
                    });
                }
            }
        }
        out
    }
}

/// One sweep outcome.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub config: CsmaConfig,
    pub mean_throughput_bit_m_per_s: f64,
    pub mean_energy_per_bit_j: Option<f64>,
}

/// Run the sweep and return the best configuration by mean
/// distance-weighted throughput (first in grid order wins ties),
/// together with the full table.
pub fn optimize_csma(
    scenario: &SimScenario,
    sweep: &CsmaSweep,
) -> Result<(CsmaConfig, Vec<SweepRow>)> {
    let configs = sweep.configs();
    if configs.is_empty() || sweep.seeds.is_empty() {
        return Err(crate::error::Error::Config("empty sweep grid".into()));
    }
    let jobs: Vec<(usize, u64)> = configs
        .iter()
        .enumerate()
        .flat_map(|(i, _)| sweep.seeds.iter().map(move |&s| (i, s)))
        .collect();
    let results: Vec<(usize, f64, Option<f64>)> = jobs
        .par_iter()
        .map(|&(i, seed)| {
            let mut sc = scenario.clone();
            sc.seed = seed;
            let out = run_csma(&sc, &configs[i]).expect("scenario validated");
            (
                i,
                out.report.throughput_bit_m_per_s,
                out.report.energy_per_bit_j,
            )
        })
        .collect();
    let mut rows = Vec::with_capacity(configs.len());
    for (i, cfg) in configs.iter().enumerate() {
        let mine: Vec<&(usize, f64, Option<f64>)> = results.iter().filter(|r| r.0 == i).collect();
        let thr = mine.iter().map(|r| r.1).sum::<f64>() / mine.len() as f64;
        let energies: Vec<f64> = mine.iter().filter_map(|r| r.2).collect();
        let energy = if energies.is_empty() {
            None
        } else {
            Some(energies.iter().sum::<f64>() / energies.len() as f64)
        };
        rows.push(SweepRow {
            config: cfg.clone(),
            mean_throughput_bit_m_per_s: thr,
            mean_energy_per_bit_j: energy,
        });
    }
    let mut best = 0usize;
    for (i, row) in rows.iter().enumerate() {
        if row.mean_throughput_bit_m_per_s > rows[best].mean_throughput_bit_m_per_s {
            best = i;
        }
    }
    Ok((rows[best].config.clone(), rows))
}
