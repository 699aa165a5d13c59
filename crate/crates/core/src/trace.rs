//! Run traces: per-frame accounting of energy, delivered bits and node
//! whereabouts, plus the per-transmission log and a determinism digest.
//!
//! Energy/inner vectors cover nodes first, then coordinators (indices
//! `nodes..nodes+coordinators`). Delivered bits are attributed to the
//! source node.

use crate::util::Digest;
use serde::{Deserialize, Serialize};

/// One data-slot transmission attempt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TxRecord {
    pub frame: usize,
    /// Data-slot index within the frame (0-based).
    pub slot: usize,
    pub source: usize,
    pub dest: usize,
    pub tx_power_mw: f64,
    pub planned_sinr: f64,
    pub actual_sinr: f64,
    pub success: bool,
    pub bits: u64,
    pub distance_m: f64,
}

/// Aggregates of one frame (or one beacon interval for the baseline).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameStats {
    /// Energy consumed this frame, J; nodes then coordinators.
    pub energy_j: Vec<f64>,
    /// Cell index of each entity this frame.
    pub cell: Vec<u16>,
    /// Bits delivered with this source node this frame.
    pub delivered_bits: Vec<u64>,
    /// Sum of bits * link distance.
    pub bits_distance: Vec<f64>,
    /// Sum of bits * link distance^2.
    pub bits_distance2: Vec<f64>,
    pub generated_bits: u64,
    pub queued_bits: u64,
    pub attempted_tx: usize,
    pub failed_tx: usize,
}

impl FrameStats {
    pub fn new(entities: usize) -> Self {
        FrameStats {
            energy_j: vec![0.0; entities],
            cell: vec![0; entities],
            delivered_bits: vec![0; entities],
            bits_distance: vec![0.0; entities],
            bits_distance2: vec![0.0; entities],
            generated_bits: 0,
            queued_bits: 0,
            attempted_tx: 0,
            failed_tx: 0,
        }
    }
}

/// Full trace of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub nodes: usize,
    pub coordinators: usize,
    pub duration_s: f64,
    pub bandwidth_hz: f64,
    /// Fraction of airtime usable for data (1.0 for the baseline).
    pub data_slot_fraction: f64,
    pub frames: Vec<FrameStats>,
    pub transmissions: Vec<TxRecord>,
}

impl SimTrace {
    pub fn entities(&self) -> usize {
        self.nodes + self.coordinators
    }

    pub fn total_energy_j(&self) -> f64 {
        self.frames
            .iter()
            .map(|f| f.energy_j.iter().sum::<f64>())
            .sum()
    }

    pub fn total_delivered_bits(&self) -> u64 {
        self.frames
            .iter()
            .map(|f| f.delivered_bits.iter().sum::<u64>())
            .sum()
    }

    pub fn total_generated_bits(&self) -> u64 {
        self.frames.iter().map(|f| f.generated_bits).sum()
    }

    /// Bit-exact digest of everything that defines the run outcome.
    pub fn digest(&self) -> u64 {
        let mut d = Digest::new();
        d.usize(self.nodes)
            .usize(self.coordinators)
            .f64(self.duration_s)
            .f64(self.bandwidth_hz)
            .f64(self.data_slot_fraction);
        for f in &self.frames {
            for &e in &f.energy_j {
                d.f64(e);
            }
            for &c in &f.cell {
                d.u64(c as u64);
            }
            for &b in &f.delivered_bits {
                d.u64(b);
            }
            for &x in &f.bits_distance {
                d.f64(x);
            }
            for &x in &f.bits_distance2 {
                d.f64(x);
            }
            d.u64(f.generated_bits)
                .u64(f.queued_bits)
                .usize(f.attempted_tx)
                .usize(f.failed_tx);
        }
        for t in &self.transmissions {
            d.usize(t.frame)
                .usize(t.slot)
                .usize(t.source)
                .usize(t.dest)
                .f64(t.tx_power_mw)
                .f64(t.planned_sinr)
                .f64(t.actual_sinr)
                .bool(t.success)
                .u64(t.bits)
                .f64(t.distance_m);
        }
        d.finish()
    }
}
