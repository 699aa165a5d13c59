//! Performance metrics over an inner-region filter: distance-weighted
//! throughput, energy per delivered bit, scheduling efficiency against
//! the asymptotic optimum, and per-node rate fairness.

use crate::cells::CellGrid;
use crate::trace::SimTrace;
use serde::{Deserialize, Serialize};

/// Region filter: the set of cells whose nodes count toward the metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionFilter {
    pub cells: Vec<u16>,
    pub area_m2: f64,
}

impl RegionFilter {
    /// The edge-effect-free inner region (7 central cells of the 19-cell
    /// layout).
    pub fn inner(grid: &CellGrid) -> RegionFilter {
        let cells: Vec<u16> = grid.inner_cells().iter().map(|&c| c as u16).collect();
        let as_usize: Vec<usize> = cells.iter().map(|&c| c as usize).collect();
        RegionFilter {
            area_m2: grid.area_of(&as_usize),
            cells,
        }
    }

    /// Every cell of the layout.
    pub fn all(grid: &CellGrid) -> RegionFilter {
        let cells: Vec<u16> = (0..grid.cell_count() as u16).collect();
        let as_usize: Vec<usize> = (0..grid.cell_count()).collect();
        RegionFilter {
            area_m2: grid.area_of(&as_usize),
            cells,
        }
    }

    pub fn contains(&self, cell: u16) -> bool {
        self.cells.contains(&cell)
    }
}

/// The metric set of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Sum of delivered bits weighted by link distance, per second.
    pub throughput_bit_m_per_s: f64,
    /// Total filtered energy over total filtered delivered bits, J/bit.
    /// `None` when nothing was delivered.
    pub energy_per_bit_j: Option<f64>,
    /// Fraction of the asymptotic optimal area rate achieved, whole-frame
    /// airtime.
    pub scheduling_efficiency: f64,
    /// Same, counting only data-slot airtime.
    pub scheduling_efficiency_data_slots: f64,
    /// Delivered bit/s per filtered source node, sorted ascending.
    pub per_node_rates_bps: Vec<f64>,
    /// Jain fairness index of the per-node rates.
    pub jain_fairness: f64,
    pub inner_area_m2: f64,
    pub delivered_bits: u64,
    /// Peak of the area-rate function used in the efficiency denominator.
    pub max_g: f64,
}

/// Distance-weighted throughput (bit*m/s) over sources inside the filter.
pub fn distance_weighted_throughput(trace: &SimTrace, filter: &RegionFilter) -> f64 {
    let mut sum = 0.0;
    for f in &trace.frames {
        for i in 0..trace.nodes {
            if filter.contains(f.cell[i]) {
                sum += f.bits_distance[i];
            }
        }
    }
    sum / trace.duration_s
}

/// Total energy of filtered entities (nodes and coordinators) divided by
/// filtered delivered bits. `None` when no bits were delivered.
pub fn total_energy_per_bit(trace: &SimTrace, filter: &RegionFilter) -> Option<f64> {
    let mut energy = 0.0;
    let mut bits = 0u64;
    for f in &trace.frames {
        for i in 0..trace.entities() {
            if filter.contains(f.cell[i]) {
                energy += f.energy_j[i];
                if i < trace.nodes {
                    bits += f.delivered_bits[i];
                }
            }
        }
    }
    if bits == 0 {
        None
    } else {
        Some(energy / bits as f64)
    }
}

/// Scheduling efficiency: delivered rate weighted by squared distance,
/// against the asymptotic optimum `max_g * area`. Returns (whole-frame,
/// data-slots-only).
pub fn scheduling_efficiency(trace: &SimTrace, filter: &RegionFilter, max_g: f64) -> (f64, f64) {
    let mut sum = 0.0;
    for f in &trace.frames {
        for i in 0..trace.nodes {
            if filter.contains(f.cell[i]) {
                sum += f.bits_distance2[i];
            }
        }
    }
    // Sum_l R_l d_ll^2 with R in bit/s/Hz
    let weighted_rate = sum / (trace.duration_s * trace.bandwidth_hz);
    let denom = max_g * filter.area_m2;
    let whole = weighted_rate / denom;
    (whole, whole / trace.data_slot_fraction)
}

/// Delivered bit/s per filtered source node, sorted ascending. A node
/// counts toward the frame it was inside the filter.
pub fn per_node_rates(trace: &SimTrace, filter: &RegionFilter) -> Vec<f64> {
    let mut bits = vec![0u64; trace.nodes];
    let mut seen = vec![false; trace.nodes];
    for f in &trace.frames {
        for i in 0..trace.nodes {
            if filter.contains(f.cell[i]) {
                bits[i] += f.delivered_bits[i];
                seen[i] = true;
            }
        }
    }
    let mut rates: Vec<f64> = bits
        .iter()
        .zip(&seen)
        .filter(|(_, &s)| s)
        .map(|(&b, _)| b as f64 / trace.duration_s)
        .collect();
    rates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    rates
}

/// Jain fairness index (sum x)^2 / (n * sum x^2); 1.0 for equal rates.
pub fn jain_index(rates: &[f64]) -> f64 {
    if rates.is_empty() {
        return 1.0;
    }
    let s: f64 = rates.iter().sum();
    let s2: f64 = rates.iter().map(|r| r * r).sum();
    if s2 == 0.0 {
        1.0
    } else {
        s * s / (rates.len() as f64 * s2)
    }
}

pub fn build_report(trace: &SimTrace, filter: &RegionFilter, max_g: f64) -> MetricsReport {
    let rates = per_node_rates(trace, filter);
    let (eff, eff_data) = scheduling_efficiency(trace, filter, max_g);
    let delivered: u64 = trace
        .frames
        .iter()
        .map(|f| {
            (0..trace.nodes)
                .filter(|&i| filter.contains(f.cell[i]))
                .map(|i| f.delivered_bits[i])
                .sum::<u64>()
        })
        .sum();
    MetricsReport {
        throughput_bit_m_per_s: distance_weighted_throughput(trace, filter),
        energy_per_bit_j: total_energy_per_bit(trace, filter),
        scheduling_efficiency: eff,
        scheduling_efficiency_data_slots: eff_data,
        jain_fairness: jain_index(&rates),
        per_node_rates_bps: rates,
        inner_area_m2: filter.area_m2,
        delivered_bits: delivered,
        max_g,
    }
}
