//! Physical-layer and energy primitives: channel gains, SINR, Shannon
//! rates and the per-slot radio power model.
//!
//! Unit conventions: RF powers (transmit power, interference, noise) are
//! in mW; circuit, amplifier and sleep powers are in W; rates are in
//! bit/s/Hz; energy per bit is in J/(bit/Hz) unless a function says
//! otherwise.

use crate::error::{Error, Result};
use crate::units::mw_to_w;
use crate::util::{SquareMatrix, Vec2};
use serde::{Deserialize, Serialize};

/// Radio and link-budget constants shared by every module.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    /// Unitless channel constant `c` in gain = c * d^(-alpha).
    pub channel_constant: f64,
    /// Path-loss exponent, unitless.
    pub path_loss_exponent: f64,
    /// Background noise power, mW.
    pub noise_mw: f64,
    /// Transmit power bounds, mW.
    pub tx_power_min_mw: f64,
    pub tx_power_max_mw: f64,
    /// Target-interference bounds, mW.
    pub interference_min_mw: f64,
    pub interference_max_mw: f64,
    /// SINR bounds, linear ratio.
    pub sinr_min: f64,
    pub sinr_max: f64,
    /// Circuit power of one radio interface while transmitting, receiving
    /// or idle-listening, W.
    pub circuit_power_w: f64,
    /// Inverse efficiency of the power amplifier (consumed W per radiated
    /// W), unitless, > 1.
    pub amp_inverse_efficiency: f64,
    /// Sleep-mode power, W.
    pub sleep_power_w: f64,
    /// Channel bandwidth, Hz.
    pub bandwidth_hz: f64,
    /// Maximum source-destination distance of a link, m.
    pub max_link_distance_m: f64,
}

impl Default for RadioParams {
    /// 2 MHz WLAN-style defaults: c = 1e-4, alpha = 3.4, power 1..100 mW,
    /// interference bounds -80..-45 dBm, SINR bounds 6..30 dB, circuit
    /// power 1.25 W, amplifier inverse efficiency 10, zero sleep power,
    /// 20 m maximum link distance. Noise is thermal noise for 2 MHz
    /// (-111 dBm).
    fn default() -> Self {
        RadioParams {
            channel_constant: 1e-4,
            path_loss_exponent: 3.4,
            noise_mw: 10f64.powf(-111.0 / 10.0),
            tx_power_min_mw: 1.0,
            tx_power_max_mw: 100.0,
            interference_min_mw: 1e-8,             // -80 dBm
            interference_max_mw: 10f64.powf(-4.5), // -45 dBm
            sinr_min: 10f64.powf(0.6),             // 6 dB
            sinr_max: 1000.0,                      // 30 dB
            circuit_power_w: 1.25,
            amp_inverse_efficiency: 10.0,
            sleep_power_w: 0.0,
            bandwidth_hz: 2e6,
            max_link_distance_m: 20.0,
        }
    }
}

impl RadioParams {
    /// Check the structural invariants of the parameter set.
    pub fn validate(&self) -> Result<()> {
        if !(self.tx_power_min_mw < self.tx_power_max_mw) {
            return Err(Error::Config(
                "tx power bounds must satisfy min < max".into(),
            ));
        }
        if !(self.interference_min_mw < self.interference_max_mw) {
            return Err(Error::Config(
                "interference bounds must satisfy min < max".into(),
            ));
        }
        if !(self.sinr_min < self.sinr_max) {
            return Err(Error::Config("SINR bounds must satisfy min < max".into()));
        }
        if !(self.amp_inverse_efficiency > 1.0) {
            return Err(Error::Config(
                "amplifier inverse efficiency must exceed 1".into(),
            ));
        }
        if self.sleep_power_w < 0.0 {
            return Err(Error::Config("sleep power must be non-negative".into()));
        }
        for (name, v) in [
            ("channel constant", self.channel_constant),
            ("noise", self.noise_mw),
            ("tx power min", self.tx_power_min_mw),
            ("interference min", self.interference_min_mw),
            ("circuit power", self.circuit_power_w),
            ("bandwidth", self.bandwidth_hz),
            ("max link distance", self.max_link_distance_m),
        ] {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

/// Per-link traffic demand: rate weight, rate cap and energy budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkDemand {
    /// Rate weight, >= 0.
    pub weight: f64,
    /// Maximum required rate, bit/s/Hz. `f64::INFINITY` when unbounded.
    pub rate_cap: f64,
    /// Maximum energy per bit, J/(bit/Hz).
    pub energy_cap: f64,
}

impl Default for LinkDemand {
    fn default() -> Self {
        LinkDemand {
            weight: 1.0,
            rate_cap: f64::INFINITY,
            energy_cap: f64::INFINITY,
        }
    }
}

/// A node with a position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: usize,
    pub position: Vec2,
}

/// A directional link between two nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Link {
    pub id: usize,
    pub source: usize,
    pub dest: usize,
}

/// Nodes, directional links, and the pairwise distance/gain tables.
///
/// `distances.get(l, k)` is the distance from the source of link `l` to
/// the destination of link `k`; `gains` holds the matching channel gains.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Topology {
    pub nodes: Vec<Node>,
    pub links: Vec<Link>,
    pub gains: SquareMatrix,
    pub distances: SquareMatrix,
}

impl Topology {
    /// Build the gain/distance tables from node positions. Rejects
    /// self-links, links longer than `max_link_distance_m` and coincident
    /// source/destination positions.
    pub fn build(nodes: Vec<Node>, links: Vec<Link>, params: &RadioParams) -> Result<Topology> {
        for (i, n) in nodes.iter().enumerate() {
            if n.id != i {
                return Err(Error::Config(format!("node id {} at index {i}", n.id)));
            }
        }
        for (i, l) in links.iter().enumerate() {
            if l.id != i {
                return Err(Error::Config(format!("link id {} at index {i}", l.id)));
            }
            if l.source == l.dest {
                return Err(Error::Config(format!("link {} has source == dest", l.id)));
            }
            if l.source >= nodes.len() || l.dest >= nodes.len() {
                return Err(Error::Config(format!(
                    "link {} references unknown node",
                    l.id
                )));
            }
        }
        let n = links.len();
        let mut distances = SquareMatrix::zeros(n);
        let mut gains = SquareMatrix::zeros(n);
        for l in 0..n {
            for k in 0..n {
                let d = nodes[links[l].source]
                    .position
                    .dist(nodes[links[k].dest].position);
                if d <= 0.0 {
                    return Err(Error::Domain(format!(
                        "source of link {l} coincides with destination of link {k}"
                    )));
                }
                distances.set(l, k, d);
                gains.set(l, k, channel_gain(d, params)?);
            }
        }
        for l in 0..n {
            if distances.get(l, l) > params.max_link_distance_m {
                return Err(Error::Config(format!(
                    "link {l} is {:.2} m long, beyond the {:.2} m maximum",
                    distances.get(l, l),
                    params.max_link_distance_m
                )));
            }
        }
        Ok(Topology {
            nodes,
            links,
            gains,
            distances,
        })
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    /// Source-to-own-destination distance of link `l`.
    pub fn link_distance(&self, l: usize) -> f64 {
        self.distances.get(l, l)
    }
}

/// Channel gain c * d^(-alpha) at distance `d` metres.
pub fn channel_gain(d: f64, params: &RadioParams) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::Domain(format!("non-positive distance {d}")));
    }
    Ok(params.channel_constant * d.powf(-params.path_loss_exponent))
}

/// SINR = signal / (noise + interference). All arguments in mW.
pub fn sinr(signal_mw: f64, interference_mw: f64, noise_mw: f64) -> Result<f64> {
    if signal_mw < 0.0 || interference_mw < 0.0 || noise_mw < 0.0 {
        return Err(Error::Domain("negative power".into()));
    }
    let denom = interference_mw + noise_mw;
    if denom <= 0.0 {
        return Err(Error::Domain("zero interference-plus-noise".into()));
    }
    Ok(signal_mw / denom)
}

/// Shannon rate log2(1 + eta) in bit/s/Hz.
pub fn shannon_rate(eta: f64) -> Result<f64> {
    if eta < 0.0 {
        return Err(Error::Domain(format!("negative SINR {eta}")));
    }
    Ok((1.0 + eta).log2())
}

/// Combined source + destination power for one slot, W.
///
/// Scheduled: 2 * circuit + amp_inverse_efficiency * gamma. Unscheduled:
/// both radios sleep.
pub fn link_slot_power(scheduled: bool, gamma_mw: f64, params: &RadioParams) -> f64 {
    if scheduled {
        2.0 * params.circuit_power_w + params.amp_inverse_efficiency * mw_to_w(gamma_mw)
    } else {
        2.0 * params.sleep_power_w
    }
}
