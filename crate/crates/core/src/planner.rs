//! Per-link transmission power and target interference assignment.
//!
//! Every link is assigned a pair (tx power, target interference) that
//! maximises its asymptotic spectrum efficiency subject to SINR bounds
//! and an energy-per-bit budget, while the product of tx power and
//! target interference is held at a network-wide constant. The equal
//! product makes a high-power link also demand low interference, which
//! minimises the spatial separation other links must keep from it.
//!
//! Ablation modes pin one of the two degrees of freedom (maximum power,
//! minimum interference) or draw a feasible pair at random.

use crate::error::{Constraint, Error, Result};
use crate::lattice::{
    lattice_f_inverse, InversionBracket, LatticeConfig, LatticeTable, HEX_AREA_FACTOR,
};
use crate::model::{link_slot_power, shannon_rate, RadioParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// How a link's (power, target interference) pair is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PlannerMode {
    /// Search along the constant-product hyperbola.
    #[default]
    Proposed,
    /// Pin tx power at its maximum; optimise the target interference.
    MaxPower,
    /// Pin target interference at its minimum; optimise the power.
    MinInterference,
    /// Seeded random feasible pair.
    Arbitrary,
}

/// A planned link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkPlan {
    /// Transmission power, mW.
    pub tx_power_mw: f64,
    /// Target interference power at the destination, mW.
    pub target_interference_mw: f64,
    /// Planned SINR (linear): c * gamma * d^-alpha / target.
    pub sinr: f64,
    /// Planned rate log2(1 + sinr), bit/s/Hz.
    pub rate_bps_hz: f64,
    /// Equivalent lattice spacing ratio F^{-1}(sinr); diagnostic.
    pub spacing_over_d: f64,
    /// Energy per bit of the plan, J/(bit/Hz).
    pub energy_per_bit: f64,
    /// Energy budget the plan was held to, J/(bit/Hz).
    pub energy_budget: f64,
    /// Energy slack factor theta (budget = theta * mode minimum).
    pub theta: f64,
    /// Product constant lambda = gamma * target, mW^2.
    pub product: f64,
    /// Objective value: asymptotic spectrum efficiency, bit/s/Hz per m^2.
    pub spectral_efficiency: f64,
}

/// Search resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerSettings {
    /// Candidate points along the free axis.
    pub search_points: usize,
    /// Nodes of the internal F table.
    pub table_nodes: usize,
    /// Grid per axis for the unconstrained minimum-energy search.
    pub energy_grid: usize,
}

impl Default for PlannerSettings {
    fn default() -> Self {
        PlannerSettings {
            search_points: 400,
            table_nodes: 768,
            energy_grid: 200,
        }
    }
}

/// Default product constant: max power times minimum interference. Keeps
/// the extreme plan (highest power, tightest tolerance) inside the box so
/// the longest links remain plannable.
pub fn default_lambda(params: &RadioParams) -> f64 {
    params.tx_power_max_mw * params.interference_min_mw
}

/// Minimal source-to-foreign-destination distance that lets two links run
/// concurrently: the interferer's power received at the victim must not
/// exceed the victim's target.
pub fn min_separation(gamma_i_mw: f64, i_target_j_mw: f64, params: &RadioParams) -> f64 {
    (params.channel_constant * gamma_i_mw / i_target_j_mw).powf(1.0 / params.path_loss_exponent)
}

/// Unconstrained minimum energy per bit for a link of length `d_m`:
/// brute-force over a log grid of (power, target interference) pairs with
/// only the box and SINR-range constraints (no product rule).
pub fn min_energy_per_bit(d_m: f64, params: &RadioParams, grid_points: usize) -> Result<f64> {
    if !(d_m > 0.0) {
        return Err(Error::Domain(format!("non-positive distance {d_m}")));
    }
    if d_m > params.max_link_distance_m {
        return Err(Error::Domain(format!(
            "distance {d_m} beyond the {} m maximum",
            params.max_link_distance_m
        )));
    }
    let cd = params.channel_constant * d_m.powf(-params.path_loss_exponent);
    let gammas =
        crate::lattice::log_spaced(params.tx_power_min_mw, params.tx_power_max_mw, grid_points);
    let targets = crate::lattice::log_spaced(
        params.interference_min_mw,
        params.interference_max_mw,
        grid_points,
    );
    let mut best = f64::INFINITY;
    for &g in &gammas {
        let rx = cd * g;
        for &i in &targets {
            let eta = rx / i;
            if eta < params.sinr_min || eta > params.sinr_max {
                continue;
            }
            let e = link_slot_power(true, g, params) / shannon_rate(eta)?;
            if e < best {
                best = e;
            }
        }
    }
    if best.is_infinite() {
        return Err(Error::Infeasible {
            violated: Constraint::SinrBounds,
        });
    }
    Ok(best)
}

/// Worst-case separation bound for a two-link pair under SINR-preserving
/// scalings: max of the two cross squared-separation terms. Used by the
/// equal-product property suite; the bound is minimised exactly when the
/// scaled products match.
pub fn equal_product_bound(
    gamma1: f64,
    i1: f64,
    gamma2: f64,
    i2: f64,
    scale1: f64,
    scale2: f64,
    params: &RadioParams,
) -> f64 {
    let c = params.channel_constant;
    let p = 2.0 / params.path_loss_exponent;
    let a = (c * scale1 * gamma1 / (scale2 * i2)).powf(p);
    let b = (c * scale2 * gamma2 / (scale1 * i1)).powf(p);
    a.max(b)
}

/// The planner: holds the radio parameters, lattice configuration and a
/// pre-built interpolation table of `F`.
pub struct Planner {
    params: RadioParams,
    lattice: LatticeConfig,
    table: LatticeTable,
    settings: PlannerSettings,
}

impl Planner {
    pub fn new(params: RadioParams, settings: PlannerSettings) -> Result<Planner> {
        params.validate()?;
        let lattice = LatticeConfig::new(params.path_loss_exponent);
        let table =
            LatticeTable::build(&lattice, InversionBracket::default(), settings.table_nodes)?;
        Ok(Planner {
            params,
            lattice,
            table,
            settings,
        })
    }

    pub fn params(&self) -> &RadioParams {
        &self.params
    }

    pub fn lattice_config(&self) -> &LatticeConfig {
        &self.lattice
    }

    /// Spectrum-efficiency objective of a candidate SINR for link length
    /// `d`: rate over the hex area implied by the required spacing.
    fn objective(&self, eta: f64, d: f64) -> Result<f64> {
        let r = self.table.inverse(eta)?;
        Ok((1.0 + eta).log2() / (HEX_AREA_FACTOR * r * r * d * d))
    }

    /// Assign (power, target interference) to a link of length `d_m`.
    ///
    /// `theta >= 1` scales the energy budget: budget = theta * (minimum
    /// energy per bit attainable in this mode); theta = 1 therefore
    /// returns the mode's minimum-energy plan and theta = inf drops the
    /// energy constraint. `lambda` is the product constant, only binding
    /// in `Proposed` mode.
    pub fn plan_link(
        &self,
        d_m: f64,
        theta: f64,
        lambda: f64,
        mode: PlannerMode,
        seed: u64,
    ) -> Result<LinkPlan> {
        if !(d_m > 0.0) {
            return Err(Error::Domain(format!("non-positive distance {d_m}")));
        }
        if d_m > self.params.max_link_distance_m {
            return Err(Error::Domain(format!(
                "distance {d_m} beyond the {} m maximum",
                self.params.max_link_distance_m
            )));
        }
        if !(theta >= 1.0) {
            return Err(Error::Config(format!("theta must be >= 1, got {theta}")));
        }
        if !(lambda > 0.0) {
            return Err(Error::Config("lambda must be positive".into()));
        }
        let p = &self.params;
        let cd = p.channel_constant * d_m.powf(-p.path_loss_exponent);

        // Build the candidate (gamma, target) set for the mode. Grid
        // points plus the exact constraint crossings so box and SINR
        // boundaries are attainable exactly.
        let mut candidates: Vec<(f64, f64)> = Vec::new();
        let mut interference_reject = 0usize;
        match mode {
            PlannerMode::Proposed => {
                let mut gammas = crate::lattice::log_spaced(
                    p.tx_power_min_mw,
                    p.tx_power_max_mw,
                    self.settings.search_points,
                );
                // crossings: target box and SINR box mapped to gamma
                let crossings = [
                    lambda / p.interference_min_mw,
                    lambda / p.interference_max_mw,
                    (lambda * p.sinr_min / cd).sqrt(),
                    (lambda * p.sinr_max / cd).sqrt(),
                ];
                for c in crossings {
                    if c.is_finite() && c >= p.tx_power_min_mw && c <= p.tx_power_max_mw {
                        gammas.push(c);
                    }
                }
                gammas.sort_by(|a, b| a.partial_cmp(b).unwrap());
                for g in gammas {
                    let i = lambda / g;
                    if i < p.interference_min_mw || i > p.interference_max_mw {
                        interference_reject += 1;
                        continue;
                    }
                    candidates.push((g, i));
                }
            }
            PlannerMode::MaxPower => {
                let g = p.tx_power_max_mw;
                let mut targets = crate::lattice::log_spaced(
                    p.interference_min_mw,
                    p.interference_max_mw,
                    self.settings.search_points,
                );
                for c in [cd * g / p.sinr_min, cd * g / p.sinr_max] {
                    if c >= p.interference_min_mw && c <= p.interference_max_mw {
                        targets.push(c);
                    }
                }
                targets.sort_by(|a, b| a.partial_cmp(b).unwrap());
                for i in targets {
                    candidates.push((g, i));
                }
            }
            PlannerMode::MinInterference => {
                let i = p.interference_min_mw;
                let mut gammas = crate::lattice::log_spaced(
                    p.tx_power_min_mw,
                    p.tx_power_max_mw,
                    self.settings.search_points,
                );
                for c in [p.sinr_min * i / cd, p.sinr_max * i / cd] {
                    if c >= p.tx_power_min_mw && c <= p.tx_power_max_mw {
                        gammas.push(c);
                    }
                }
                gammas.sort_by(|a, b| a.partial_cmp(b).unwrap());
                for g in gammas {
                    candidates.push((g, i));
                }
            }
            PlannerMode::Arbitrary => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let lg = (p.tx_power_min_mw.ln(), p.tx_power_max_mw.ln());
                let li = (p.interference_min_mw.ln(), p.interference_max_mw.ln());
                for _ in 0..10_000 {
                    let g = (lg.0 + rng.gen::<f64>() * (lg.1 - lg.0)).exp();
                    let i = (li.0 + rng.gen::<f64>() * (li.1 - li.0)).exp();
                    let eta = cd * g / i;
                    if eta >= p.sinr_min && eta <= p.sinr_max {
                        candidates.push((g, i));
                        break;
                    }
                }
            }
        }

        if candidates.is_empty() {
            return Err(Error::Infeasible {
                violated: if interference_reject > 0 {
                    Constraint::InterferenceBounds
                } else {
                    Constraint::SinrBounds
                },
            });
        }

        // SINR screen, then the mode-restricted minimum energy which
        // anchors the theta budget.
        let mut screened: Vec<(f64, f64, f64, f64)> = Vec::new(); // gamma, target, eta, energy
        for (g, i) in candidates {
            let eta = cd * g / i;
            if eta < p.sinr_min * (1.0 - 1e-12) || eta > p.sinr_max * (1.0 + 1e-12) {
                continue;
            }
            let eta = eta.clamp(p.sinr_min, p.sinr_max);
            let e = link_slot_power(true, g, p) / shannon_rate(eta)?;
            screened.push((g, i, eta, e));
        }
        if screened.is_empty() {
            return Err(Error::Infeasible {
                violated: Constraint::SinrBounds,
            });
        }
        let min_e = screened.iter().map(|s| s.3).fold(f64::INFINITY, f64::min);
        let budget = if theta.is_infinite() {
            f64::INFINITY
        } else {
            theta * min_e
        };

        let mut best: Option<(f64, LinkPlan)> = None;
        for (g, i, eta, e) in screened {
            if e > budget * (1.0 + 1e-12) {
                continue;
            }
            let obj = self.objective(eta, d_m)?;
            let better = match &best {
                None => true,
                Some((bo, bp)) => obj > *bo || (obj == *bo && g < bp.tx_power_mw),
            };
            if better {
                best = Some((
                    obj,
                    LinkPlan {
                        tx_power_mw: g,
                        target_interference_mw: i,
                        sinr: eta,
                        rate_bps_hz: shannon_rate(eta)?,
                        spacing_over_d: self.table.inverse(eta)?,
                        energy_per_bit: e,
                        energy_budget: budget,
                        theta,
                        product: g * i,
                        spectral_efficiency: obj,
                    },
                ));
            }
        }
        // theta >= 1 keeps at least the mode minimum inside the budget
        let (_, plan) = best.expect("mode minimum always satisfies its own budget");
        Ok(plan)
    }

    /// Exact-bisection spacing ratio for a planned SINR (slow path; the
    /// table-backed `plan_link` is validated against this in tests).
    pub fn spacing_exact(&self, eta: f64) -> Result<f64> {
        lattice_f_inverse(eta, &self.lattice, InversionBracket::default())
    }
}
