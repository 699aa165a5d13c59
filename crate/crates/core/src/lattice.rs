//! Interference analysis on an infinite hexagonal packing of concurrent
//! links.
//!
//! Every cell of a hexagonal tiling with centre-to-vertex radius `r_g`
//! hosts one active link of length `d`; all geometry reduces to the ratio
//! `r = r_g / d`. The module provides:
//!
//! - `lattice_f(r)` — the SINR at a destination when every other cell
//!   transmits at the same power (interference-dominated, scale-free),
//! - `lattice_g(r)` — area rate density log2(1+F) / (hex area),
//! - `lattice_f_inverse` — bisection inverse of the monotone `F`,
//! - `solve_constrained` — brute-force grid maximisation of the rate
//!   density subject to an energy-per-bit cap and a minimum SINR,
//! - `kkt_residual` / `fit_multipliers` — first-order optimality
//!   diagnostics for the solver output,
//! - [`LatticeTable`] — a dense monotone interpolation table for hot
//!   paths that cannot afford live lattice sums.
//!
//! The infinite sum is evaluated as a truncated block plus analytic row
//! corrections; the accumulated error bound is kept below
//! `tail_tolerance` by growing the truncation index adaptively.

use crate::error::{Constraint, Error, Result};
use crate::model::{link_slot_power, shannon_rate, RadioParams};
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

/// Hexagon area factor: area = HEX_AREA_FACTOR * r_g^2.
pub const HEX_AREA_FACTOR: f64 = 2.598076211353316; // 3*sqrt(3)/2

const SQRT3: f64 = 1.7320508075688772;

/// Configuration of the lattice summation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeConfig {
    /// Path-loss exponent; the sum diverges for values <= 2.
    pub path_loss_exponent: f64,
    /// Initial truncation index of the summation block.
    pub truncation_index: usize,
    /// Relative error budget for the truncated sum.
    pub tail_tolerance: f64,
}

impl LatticeConfig {
    pub fn new(path_loss_exponent: f64) -> Self {
        LatticeConfig {
            path_loss_exponent,
            truncation_index: 16,
            tail_tolerance: 1e-6,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.path_loss_exponent <= 2.0 {
            return Err(Error::Divergence {
                alpha: self.path_loss_exponent,
            });
        }
        if self.truncation_index == 0 {
            return Err(Error::Config("truncation index must be >= 1".into()));
        }
        if !(self.tail_tolerance > 0.0) {
            return Err(Error::Config("tail tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Bracket in `r = r_g/d` used when inverting `F`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InversionBracket {
    pub lo: f64,
    pub hi: f64,
}

impl Default for InversionBracket {
    /// Covers SINR targets from well below 0 dB up to beyond 30 dB for
    /// path-loss exponents of practical interest. `F` is strictly
    /// increasing on this range.
    fn default() -> Self {
        InversionBracket { lo: 0.62, hi: 80.0 }
    }
}

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

/// Normalised distances from interfering sources to the reference
/// destination, for lattice indices (m, n) in [-bound, bound]^2 minus the
/// origin. The reference destination sits one link length from its own
/// source along the x axis.
pub fn interferer_distances(rg_over_d: f64, bound: usize) -> Result<Vec<f64>> {
    if !(rg_over_d > 0.0) {
        return Err(Error::Domain(format!("non-positive ratio {rg_over_d}")));
    }
    if bound == 0 {
        return Err(Error::Domain("bound must be >= 1".into()));
    }
    let b = bound as i64;
    let mut out = Vec::with_capacity((2 * bound + 1) * (2 * bound + 1) - 1);
    for n in -b..=b {
        for m in -b..=b {
            if m == 0 && n == 0 {
                continue;
            }
            let x = (m as f64 * SQRT3 + n as f64 * SQRT3 / 2.0) * rg_over_d - 1.0;
            let y = 1.5 * n as f64 * rg_over_d;
            out.push((x * x + y * y).sqrt());
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Gauss-Legendre quadrature and special functions
// ---------------------------------------------------------------------------

fn gauss_legendre_32() -> &'static ([f64; 32], [f64; 32]) {
    static CELL: OnceLock<([f64; 32], [f64; 32])> = OnceLock::new();
    CELL.get_or_init(|| {
        // Newton iteration on P_32; standard construction.
        let n = 32usize;
        let mut nodes = [0.0f64; 32];
        let mut weights = [0.0f64; 32];
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0f64, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let (mut p0, mut p1) = (1.0f64, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        (nodes, weights)
    })
}

/// integral of cos(theta)^p over [theta0, pi/2].
fn cos_power_integral(theta0: f64, p: f64) -> f64 {
    let (nodes, weights) = gauss_legendre_32();
    let a = theta0;
    let b = std::f64::consts::FRAC_PI_2;
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for i in 0..32 {
        let t = mid + half * nodes[i];
        acc += weights[i] * t.cos().powf(p);
    }
    acc * half
}

/// Lanczos log-gamma.
fn ln_gamma(x: f64) -> f64 {
    const G: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = G[0];
    let t = x + 7.5;
    for (i, &g) in G.iter().enumerate().skip(1) {
        a += g / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// sqrt(pi) * Gamma((alpha-1)/2) / Gamma(alpha/2): the full-line integral
/// of (1+t^2)^(-alpha/2).
fn line_integral_constant(alpha: f64) -> f64 {
    (0.5 * std::f64::consts::PI.ln() + ln_gamma((alpha - 1.0) / 2.0) - ln_gamma(alpha / 2.0)).exp()
}

/// Sum_{n > m0} n^(-s) by Euler-Maclaurin, with a remainder bound.
fn zeta_tail(s: f64, m0: usize) -> (f64, f64) {
    let a = (m0 + 1) as f64;
    let v = a.powf(1.0 - s) / (s - 1.0) + 0.5 * a.powf(-s) + s * a.powf(-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * a.powf(-s - 3.0) / 720.0;
    let rem = s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * a.powf(-s - 5.0) / 30240.0;
    (v, rem)
}

// ---------------------------------------------------------------------------
// Core summation
// ---------------------------------------------------------------------------

struct LatticeSum {
    /// Sum of dist^(-alpha) over the infinite lattice.
    value: f64,
    /// d(value)/dr.
    derivative: f64,
    /// Absolute bound on the error of `value`.
    err: f64,
}

/// One side-strip row tail: sum over columns beyond the block, replaced by
/// a midpoint integral with an explicit error bound. `u0` is the physical
/// x-offset of the first integration boundary, `y` the row height.
/// Returns (tail, d(tail)/dr, err).
fn row_tail(u0: f64, y: f64, du0_dr: f64, r: f64, alpha: f64) -> Option<(f64, f64, f64)> {
    let a_step = SQRT3 * r; // lattice stride along the row
                            // convexity of the integrand is needed for the midpoint bound
    if u0 <= y.abs() / (alpha + 1.0).sqrt() || u0 <= 0.0 {
        return None;
    }
    let d2 = u0 * u0 + y * y;
    let f_edge = d2.powf(-alpha / 2.0);
    // |d/dm f| at the boundary; the midpoint-rule error is below |g'|/24.
    let gprime = alpha * a_step * u0 * d2.powf(-(alpha + 2.0) / 2.0);
    let err = gprime / 24.0 + f_edge * 1e-12;
    if y == 0.0 {
        let integral = u0.powf(1.0 - alpha) / (alpha - 1.0) / a_step;
        // T = I/A with A ~ r: dT/dr = -T/r + (1/A) dI/du0 * du0/dr
        let dt = -integral / r + (-u0.powf(-alpha)) * du0_dr / a_step;
        return Some((integral, dt, err));
    }
    let ya = y.abs();
    let theta0 = (u0 / ya).atan();
    let j1 = cos_power_integral(theta0, alpha - 2.0);
    let integral = ya.powf(1.0 - alpha) * j1 / a_step;
    // dI/du0 = -(u0^2+y^2)^(-alpha/2); dI/dy = -alpha*y*I2
    let j2 = cos_power_integral(theta0, alpha);
    let i2 = ya.powf(-1.0 - alpha) * j2;
    let di_du0 = -d2.powf(-alpha / 2.0);
    let di_dy = -alpha * y * i2;
    let dt = -integral / r + (di_du0 * du0_dr + di_dy * (y / r)) / a_step;
    Some((integral, dt, err))
}

fn lattice_sum(r: f64, cfg: &LatticeConfig) -> Result<LatticeSum> {
    cfg.validate()?;
    if !(r > 0.0) {
        return Err(Error::Domain(format!("non-positive ratio {r}")));
    }
    let alpha = cfg.path_loss_exponent;
    let mut m = cfg.truncation_index.max((8.0 / r).ceil() as usize).max(8);
    let cap = 1usize << 14;
    loop {
        if let Some(out) = try_lattice_sum(r, alpha, m, cfg.tail_tolerance) {
            return Ok(out);
        }
        if m >= cap {
            return Err(Error::Range(format!(
                "tail tolerance {} unreachable at truncation {m}",
                cfg.tail_tolerance
            )));
        }
        m *= 2;
    }
}

fn try_lattice_sum(r: f64, alpha: f64, m: usize, tol: f64) -> Option<LatticeSum> {
    let mb = m as i64;
    let mut sum = 0.0f64;
    let mut dsum = 0.0f64;
    // truncated block
    for n in -mb..=mb {
        let y = 1.5 * n as f64 * r;
        let base = n as f64 * SQRT3 / 2.0;
        for mm in -mb..=mb {
            if mm == 0 && n == 0 {
                continue;
            }
            let x = (mm as f64 * SQRT3 + base) * r - 1.0;
            let d2 = x * x + y * y;
            if d2 <= 0.0 {
                // a lattice source sits exactly on the destination
                return Some(LatticeSum {
                    value: f64::INFINITY,
                    derivative: f64::NAN,
                    err: 0.0,
                });
            }
            let f = d2.powf(-alpha / 2.0);
            sum += f;
            dsum += -(alpha * f / r) * (1.0 + x / d2);
        }
    }
    let mut err = 0.0f64;

    // rows |n| > m: the full-row sum equals the row integral up to an
    // exponentially small discretisation term (the integrand is analytic
    // with width y / stride >= 0.866 * (m+1)).
    let c_line = line_integral_constant(alpha);
    let (z, z_rem) = zeta_tail(alpha - 1.0, m);
    let stride = SQRT3 * r;
    let row_coef = c_line / stride * (1.5 * r).powf(1.0 - alpha);
    let tb = 2.0 * row_coef * z;
    sum += tb;
    dsum += -alpha * tb / r;
    err += 2.0 * row_coef * z_rem + tb * (-5.441 * (m as f64 + 1.0)).exp() * 100.0;

    // side tails of rows |n| <= m
    let edge = SQRT3 * r * (m as f64 + 0.5);
    for n in -mb..=mb {
        let y = 1.5 * n as f64 * r;
        let shift = SQRT3 / 2.0 * n as f64 * r;
        // right tail: u0 = edge + shift - 1, du0/dr = (u0+1)/r
        let u_right = edge + shift - 1.0;
        // left tail mirrored to positive u: u0 = edge - shift + 1, du0/dr = (u0-1)/r
        let u_left = edge - shift + 1.0;
        let right = row_tail(u_right, y, (u_right + 1.0) / r, r, alpha)?;
        let left = row_tail(u_left, y, (u_left - 1.0) / r, r, alpha)?;
        sum += right.0 + left.0;
        dsum += right.1 + left.1;
        err += right.2 + left.2;
    }

    if err <= tol * sum {
        Some(LatticeSum {
            value: sum,
            derivative: dsum,
            err,
        })
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// Public functions of the lattice analysis
// ---------------------------------------------------------------------------

/// Asymptotic SINR on the symmetric hexagonal packing at relative spacing
/// `rg_over_d`. Scale-free: only the ratio enters.
pub fn lattice_f(rg_over_d: f64, cfg: &LatticeConfig) -> Result<f64> {
    Ok(1.0 / lattice_sum(rg_over_d, cfg)?.value)
}

/// `F` together with the guaranteed relative error bound of the
/// truncated evaluation.
pub fn lattice_f_with_bound(rg_over_d: f64, cfg: &LatticeConfig) -> Result<(f64, f64)> {
    let s = lattice_sum(rg_over_d, cfg)?;
    Ok((1.0 / s.value, s.err / s.value))
}

/// `F` together with its derivative d F / d (rg/d).
pub fn lattice_f_with_derivative(rg_over_d: f64, cfg: &LatticeConfig) -> Result<(f64, f64)> {
    let s = lattice_sum(rg_over_d, cfg)?;
    Ok((1.0 / s.value, -s.derivative / (s.value * s.value)))
}

/// Area rate density G = log2(1 + F) / (hex area factor * r^2), in
/// bit/s/Hz per unit (r_g/d)^2. Divide by d^2 for bit/s/Hz per m^2.
pub fn lattice_g(rg_over_d: f64, cfg: &LatticeConfig) -> Result<f64> {
    let f = lattice_f(rg_over_d, cfg)?;
    Ok((1.0 + f).log2() / (HEX_AREA_FACTOR * rg_over_d * rg_over_d))
}

/// Invert the monotone `F` by bisection to 1e-8 absolute in `rg/d`.
pub fn lattice_f_inverse(eta: f64, cfg: &LatticeConfig, bracket: InversionBracket) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::Domain(format!("non-positive SINR {eta}")));
    }
    let f_lo = lattice_f(bracket.lo, cfg)?;
    let f_hi = lattice_f(bracket.hi, cfg)?;
    if eta < f_lo || eta > f_hi {
        return Err(Error::Range(format!(
            "SINR {eta:.4e} outside attainable range [{f_lo:.4e}, {f_hi:.4e}]"
        )));
    }
    let (mut lo, mut hi) = (bracket.lo, bracket.hi);
    while hi - lo > 1e-8 {
        let mid = 0.5 * (lo + hi);
        if lattice_f(mid, cfg)? < eta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Energy per transmitted bit on the symmetric packing, J/(bit/Hz):
/// pair power divided by the per-link rate at the asymptotic SINR.
pub fn energy_per_bit(
    gamma_mw: f64,
    rg_over_d: f64,
    params: &RadioParams,
    cfg: &LatticeConfig,
) -> Result<f64> {
    let f = lattice_f(rg_over_d, cfg)?;
    let rate = shannon_rate(f)?;
    Ok(link_slot_power(true, gamma_mw, params) / rate)
}

/// Locate the interior maximiser of `G` on `[lo, hi]` by a coarse grid
/// scan followed by golden-section refinement. Returns (r_star, g_star).
pub fn max_g(cfg: &LatticeConfig, lo: f64, hi: f64) -> Result<(f64, f64)> {
    let n = 481;
    let mut best = (lo, f64::NEG_INFINITY);
    for i in 0..n {
        let r = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let g = lattice_g(r, cfg)?;
        if g > best.1 {
            best = (r, g);
        }
    }
    let step = (hi - lo) / (n - 1) as f64;
    let (mut a, mut b) = ((best.0 - step).max(lo), (best.0 + step).min(hi));
    const PHI: f64 = 0.6180339887498949;
    let mut x1 = b - PHI * (b - a);
    let mut x2 = a + PHI * (b - a);
    let mut g1 = lattice_g(x1, cfg)?;
    let mut g2 = lattice_g(x2, cfg)?;
    while b - a > 1e-10 {
        if g1 < g2 {
            a = x1;
            x1 = x2;
            g1 = g2;
            x2 = a + PHI * (b - a);
            g2 = lattice_g(x2, cfg)?;
        } else {
            b = x2;
            x2 = x1;
            g2 = g1;
            x1 = b - PHI * (b - a);
            g1 = lattice_g(x1, cfg)?;
        }
    }
    let r = 0.5 * (a + b);
    Ok((r, lattice_g(r, cfg)?))
}

// ---------------------------------------------------------------------------
// Constrained optimisation over (gamma, r_g)
// ---------------------------------------------------------------------------

/// Grid resolution for [`solve_constrained`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveGrid {
    /// Log-spaced transmit-power points in [tx_power_min, tx_power_max].
    pub gamma_points: usize,
    /// Linearly spaced cell-radius points.
    pub radius_points: usize,
    /// Link distance d, metres.
    pub link_distance_m: f64,
    /// Cell-radius bracket in units of d.
    pub radius_lo_over_d: f64,
    pub radius_hi_over_d: f64,
    /// Optional golden-section refinement of the radius after the grid
    /// pass (only applied while both constraints stay inactive).
    pub refine: bool,
}

impl Default for SolveGrid {
    fn default() -> Self {
        SolveGrid {
            gamma_points: 200,
            radius_points: 300,
            link_distance_m: 1.0,
            radius_lo_over_d: 1.0,
            radius_hi_over_d: 4.0,
            refine: false,
        }
    }
}

/// Output of the constrained rate-density maximisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticSolution {
    /// Optimal transmit power, mW.
    pub tx_power_mw: f64,
    /// Optimal cell radius, m.
    pub cell_radius_m: f64,
    /// Rate density at the optimum, bit/s/Hz per m^2.
    pub rate_density: f64,
    /// Energy per bit at the optimum, J/(bit/Hz).
    pub energy_per_bit: f64,
    /// Asymptotic SINR (the F value) at the optimum.
    pub sinr: f64,
}

/// Brute-force grid maximisation of the rate density subject to
/// `energy_per_bit <= e_hat` and `F >= sinr_min`. Deterministic
/// tie-breaking: smaller radius first, then smaller power.
pub fn solve_constrained(
    e_hat: f64,
    params: &RadioParams,
    cfg: &LatticeConfig,
    grid: &SolveGrid,
) -> Result<AsymptoticSolution> {
    let d = grid.link_distance_m;
    if !(d > 0.0) {
        return Err(Error::Domain("non-positive link distance".into()));
    }
    let gammas = log_spaced(
        params.tx_power_min_mw,
        params.tx_power_max_mw,
        grid.gamma_points,
    );
    let radii = lin_spaced(
        grid.radius_lo_over_d * d,
        grid.radius_hi_over_d * d,
        grid.radius_points,
    );

    let mut any_sinr_ok = false;
    let mut best: Option<(f64, f64, f64, f64, f64)> = None; // (objective, rg, gamma, f, e)
    for &rg in &radii {
        let f = lattice_f(rg / d, cfg)?;
        if f < params.sinr_min {
            continue;
        }
        any_sinr_ok = true;
        let rate = shannon_rate(f)?;
        let objective = rate / (HEX_AREA_FACTOR * rg * rg);
        // The objective does not depend on gamma, so the smallest
        // feasible power wins the tie at this radius.
        let mut chosen = None;
        for &g in &gammas {
            let e = link_slot_power(true, g, params) / rate;
            if e <= e_hat {
                chosen = Some((g, e));
                break;
            }
        }
        let Some((g, e)) = chosen else { continue };
        let better = match best {
            None => true,
            Some((bo, ..)) => objective > bo,
        };
        if better {
            best = Some((objective, rg, g, f, e));
        }
    }

    let Some((mut objective, mut rg, gamma, mut f, mut e)) = best else {
        return Err(Error::Infeasible {
            violated: if any_sinr_ok {
                Constraint::EnergyBudget
            } else {
                Constraint::SinrBounds
            },
        });
    };

    if grid.refine {
        let step = (radii[1] - radii[0]).max(1e-12);
        let lo = (rg - step).max(grid.radius_lo_over_d * d);
        let hi = (rg + step).min(grid.radius_hi_over_d * d);
        let ok = |r: f64| -> Result<Option<(f64, f64, f64)>> {
            let fv = lattice_f(r / d, cfg)?;
            if fv < params.sinr_min {
                return Ok(None);
            }
            let rate = shannon_rate(fv)?;
            let ev = link_slot_power(true, gamma, params) / rate;
            if ev > e_hat {
                return Ok(None);
            }
            Ok(Some((rate / (HEX_AREA_FACTOR * r * r), fv, ev)))
        };
        let (mut a, mut b) = (lo, hi);
        for _ in 0..80 {
            let x1 = b - 0.618_033_988_749_894_9 * (b - a);
            let x2 = a + 0.618_033_988_749_894_9 * (b - a);
            let v1 = ok(x1)?.map(|t| t.0).unwrap_or(f64::NEG_INFINITY);
            let v2 = ok(x2)?.map(|t| t.0).unwrap_or(f64::NEG_INFINITY);
            if v1 < v2 {
                a = x1;
            } else {
                b = x2;
            }
        }
        let rr = 0.5 * (a + b);
        if let Some((o2, f2, e2)) = ok(rr)? {
            if o2 > objective {
                objective = o2;
                rg = rr;
                f = f2;
                e = e2;
            }
        }
    }

    Ok(AsymptoticSolution {
        tx_power_mw: gamma,
        cell_radius_m: rg,
        rate_density: objective,
        energy_per_bit: e,
        sinr: f,
    })
}

pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && lo > 0.0 && hi > lo);
    let l0 = lo.ln();
    let l1 = hi.ln();
    (0..n)
        .map(|i| (l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

pub fn lin_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

// ---------------------------------------------------------------------------
// KKT diagnostics
// ---------------------------------------------------------------------------

/// First-order optimality residuals at a point (rg, gamma) for the
/// constrained maximisation of [`solve_constrained`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktResidual {
    /// Stationarity in the radius direction, projected onto the feasible
    /// cone when the radius sits on its bracket boundary.
    pub stationarity_radius: f64,
    /// Stationarity in the power direction, projected likewise.
    pub stationarity_gamma: f64,
    /// Complementary slackness of the energy constraint.
    pub comp_energy: f64,
    /// Complementary slackness of the minimum-SINR constraint.
    pub comp_sinr: f64,
    /// Negative-multiplier mass.
    pub sign_violation: f64,
    /// Primal constraint violation mass.
    pub primal_violation: f64,
    /// Analytic dF/d(rg), for finite-difference cross-checks.
    pub df_drg: f64,
}

/// Evaluate the KKT residual vector at (rg, gamma) with multipliers
/// (mu_energy, mu_sinr) for the problem: maximise the rate density
/// subject to E <= e_hat and F >= sinr_min, with box bounds from `grid`
/// and `params`.
#[allow(clippy::too_many_arguments)]
pub fn kkt_residual(
    rg_m: f64,
    gamma_mw: f64,
    mu_energy: f64,
    mu_sinr: f64,
    e_hat: f64,
    params: &RadioParams,
    cfg: &LatticeConfig,
    grid: &SolveGrid,
) -> Result<KktResidual> {
    let d = grid.link_distance_m;
    let (f, df_dr) = lattice_f_with_derivative(rg_m / d, cfg)?;
    let df_drg = df_dr / d;
    let rate = shannon_rate(f)?;
    let ln2 = std::f64::consts::LN_2;
    let pair_power = link_slot_power(true, gamma_mw, params);
    let e = pair_power / rate;

    // d(objective)/d(rg) with objective = rate / (HEX * rg^2)
    let drate_drg = df_drg / ((1.0 + f) * ln2);
    let dobj_drg = (drate_drg - 2.0 * rate / rg_m) / (HEX_AREA_FACTOR * rg_m * rg_m);
    // d(E)/d(rg) and d(E)/d(gamma in mW)
    let de_drg = -pair_power * drate_drg / (rate * rate);
    let de_dgamma = params.amp_inverse_efficiency * 1e-3 / rate;

    // L = obj - mu1 (E - e_hat) - mu2 (sinr_min - F)
    let stat_rg_raw = dobj_drg - mu_energy * de_drg + mu_sinr * df_drg;
    let stat_gamma_raw = -mu_energy * de_dgamma;

    let project = |raw: f64, v: f64, lo: f64, hi: f64, tol: f64| -> f64 {
        if v <= lo + tol {
            raw.max(0.0)
        } else if v >= hi - tol {
            (-raw).max(0.0)
        } else {
            raw.abs()
        }
    };
    let rg_lo = grid.radius_lo_over_d * d;
    let rg_hi = grid.radius_hi_over_d * d;
    let rg_tol = (rg_hi - rg_lo) * 1e-9 + 1e-12;
    let ga_tol = params.tx_power_min_mw * 1e-9;

    Ok(KktResidual {
        stationarity_radius: project(stat_rg_raw, rg_m, rg_lo, rg_hi, rg_tol),
        stationarity_gamma: project(
            stat_gamma_raw,
            gamma_mw,
            params.tx_power_min_mw,
            params.tx_power_max_mw,
            ga_tol,
        ),
        comp_energy: if e_hat.is_finite() {
            mu_energy * (e - e_hat)
        } else {
            0.0
        },
        comp_sinr: mu_sinr * (params.sinr_min - f),
        sign_violation: (-mu_energy).max(0.0) + (-mu_sinr).max(0.0),
        primal_violation: if e_hat.is_finite() {
            (e - e_hat).max(0.0)
        } else {
            0.0
        } + (params.sinr_min - f).max(0.0),
        df_drg,
    })
}

/// Fit non-negative multipliers for the active constraints at (rg, gamma)
/// by least squares on the interior stationarity equations. `activity_tol`
/// is the relative slack under which a constraint counts as active.
#[allow(clippy::too_many_arguments)]
pub fn fit_multipliers(
    rg_m: f64,
    gamma_mw: f64,
    e_hat: f64,
    activity_tol: f64,
    params: &RadioParams,
    cfg: &LatticeConfig,
    grid: &SolveGrid,
) -> Result<(f64, f64)> {
    let d = grid.link_distance_m;
    let (f, df_dr) = lattice_f_with_derivative(rg_m / d, cfg)?;
    let df_drg = df_dr / d;
    let rate = shannon_rate(f)?;
    let ln2 = std::f64::consts::LN_2;
    let pair_power = link_slot_power(true, gamma_mw, params);
    let e = pair_power / rate;

    let energy_active = e_hat.is_finite() && (e_hat - e).abs() <= activity_tol * e_hat.abs();
    let sinr_active = (f - params.sinr_min).abs() <= activity_tol * params.sinr_min;

    let drate_drg = df_drg / ((1.0 + f) * ln2);
    let dobj_drg = (drate_drg - 2.0 * rate / rg_m) / (HEX_AREA_FACTOR * rg_m * rg_m);
    let de_drg = -pair_power * drate_drg / (rate * rate);
    let de_dgamma = params.amp_inverse_efficiency * 1e-3 / rate;

    // Interior directions contribute equations grad(obj) = sum mu_i grad(g_i).
    let rg_lo = grid.radius_lo_over_d * d;
    let rg_hi = grid.radius_hi_over_d * d;
    let rg_interior = rg_m > rg_lo * (1.0 + 1e-9) && rg_m < rg_hi * (1.0 - 1e-9);
    let gamma_interior = gamma_mw > params.tx_power_min_mw * (1.0 + 1e-9)
        && gamma_mw < params.tx_power_max_mw * (1.0 - 1e-9);

    // rows: (coeff_mu1, coeff_mu2, rhs)
    let mut rows: Vec<(f64, f64, f64)> = Vec::new();
    if rg_interior {
        rows.push((de_drg, -df_drg, dobj_drg));
    }
    if gamma_interior {
        rows.push((de_dgamma, 0.0, 0.0));
    }

    let solve = |use1: bool, use2: bool| -> (f64, f64) {
        // normal equations over the selected multipliers
        let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(c1, c2, rhs) in &rows {
            let c1 = if use1 { c1 } else { 0.0 };
            let c2 = if use2 { c2 } else { 0.0 };
            a11 += c1 * c1;
            a12 += c1 * c2;
            a22 += c2 * c2;
            b1 += c1 * rhs;
            b2 += c2 * rhs;
        }
        match (use1 && a11 > 0.0, use2 && a22 > 0.0) {
            (true, true) => {
                let det = a11 * a22 - a12 * a12;
                if det.abs() > 1e-300 {
                    ((b1 * a22 - b2 * a12) / det, (a11 * b2 - a12 * b1) / det)
                } else {
                    (b1 / a11, 0.0)
                }
            }
            (true, false) => (b1 / a11, 0.0),
            (false, true) => (0.0, b2 / a22),
            (false, false) => (0.0, 0.0),
        }
    };

    let (mut m1, mut m2) = solve(energy_active, sinr_active);
    // drop negative multipliers and refit
    if m1 < 0.0 {
        let r = solve(false, sinr_active);
        m1 = 0.0;
        m2 = r.1;
    }
    if m2 < 0.0 {
        let r = solve(energy_active && m1 > 0.0, false);
        m1 = r.0.max(0.0);
        m2 = 0.0;
    }
    Ok((m1.max(0.0), m2.max(0.0)))
}

// ---------------------------------------------------------------------------
// Interpolation table for hot paths
// ---------------------------------------------------------------------------

/// Dense monotone table of `F` over a bracket, with cubic Hermite
/// interpolation (Fritsch-Carlson limited slopes) for values and
/// inverses. Built once, then queried in O(log n).
#[derive(Debug, Clone)]
pub struct LatticeTable {
    r: Vec<f64>,
    f: Vec<f64>,
    slope: Vec<f64>,
    bracket: InversionBracket,
}

impl LatticeTable {
    pub fn build(cfg: &LatticeConfig, bracket: InversionBracket, nodes: usize) -> Result<Self> {
        assert!(nodes >= 16);
        let r = log_spaced(bracket.lo, bracket.hi, nodes);
        let mut f = Vec::with_capacity(nodes);
        let mut slope = Vec::with_capacity(nodes);
        for &ri in &r {
            let (fv, dv) = lattice_f_with_derivative(ri, cfg)?;
            f.push(fv);
            slope.push(dv);
        }
        // Fritsch-Carlson limiting keeps the interpolant monotone.
        for i in 0..nodes - 1 {
            let h = r[i + 1] - r[i];
            let delta = (f[i + 1] - f[i]) / h;
            if delta <= 0.0 {
                continue;
            }
            for j in [i, i + 1] {
                let a = slope[j] / delta;
                if a > 3.0 {
                    slope[j] = 3.0 * delta;
                }
                if slope[j] < 0.0 {
                    slope[j] = 0.0;
                }
            }
        }
        Ok(LatticeTable {
            r,
            f,
            slope,
            bracket,
        })
    }

    pub fn bracket(&self) -> InversionBracket {
        self.bracket
    }

    pub fn min_f(&self) -> f64 {
        self.f[0]
    }

    pub fn max_f(&self) -> f64 {
        *self.f.last().unwrap()
    }

    fn segment(&self, r: f64) -> usize {
        match self.r.binary_search_by(|x| x.partial_cmp(&r).unwrap()) {
            Ok(i) => i.min(self.r.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.r.len() - 2),
        }
    }

    fn hermite(&self, i: usize, r: f64) -> f64 {
        let h = self.r[i + 1] - self.r[i];
        let t = (r - self.r[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.f[i]
            + h10 * h * self.slope[i]
            + h01 * self.f[i + 1]
            + h11 * h * self.slope[i + 1]
    }

    /// Interpolated F(r).
    pub fn value(&self, r: f64) -> Result<f64> {
        if r < self.bracket.lo || r > self.bracket.hi {
            return Err(Error::Range(format!(
                "radius ratio {r} outside table bracket"
            )));
        }
        Ok(self.hermite(self.segment(r), r))
    }

    /// Interpolated inverse r = F^{-1}(eta).
    pub fn inverse(&self, eta: f64) -> Result<f64> {
        if eta < self.min_f() || eta > self.max_f() {
            return Err(Error::Range(format!(
                "SINR {eta:.4e} outside table range [{:.4e}, {:.4e}]",
                self.min_f(),
                self.max_f()
            )));
        }
        let i = match self.f.binary_search_by(|x| x.partial_cmp(&eta).unwrap()) {
            Ok(i) => return Ok(self.r[i]),
            Err(i) => i.saturating_sub(1).min(self.r.len() - 2),
        };
        let (mut lo, mut hi) = (self.r[i], self.r[i + 1]);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.hermite(i, mid) < eta {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}
