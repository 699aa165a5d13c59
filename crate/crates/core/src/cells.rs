//! Hexagonal cell geometry: coordinator placement, the 7-colour
//! scheduling-slot assignment, containment tests and the information
//! radii of the distributed MAC.

use crate::error::{Error, Result};
use crate::util::Vec2;
use serde::{Deserialize, Serialize};

const SQRT3: f64 = 1.7320508075688772;

/// A hexagonal cell layout with one coordinator per cell centre.
///
/// Cells are pointy-top hexagons of centre-to-vertex radius `radius_m`;
/// adjacent centres are `sqrt(3) * radius_m` apart. `info_radius_m` (r_a)
/// is the radius around a coordinator whose scheduled transmissions its
/// scheduling packet describes; `known_radius_m` (r_n) is the radius
/// within which a coordinator ends up knowing every scheduled
/// transmission after overhearing its neighbours.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellGrid {
    pub radius_m: f64,
    pub info_radius_m: f64,
    pub known_radius_m: f64,
    pub rings: usize,
    pub centers: Vec<Vec2>,
    pub axial: Vec<(i32, i32)>,
    pub colors: Vec<u8>,
    /// Centres of the first ring outside the layout, for containment
    /// tests (a point is inside the layout iff its nearest centre over
    /// the extended set belongs to the layout).
    halo: Vec<Vec2>,
}

fn axial_to_position(q: i32, r: i32, radius: f64) -> Vec2 {
    Vec2::new(
        (q as f64 * SQRT3 + r as f64 * SQRT3 / 2.0) * radius,
        1.5 * r as f64 * radius,
    )
}

fn hex_distance(q: i32, r: i32) -> i32 {
    (q.abs() + r.abs() + (q + r).abs()) / 2
}

/// Deterministic 7-colouring of hex cells: adjacent cells (and the
/// nearer second ring) never share a colour.
pub fn assign_scheduling_colors(axial: &[(i32, i32)]) -> Vec<u8> {
    axial
        .iter()
        .map(|&(q, r)| (q + 2 * r).rem_euclid(7) as u8)
        .collect()
}

impl CellGrid {
    /// Hexagonal layout of all cells within `rings` of the centre
    /// (rings = 2 gives the 19-cell layout).
    pub fn hexagonal(radius_m: f64, info_radius_factor: f64, rings: usize) -> Result<CellGrid> {
        if !(radius_m > 0.0) {
            return Err(Error::Config("cell radius must be positive".into()));
        }
        if info_radius_factor < 1.0 {
            return Err(Error::Config(
                "info radius must be at least the cell radius".into(),
            ));
        }
        let info_radius_m = info_radius_factor * radius_m;
        let known_radius_m =
            1.5 * radius_m + (info_radius_m.powi(2) - 0.75 * radius_m.powi(2)).sqrt();
        let r = rings as i32;
        let mut axial = Vec::new();
        let mut halo = Vec::new();
        for q in -(r + 1)..=(r + 1) {
            for s in -(r + 1)..=(r + 1) {
                let d = hex_distance(q, s);
                if d <= r {
                    axial.push((q, s));
                } else if d == r + 1 {
                    halo.push(axial_to_position(q, s, radius_m));
                }
            }
        }
        // deterministic order: by ring then angle-ish via axial sort
        axial.sort();
        let centers = axial
            .iter()
            .map(|&(q, s)| axial_to_position(q, s, radius_m))
            .collect();
        let colors = assign_scheduling_colors(&axial);
        Ok(CellGrid {
            radius_m,
            info_radius_m,
            known_radius_m,
            rings,
            centers,
            axial,
            colors,
            halo,
        })
    }

    /// The 19-cell layout used by the evaluation scenarios.
    pub fn nineteen(radius_m: f64, info_radius_factor: f64) -> Result<CellGrid> {
        Self::hexagonal(radius_m, info_radius_factor, 2)
    }

    pub fn cell_count(&self) -> usize {
        self.centers.len()
    }

    /// Index of the nearest cell centre.
    pub fn nearest_cell(&self, p: Vec2) -> usize {
        let mut best = 0;
        let mut bd = f64::INFINITY;
        for (i, c) in self.centers.iter().enumerate() {
            let d = c.dist(p);
            if d < bd {
                bd = d;
                best = i;
            }
        }
        best
    }

    /// True when the point lies inside the union of the layout's cells.
    pub fn contains(&self, p: Vec2) -> bool {
        let inside = self.centers[self.nearest_cell(p)].dist(p);
        self.halo.iter().all(|h| h.dist(p) >= inside)
    }

    /// Cells whose hex distance from the centre is within `rings - 1`:
    /// the edge-effect-free inner region (7 cells for the 19-cell layout).
    pub fn inner_cells(&self) -> Vec<usize> {
        let r = self.rings as i32 - 1;
        self.axial
            .iter()
            .enumerate()
            .filter(|(_, &(q, s))| hex_distance(q, s) <= r)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        let (qi, ri) = self.axial[i];
        let (qj, rj) = self.axial[j];
        i != j && hex_distance(qi - qj, ri - rj) == 1
    }

    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        (0..self.cell_count())
            .filter(|&j| self.adjacent(i, j))
            .collect()
    }

    /// Bounding box of the cell union (for mobility reflection).
    pub fn bounding_box(&self) -> (Vec2, Vec2) {
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for c in &self.centers {
            lo.x = lo.x.min(c.x - SQRT3 / 2.0 * self.radius_m);
            lo.y = lo.y.min(c.y - self.radius_m);
            hi.x = hi.x.max(c.x + SQRT3 / 2.0 * self.radius_m);
            hi.y = hi.y.max(c.y + self.radius_m);
        }
        (lo, hi)
    }

    /// Area of `cells.len()` hexagons, m^2.
    pub fn area_of(&self, cells: &[usize]) -> f64 {
        cells.len() as f64 * crate::lattice::HEX_AREA_FACTOR * self.radius_m * self.radius_m
    }
}
