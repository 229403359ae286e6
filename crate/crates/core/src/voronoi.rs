//! Voronoi cells of packing vertices and the vertex-function checks built on
//! their volumes (fcc compatibility, negligibility, the score-derived
//! correction).

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::delta_oct;
use crate::error::{Error, Result};
use crate::geom::{halfspace_intersection, polytope_circumradius, ConvexPolytope, HalfSpace, Point3};
use crate::packing::{Packing, INTERIOR_MARGIN};
use crate::spatial::CellGrid;

/// Bisectors come from centers within this distance. Saturated cells lie in
/// radius 2, so farther centers cannot cut them.
pub const NEIGHBOR_CUTOFF: f64 = 4.0;
/// Margins above `-MARGIN_TOL` count as fcc-compatible.
pub const MARGIN_TOL: f64 = 1e-9;

/// √32, the Voronoi volume shared by fcc and hcp.
pub fn fcc_cell_volume() -> f64 {
    32f64.sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VoronoiCellRecord {
    pub index: usize,
    pub vertex: Point3,
    pub cell: ConvexPolytope,
    pub volume: f64,
    pub circumradius: f64,
}

impl VoronoiCellRecord {
    pub fn face_count(&self) -> usize {
        self.cell.face_count()
    }
}

/// Neighbor index over a packing for repeated cell construction.
pub struct VoronoiBuilder<'a> {
    packing: &'a Packing,
    grid: CellGrid,
}

impl<'a> VoronoiBuilder<'a> {
    pub fn new(packing: &'a Packing) -> Self {
        Self {
            packing,
            grid: packing.grid(),
        }
    }

    pub fn packing(&self) -> &Packing {
        self.packing
    }

    pub fn cell(&self, index: usize) -> Result<VoronoiCellRecord> {
        let v = self.packing.require_interior(index)?;
        let mut halfspaces = Vec::new();
        for j in self.grid.within(v, NEIGHBOR_CUTOFF) {
            if j == index {
                continue;
            }
            halfspaces.push(HalfSpace::bisector(Point3::ORIGIN, self.packing.centers[j] - v)?);
        }
        let cell = halfspace_intersection(&halfspaces)?.translated(v);
        let circumradius = polytope_circumradius(&cell, v);
        Ok(VoronoiCellRecord {
            index,
            vertex: v,
            volume: cell.volume(),
            cell,
            circumradius,
        })
    }

    /// Cells of every interior vertex, in index order.
    pub fn interior_cells(&self) -> Result<Vec<VoronoiCellRecord>> {
        self.packing
            .interior_indices()
            .into_par_iter()
            .map(|i| self.cell(i))
            .collect()
    }

    fn interior_volumes(&self) -> Result<BTreeMap<usize, f64>> {
        Ok(self
            .interior_cells()?
            .into_iter()
            .map(|c| (c.index, c.volume))
            .collect())
    }
}

/// Voronoi cell of an interior vertex.
pub fn voronoi_cell(p: &Packing, v_index: usize) -> Result<VoronoiCellRecord> {
    VoronoiBuilder::new(p).cell(v_index)
}

/// A real value per interior vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexFunction {
    pub values: BTreeMap<usize, f64>,
    pub source: String,
}

impl VertexFunction {
    pub fn from_fn(p: &Packing, source: impl Into<String>, mut f: impl FnMut(usize, Point3) -> f64) -> Self {
        let values = p
            .interior_indices()
            .into_iter()
            .map(|i| (i, f(i, p.centers[i])))
            .collect();
        Self {
            values,
            source: source.into(),
        }
    }

    pub fn constant(p: &Packing, value: f64) -> Self {
        Self::from_fn(p, format!("constant {value}"), |_, _| value)
    }

    pub fn zero(p: &Packing) -> Self {
        Self::from_fn(p, "zero", |_, _| 0.0)
    }

    pub fn get(&self, index: usize) -> Result<f64> {
        self.values
            .get(&index)
            .copied()
            .ok_or(Error::MissingValue(index))
    }
}

/// `a(v) = max(0, √32 − vol Ω(v))`: the smallest nonnegative fcc-compatible
/// correction.
pub fn deficit_function(p: &Packing) -> Result<VertexFunction> {
    let volumes = VoronoiBuilder::new(p).interior_volumes()?;
    Ok(VertexFunction {
        values: volumes
            .into_iter()
            .map(|(i, v)| (i, (fcc_cell_volume() - v).max(0.0)))
            .collect(),
        source: "max(0, sqrt(32) - vol)".into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Margin {
    pub vertex: usize,
    pub volume: f64,
    pub value: f64,
    /// `vol Ω(v) + a(v) − √32`
    pub margin: f64,
}

/// Margins of `√32 <= vol Ω(v) + a(v)` over the interior vertices.
pub fn fcc_compatibility_check(p: &Packing, a: &VertexFunction) -> Result<Vec<Margin>> {
    let interior = p.interior_indices();
    for &i in &interior {
        a.get(i)?;
    }
    let volumes = VoronoiBuilder::new(p).interior_volumes()?;
    interior
        .into_iter()
        .map(|i| {
            let volume = volumes[&i];
            let value = a.get(i)?;
            Ok(Margin {
                vertex: i,
                volume,
                value,
                margin: volume + value - fcc_cell_volume(),
            })
        })
        .collect()
}

pub fn is_fcc_compatible(margins: &[Margin]) -> bool {
    margins.iter().all(|m| m.margin >= -MARGIN_TOL)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NegligibilityFit {
    pub radii: Vec<f64>,
    /// `Σ_{v ∈ Λ(x,r)} a(v)` per radius.
    pub sums: Vec<f64>,
    /// `sums[i] / radii[i]²`
    pub ratios: Vec<f64>,
    pub fitted_c1: f64,
    pub passes: bool,
    /// The per-radius ratio at the largest radius exceeds 1.5x the ratio at
    /// the smallest: the sums outgrow `r²` on this window.
    pub growth_detected: bool,
}

/// Partial sums of `a` over `Λ(x, r)` for each radius, with the smallest `C1`
/// fitting `sum <= C1 r²` on every radius.
pub fn negligibility_fit(p: &Packing, a: &VertexFunction, x: Point3, radii: &[f64]) -> Result<NegligibilityFit> {
    let safe = p.window.radius - INTERIOR_MARGIN - x.distance(p.window.center);
    let grid = p.grid();
    let mut sums = Vec::with_capacity(radii.len());
    for &r in radii {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
        }
        if r > safe {
            return Err(Error::WindowOverflow { radius: r, margin: safe });
        }
        let mut s = 0.0;
        for i in grid.within(x, r) {
            s += a.get(i)?;
        }
        sums.push(s);
    }
    let ratios: Vec<f64> = sums.iter().zip(radii).map(|(s, r)| s / (r * r)).collect();
    let fitted_c1 = ratios.iter().copied().fold(0.0, f64::max);
    let passes = sums
        .iter()
        .zip(radii)
        .all(|(s, r)| *s <= fitted_c1 * r * r * (1.0 + 1e-12) + 1e-12);
    let ordered = order_by_radius(radii, &ratios);
    let growth_detected = match (ordered.first(), ordered.last()) {
        (Some(&first), Some(&last)) if ordered.len() > 1 => last > 0.0 && last > 1.5 * first.max(0.0),
        _ => false,
    };
    Ok(NegligibilityFit {
        radii: radii.to_vec(),
        sums,
        ratios,
        fitted_c1,
        passes,
        growth_detected,
    })
}

fn order_by_radius(radii: &[f64], values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..radii.len()).collect();
    idx.sort_by(|&a, &b| radii[a].total_cmp(&radii[b]));
    idx.into_iter().map(|i| values[i]).collect()
}

/// `a(v) = −σ(v)/(4 δ_oct) + 4π/(3 δ_oct) − vol Ω(v)` for caller-supplied
/// score values `σ(v)`.
pub fn cell_weight_function(p: &Packing, sigma_values: &VertexFunction) -> Result<VertexFunction> {
    let interior = p.interior_indices();
    for &i in &interior {
        sigma_values.get(i)?;
    }
    let d = delta_oct();
    let volumes = VoronoiBuilder::new(p).interior_volumes()?;
    let values = interior
        .into_iter()
        .map(|i| {
            let sigma = sigma_values.values[&i];
            (i, -sigma / (4.0 * d) + 4.0 * PI / (3.0 * d) - volumes[&i])
        })
        .collect();
    Ok(VertexFunction {
        values,
        source: format!("score correction from {}", sigma_values.source),
    })
}
