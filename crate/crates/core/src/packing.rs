//! Finite packings of unit balls inside a spherical window: fcc, hcp and
//! cubic lattice windows, greedy saturation and saturation probing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Clipper, HalfSpace, Point3};
use crate::spatial::CellGrid;

/// Minimum center separation, less rounding slack.
pub const MIN_SEPARATION: f64 = 2.0 - 1e-12;
/// Distance from the window boundary needed before a vertex counts as interior.
pub const INTERIOR_MARGIN: f64 = 4.0;
/// Shrink applied to the window when probing or filling holes.
pub const PROBE_MARGIN: f64 = 2.0;

const WINDOW_TOL: f64 = 1e-9;
const EXHAUSTIVE_CHECK_LIMIT: usize = 5_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub center: Point3,
    pub radius: f64,
}

impl Window {
    pub fn new(center: Point3, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || !center.is_finite() {
            return Err(Error::InvalidPacking(format!(
                "window radius must be positive and finite, got {radius}"
            )));
        }
        Ok(Self { center, radius })
    }

    pub fn origin(radius: f64) -> Result<Self> {
        Self::new(Point3::ORIGIN, radius)
    }

    /// Distance from `p` to the window boundary (negative outside).
    pub fn margin(&self, p: Point3) -> f64 {
        self.radius - p.distance(self.center)
    }
}

/// Ball centers with pairwise distance at least 2, all inside a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PackingFile")]
pub struct Packing {
    pub label: String,
    pub window: Window,
    pub centers: Vec<Point3>,
}

#[derive(Deserialize)]
struct PackingFile {
    label: String,
    window: Window,
    centers: Vec<Point3>,
}

impl TryFrom<PackingFile> for Packing {
    type Error = Error;
    fn try_from(f: PackingFile) -> Result<Self> {
        Packing::new(f.label, Window::new(f.window.center, f.window.radius)?, f.centers)
    }
}

/// Outcome of probing a packing for room to add another ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SaturationReport {
    pub probe_count: usize,
    pub max_gap_distance: f64,
    pub saturated: bool,
    pub probe_spacing: f64,
}

impl Packing {
    /// Validates separation and window containment.
    pub fn new(label: impl Into<String>, window: Window, centers: Vec<Point3>) -> Result<Self> {
        let p = Self {
            label: label.into(),
            window,
            centers,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn empty(label: impl Into<String>, window: Window) -> Self {
        Self {
            label: label.into(),
            window,
            centers: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        for (i, c) in self.centers.iter().enumerate() {
            if !c.is_finite() {
                return Err(Error::InvalidPacking(format!("center {i} is not finite")));
            }
            if self.window.margin(*c) < -WINDOW_TOL {
                return Err(Error::InvalidPacking(format!(
                    "center {i} at {c} lies outside the window"
                )));
            }
        }
        if let Some((i, j, d)) = self.closest_pair() {
            if d < MIN_SEPARATION {
                return Err(Error::InvalidPacking(format!(
                    "centers {i} and {j} are {d} apart (< 2)"
                )));
            }
        }
        Ok(())
    }

    /// Closest pair of centers. Exhaustive for small packings, grid-based
    /// otherwise; the grid variant only sees pairs closer than 2.
    pub fn closest_pair(&self) -> Option<(usize, usize, f64)> {
        let n = self.centers.len();
        if n < 2 {
            return None;
        }
        let mut best: Option<(usize, usize, f64)> = None;
        let mut consider = |i: usize, j: usize, d: f64| {
            if best.is_none_or(|b| d < b.2) {
                best = Some((i.min(j), i.max(j), d));
            }
        };
        if n <= EXHAUSTIVE_CHECK_LIMIT {
            for i in 0..n {
                for j in i + 1..n {
                    consider(i, j, self.centers[i].distance(self.centers[j]));
                }
            }
        } else {
            let grid = self.grid();
            for (i, &c) in self.centers.iter().enumerate() {
                grid.for_each_within(c, 2.0, |j, d| {
                    if j != i {
                        consider(i, j, d);
                    }
                });
            }
            if best.is_none() {
                best = Some((0, 0, 2.0));
            }
        }
        best
    }

    /// Smallest pairwise distance (exhaustive).
    pub fn min_pairwise_distance(&self) -> Option<f64> {
        let n = self.centers.len();
        let mut best = None::<f64>;
        for i in 0..n {
            for j in i + 1..n {
                let d = self.centers[i].distance(self.centers[j]);
                best = Some(best.map_or(d, |b| b.min(d)));
            }
        }
        best
    }

    pub fn grid(&self) -> CellGrid {
        CellGrid::new(&self.centers, 2.0)
    }

    /// At least [`INTERIOR_MARGIN`] from the window boundary.
    pub fn is_interior(&self, index: usize) -> bool {
        self.centers
            .get(index)
            .is_some_and(|&c| self.window.margin(c) >= INTERIOR_MARGIN - WINDOW_TOL)
    }

    pub fn interior_indices(&self) -> Vec<usize> {
        (0..self.centers.len()).filter(|&i| self.is_interior(i)).collect()
    }

    pub(crate) fn require_interior(&self, index: usize) -> Result<Point3> {
        let c = *self.centers.get(index).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "vertex index {index} out of range ({} centers)",
                self.centers.len()
            ))
        })?;
        if !self.is_interior(index) {
            return Err(Error::NotInterior {
                index,
                margin: self.window.margin(c),
                required: INTERIOR_MARGIN,
            });
        }
        Ok(c)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("packing serializes")
    }
}

fn sort_from_center(points: &mut [Point3], center: Point3) {
    points.sort_by(|a, b| {
        a.distance_squared(center)
            .total_cmp(&b.distance_squared(center))
            .then(a.x.total_cmp(&b.x))
            .then(a.y.total_cmp(&b.y))
            .then(a.z.total_cmp(&b.z))
    });
}

#[allow(clippy::needless_range_loop)] // cofactor indices read best as i, j
fn invert3(m: [[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if det.abs() < 1e-12 {
        return None;
    }
    let mut inv = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (a, b) = ((j + 1) % 3, (j + 2) % 3);
            let (c, d) = ((i + 1) % 3, (i + 2) % 3);
            inv[i][j] = (m[a][c] * m[b][d] - m[a][d] * m[b][c]) / det;
        }
    }
    Some(inv)
}

/// All points `motif[k] + Σ n_i generators[i]` inside `window`, sorted by
/// distance from the window center.
pub fn lattice_packing(
    label: impl Into<String>,
    generators: [Point3; 3],
    motif: &[Point3],
    window: Window,
) -> Result<Packing> {
    // Columns are the generators.
    let m = [
        [generators[0].x, generators[1].x, generators[2].x],
        [generators[0].y, generators[1].y, generators[2].y],
        [generators[0].z, generators[1].z, generators[2].z],
    ];
    let inv = invert3(m).ok_or_else(|| Error::InvalidPacking("degenerate lattice generators".into()))?;
    let reach = window.radius
        + motif.iter().map(|p| p.norm()).fold(0.0, f64::max)
        + window.center.norm();
    let bounds: Vec<i64> = inv
        .iter()
        .map(|row| {
            let row_norm = (row[0] * row[0] + row[1] * row[1] + row[2] * row[2]).sqrt();
            (reach * row_norm).ceil() as i64 + 1
        })
        .collect();

    let mut centers = Vec::new();
    for i in -bounds[0]..=bounds[0] {
        for j in -bounds[1]..=bounds[1] {
            for k in -bounds[2]..=bounds[2] {
                let base = generators[0] * i as f64 + generators[1] * j as f64 + generators[2] * k as f64;
                for &t in motif {
                    let p = base + t;
                    if window.margin(p) >= -WINDOW_TOL {
                        centers.push(p);
                    }
                }
            }
        }
    }
    sort_from_center(&mut centers, window.center);
    Packing::new(label, window, centers)
}

/// Face-centered cubic window centered at the origin; nearest-neighbor
/// distance 2 and the origin is center 0.
pub fn fcc_packing(window_radius: f64) -> Result<Packing> {
    let s = std::f64::consts::SQRT_2;
    lattice_packing(
        "fcc",
        [
            Point3::new(s, s, 0.0),
            Point3::new(s, 0.0, s),
            Point3::new(0.0, s, s),
        ],
        &[Point3::ORIGIN],
        Window::origin(window_radius)?,
    )
}

/// Hexagonal-close packing (ABAB stacking along z) centered at the origin.
pub fn hcp_packing(window_radius: f64) -> Result<Packing> {
    let s3 = 3f64.sqrt();
    let layer = 2.0 * (2.0f64 / 3.0).sqrt();
    lattice_packing(
        "hcp",
        [
            Point3::new(2.0, 0.0, 0.0),
            Point3::new(1.0, s3, 0.0),
            Point3::new(0.0, 0.0, 2.0 * layer),
        ],
        &[Point3::ORIGIN, Point3::new(1.0, 1.0 / s3, layer)],
        Window::origin(window_radius)?,
    )
}

/// Simple cubic lattice with spacing 2.
pub fn cubic_packing(window_radius: f64) -> Result<Packing> {
    lattice_packing(
        "cubic",
        [
            Point3::new(2.0, 0.0, 0.0),
            Point3::new(0.0, 2.0, 0.0),
            Point3::new(0.0, 0.0, 2.0),
        ],
        &[Point3::ORIGIN],
        Window::origin(window_radius)?,
    )
}

/// Convex region where saturation inserts balls: a polytope circumscribed
/// about the probe ball `B(w, R - 2)`.
struct FillRegion {
    planes: Vec<HalfSpace>,
}

impl FillRegion {
    const OVERSHOOT: f64 = 0.1;

    fn new(window: &Window) -> Option<Self> {
        let inner = window.radius - PROBE_MARGIN;
        if inner <= 0.0 {
            return None;
        }
        let mut count = 32usize;
        loop {
            let planes: Vec<HalfSpace> = fibonacci_sphere(count)
                .into_iter()
                .map(|n| HalfSpace {
                    normal: n,
                    offset: n.dot(window.center) + inner,
                })
                .collect();
            let mut clip = Clipper::cube(window.center, inner * 2.0 + 1.0);
            for h in &planes {
                clip.clip(h);
            }
            let reach = clip
                .vertices()
                .into_iter()
                .map(|v| v.distance(window.center))
                .fold(0.0, f64::max);
            if reach <= inner + Self::OVERSHOOT || count > 1 << 16 {
                return Some(Self { planes });
            }
            count *= 2;
        }
    }

    fn contains(&self, p: Point3, slack: f64) -> bool {
        self.planes.iter().all(|h| h.signed_distance(p) <= slack)
    }
}

fn fibonacci_sphere(n: usize) -> Vec<Point3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let t = golden * i as f64;
            Point3::new(r * t.cos(), r * t.sin(), z)
        })
        .collect()
}

fn grid_range(spacing: f64, radius: f64) -> i64 {
    (radius / spacing).ceil() as i64 + 1
}

/// Greedily add balls until no room is left inside the probe region.
///
/// Candidates come from a jittered grid (seeded), then the plain grid, then
/// Voronoi vertices of the current cells that are still at least 2 from every
/// center. The result has no point of `B(w, R - 2)` at distance >= 2 from all
/// centers.
pub fn saturate(p: &Packing, seed: u64, candidate_spacing: f64) -> Result<Packing> {
    if !(candidate_spacing > 0.0 && candidate_spacing <= 0.5) {
        return Err(Error::InvalidArgument(format!(
            "candidate spacing must lie in (0, 0.5], got {candidate_spacing}"
        )));
    }
    p.validate()?;
    let Some(region) = FillRegion::new(&p.window) else {
        return Ok(p.clone());
    };
    let window = p.window;
    let mut grid = p.grid();
    let slack = candidate_spacing * 3f64.sqrt() / 2.0;
    let extent = window.radius - PROBE_MARGIN + FillRegion::OVERSHOOT + slack;
    let n = grid_range(candidate_spacing, extent);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = candidate_spacing / 4.0;

    for pass in 0..2 {
        for i in -n..=n {
            for j in -n..=n {
                for k in -n..=n {
                    let mut q = window.center
                        + Point3::new(i as f64, j as f64, k as f64) * candidate_spacing;
                    if pass == 0 {
                        q += Point3::new(
                            rng.gen_range(-jitter..=jitter),
                            rng.gen_range(-jitter..=jitter),
                            rng.gen_range(-jitter..=jitter),
                        );
                    }
                    if region.contains(q, slack)
                        && window.margin(q) >= 0.0
                        && !grid.any_closer_than(q, 2.0)
                    {
                        grid.insert(q);
                    }
                }
            }
        }
    }

    fill_holes(&mut grid, &region, &window);

    let centers = grid.points().to_vec();
    Packing::new(p.label.clone(), window, centers)
}

/// Insert Voronoi vertices of the region that are still >= 2 from all centers.
fn fill_holes(grid: &mut CellGrid, region: &FillRegion, window: &Window) {
    const CELL_HALF_WIDTH: f64 = 3.0;
    // A bisector farther than the cube's corner radius cannot cut it.
    let neighbor_reach = 2.0 * CELL_HALF_WIDTH * 3f64.sqrt() + 1e-6;
    let relevant = window.radius - PROBE_MARGIN + FillRegion::OVERSHOOT + CELL_HALF_WIDTH * 3f64.sqrt();
    loop {
        let snapshot = grid.clone();
        let candidates: Vec<Point3> = (0..snapshot.len())
            .into_par_iter()
            .filter(|&i| snapshot.points()[i].distance(window.center) <= relevant)
            .flat_map_iter(|i| {
                let c = snapshot.points()[i];
                let mut near: Vec<(f64, usize)> = Vec::new();
                snapshot.for_each_within(c, neighbor_reach, |j, d| {
                    if j != i {
                        near.push((d, j));
                    }
                });
                near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let mut cell = Clipper::cube(c, CELL_HALF_WIDTH);
                for &(_, j) in &near {
                    let h = HalfSpace::bisector(c, snapshot.points()[j]).expect("distinct centers");
                    cell.clip(&h);
                }
                for h in &region.planes {
                    cell.clip(h);
                }
                cell.vertices()
                    .into_iter()
                    .filter(|&v| !snapshot.any_closer_than(v, 2.0))
                    .collect::<Vec<_>>()
            })
            .collect();

        let mut inserted = 0;
        for q in candidates {
            if window.margin(q) >= 0.0 && !grid.any_closer_than(q, 2.0) {
                grid.insert(q);
                inserted += 1;
            }
        }
        if inserted == 0 {
            break;
        }
    }
}

/// Probe a grid over the window shrunk by 2 and report the largest distance
/// from a probe to its nearest center.
pub fn check_saturation(p: &Packing, probe_spacing: f64) -> Result<SaturationReport> {
    if !(probe_spacing > 0.0 && probe_spacing <= 0.5) {
        return Err(Error::InvalidArgument(format!(
            "probe spacing must lie in (0, 0.5], got {probe_spacing}"
        )));
    }
    let inner = p.window.radius - PROBE_MARGIN;
    let grid = p.grid();
    let center = p.window.center;
    let n = if inner > 0.0 {
        grid_range(probe_spacing, inner)
    } else {
        -1
    };
    let (probe_count, max_gap) = (-n..=n)
        .into_par_iter()
        .map(|i| {
            let mut count = 0usize;
            let mut worst = 0.0f64;
            for j in -n..=n {
                for k in -n..=n {
                    let q = center + Point3::new(i as f64, j as f64, k as f64) * probe_spacing;
                    if q.distance(center) > inner {
                        continue;
                    }
                    count += 1;
                    let d = grid.nearest_distance(q).unwrap_or(f64::INFINITY);
                    worst = worst.max(d);
                }
            }
            (count, worst)
        })
        .reduce(|| (0, 0.0), |a, b| (a.0 + b.0, a.1.max(b.1)));
    Ok(SaturationReport {
        probe_count,
        max_gap_distance: max_gap,
        saturated: max_gap < 2.0,
        probe_spacing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fcc_kissing_shell() {
        let p = fcc_packing(2.1).unwrap();
        assert_eq!(p.len(), 13);
        assert_eq!(p.centers[0], Point3::ORIGIN);
        for c in &p.centers[1..] {
            assert!((c.norm() - 2.0).abs() < 1e-12);
        }
        assert!((p.min_pairwise_distance().unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn hcp_kissing_shell() {
        let p = hcp_packing(2.1).unwrap();
        assert_eq!(p.len(), 13);
        assert!((p.min_pairwise_distance().unwrap() - 2.0).abs() < 1e-12);
    }

    // Counts frozen from an independent integer enumeration of both lattices.
    #[test]
    fn counts_match_enumeration() {
        assert_eq!(fcc_packing(10.0).unwrap().len(), 767);
        assert_eq!(hcp_packing(10.0).unwrap().len(), 763);
        assert_eq!(fcc_packing(6.0).unwrap().len(), 177);
        assert_eq!(hcp_packing(6.0).unwrap().len(), 159);
    }

    #[test]
    fn counts_approach_cell_volume() {
        let r: f64 = 20.0;
        let expected = crate::geom::ball_volume(r) / 32f64.sqrt();
        for p in [fcc_packing(r).unwrap(), hcp_packing(r).unwrap()] {
            let rel = (p.len() as f64 - expected).abs() / expected;
            assert!(rel < 0.02, "{} count {} vs {expected}", p.label, p.len());
        }
        let a = fcc_packing(15.0).unwrap().len() as i64;
        let b = hcp_packing(15.0).unwrap().len() as i64;
        assert!((a - b).abs() <= 2, "{a} vs {b}");
    }

    #[test]
    fn rejects_overlap_and_escape() {
        let w = Window::origin(5.0).unwrap();
        let overlap = Packing::new("x", w, vec![Point3::ORIGIN, Point3::new(1.9, 0.0, 0.0)]);
        assert!(matches!(overlap, Err(Error::InvalidPacking(_))));
        let outside = Packing::new("x", w, vec![Point3::new(6.0, 0.0, 0.0)]);
        assert!(matches!(outside, Err(Error::InvalidPacking(_))));
    }

    #[test]
    fn single_ball_is_not_saturated() {
        let w = Window::origin(6.0).unwrap();
        let p = Packing::new("single", w, vec![Point3::ORIGIN]).unwrap();
        let rep = check_saturation(&p, 0.25).unwrap();
        assert!(!rep.saturated);
        assert!(rep.max_gap_distance > 3.9);
    }

    #[test]
    fn fcc_gap_is_the_deep_hole() {
        let p = fcc_packing(8.0).unwrap();
        let rep = check_saturation(&p, 0.25).unwrap();
        let s = std::f64::consts::SQRT_2;
        assert!(rep.saturated);
        assert!(rep.max_gap_distance <= s + 1e-12);
        assert!(s - rep.max_gap_distance <= 0.25 * 3f64.sqrt() / 2.0);
    }

    #[test]
    fn saturate_empty_window() {
        let w = Window::origin(6.0).unwrap();
        let p = saturate(&Packing::empty("random", w), 1, 0.25).unwrap();
        assert!(p.len() > 5);
        assert!(check_saturation(&p, 0.25).unwrap().saturated);
        let again = saturate(&p, 1, 0.25).unwrap();
        assert_eq!(again.len(), p.len());
        let repeat = saturate(&Packing::empty("random", w), 1, 0.25).unwrap();
        assert_eq!(repeat, p);
    }

    #[test]
    fn fcc_is_already_saturated() {
        let p = fcc_packing(7.0).unwrap();
        let s = saturate(&p, 3, 0.25).unwrap();
        assert_eq!(s.len(), p.len());
    }

    #[test]
    fn bad_spacing_rejected() {
        let p = fcc_packing(5.0).unwrap();
        assert!(saturate(&p, 0, 0.6).is_err());
        assert!(check_saturation(&p, 0.0).is_err());
    }
}
