//! Finite densities `δ(x, r, Λ)` and the explicit density bound obtained from
//! an fcc-compatible vertex function.

use serde::Serialize;

use crate::constants::fcc_density;
use crate::error::{Error, Result};
use crate::geom::{ball_volume, lens_volume, Point3};
use crate::packing::Packing;
use crate::spatial::CellGrid;
use crate::voronoi::{fcc_cell_volume, VertexFunction, VoronoiBuilder};

const WINDOW_TOL: f64 = 1e-9;
/// Slack on `delta <= bound`.
pub const BOUND_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityReport {
    pub x: Point3,
    pub r: f64,
    /// Volume of `B(x, r)` covered by the packing balls.
    #[serde(rename = "A")]
    pub covered: f64,
    pub delta: f64,
    /// `|Λ(x, r + 1)|`, the balls that can meet `B(x, r)`.
    pub ball_count: usize,
}

impl DensityReport {
    /// `A(x, r) <= |Λ(x, r + 1)| 4π/3`
    pub fn satisfies_ball_count_bound(&self) -> bool {
        self.covered <= self.ball_count as f64 * ball_volume(1.0)
    }
}

/// Measured density against the explicit bound at one radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityBoundCheck {
    pub r: f64,
    pub c1: f64,
    pub bound: f64,
    pub delta: f64,
    pub satisfied: bool,
    /// `r (δ − π/√18)` at this radius.
    pub excess: f64,
    /// Running maximum of `excess` over the radii checked so far.
    pub fitted_c: f64,
    /// Running maximum of `|excess|`; bounded iff the deviation decays like `1/r`.
    pub fitted_c_abs: f64,
    pub report: DensityReport,
}

/// `(π/√18)(1 + 3/r)³ + C1 (r + 1)² / (r³ √32)`
pub fn explicit_density_bound(r: f64, c1: f64) -> f64 {
    fcc_density() * (1.0 + 3.0 / r).powi(3) + c1 * (r + 1.0).powi(2) / (r.powi(3) * fcc_cell_volume())
}

/// Packing plus neighbor grid, for repeated density queries.
pub struct DensityProbe<'a> {
    packing: &'a Packing,
    grid: CellGrid,
}

impl<'a> DensityProbe<'a> {
    pub fn new(packing: &'a Packing) -> Self {
        Self {
            packing,
            grid: packing.grid(),
        }
    }

    fn check_window(&self, x: Point3, r: f64) -> Result<()> {
        if !(r > 0.0 && r.is_finite()) || !x.is_finite() {
            return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
        }
        let margin = self.packing.window.margin(x);
        if r + 1.0 > margin + WINDOW_TOL {
            return Err(Error::WindowOverflow { radius: r, margin });
        }
        Ok(())
    }

    pub fn covered_volume(&self, x: Point3, r: f64) -> Result<f64> {
        self.check_window(x, r)?;
        Ok(self.covered_unchecked(x, r))
    }

    fn covered_unchecked(&self, x: Point3, r: f64) -> f64 {
        // Balls are disjoint, so the union volume is a sum of lenses.
        self.grid
            .within(x, r + 1.0)
            .into_iter()
            .map(|i| lens_volume(self.packing.centers[i].distance(x), 1.0, r))
            .sum()
    }

    pub fn finite_density(&self, x: Point3, r: f64) -> Result<DensityReport> {
        self.check_window(x, r)?;
        let covered = self.covered_unchecked(x, r);
        Ok(DensityReport {
            x,
            r,
            covered,
            delta: covered / ball_volume(r),
            ball_count: self.grid.within(x, r + 1.0).len(),
        })
    }
}

/// `A(x, r, Λ)`: volume of `B(x, r)` covered by the packing balls.
pub fn covered_volume(p: &Packing, x: Point3, r: f64) -> Result<f64> {
    DensityProbe::new(p).covered_volume(x, r)
}

/// `δ(x, r, Λ) = A(x, r, Λ) / vol B(x, r)`.
pub fn finite_density(p: &Packing, x: Point3, r: f64) -> Result<DensityReport> {
    DensityProbe::new(p).finite_density(x, r)
}

/// Measured density against the explicit bound at each radius. Radii are
/// checked in the order given.
pub fn density_bound_check(p: &Packing, x: Point3, radii: &[f64], c1: f64) -> Result<Vec<DensityBoundCheck>> {
    let probe = DensityProbe::new(p);
    for &r in radii {
        probe.check_window(x, r)?;
    }
    let mut fitted_c = f64::NEG_INFINITY;
    let mut fitted_c_abs = 0.0f64;
    radii
        .iter()
        .map(|&r| {
            let report = probe.finite_density(x, r)?;
            let bound = explicit_density_bound(r, c1);
            let excess = r * (report.delta - fcc_density());
            fitted_c = fitted_c.max(excess);
            fitted_c_abs = fitted_c_abs.max(excess.abs());
            Ok(DensityBoundCheck {
                r,
                c1,
                bound,
                delta: report.delta,
                satisfied: report.delta <= bound + BOUND_TOL,
                excess,
                fitted_c,
                fitted_c_abs,
                report,
            })
        })
        .collect()
}

/// Growth of the fitted constant between the first and last row:
/// `fitted_c_abs(last) / fitted_c_abs(first)`.
pub fn fitted_constant_growth(rows: &[DensityBoundCheck]) -> Option<f64> {
    let first = rows.first()?.fitted_c_abs;
    let last = rows.last()?.fitted_c_abs;
    (first > 0.0).then(|| last / first)
}

/// Monte-Carlo estimate of a covered volume with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub estimate: f64,
    pub standard_error: f64,
    pub samples: u64,
}

/// Estimate `A(x, r)` by uniform sampling of `B(x, r)`: the fraction of
/// samples within distance 1 of some center, times `vol B(x, r)`. Samples are
/// drawn in fixed-size chunks with per-chunk seeds, so the result depends
/// only on `seed` and `samples`.
pub fn monte_carlo_covered_volume(p: &Packing, x: Point3, r: f64, samples: u64, seed: u64) -> Result<MonteCarloEstimate> {
    use rand::{Rng, SeedableRng};
    use rayon::prelude::*;
    DensityProbe::new(p).check_window(x, r)?;
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    const CHUNK: u64 = 1 << 16;
    let grid = p.grid();
    let chunks = samples.div_ceil(CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            let n = CHUNK.min(samples - k * CHUNK);
            let mut hits = 0u64;
            let mut drawn = 0;
            while drawn < n {
                let d = Point3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                if d.norm_squared() > 1.0 {
                    continue;
                }
                drawn += 1;
                if grid.any_closer_than(x + d * r, 1.0) {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    let f = hits as f64 / samples as f64;
    let vol = ball_volume(r);
    Ok(MonteCarloEstimate {
        estimate: f * vol,
        standard_error: vol * (f * (1.0 - f) / samples as f64).sqrt(),
        samples,
    })
}

/// The three sides of `√32 |Λ(x,r+1)| <= Σ (a + vol Ω) <= C1 (r+1)² + vol B(x, r+3)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoveringChainAudit {
    pub r: f64,
    pub ball_count: usize,
    pub left: f64,
    pub middle: f64,
    pub right: f64,
    pub value_sum: f64,
    pub volume_sum: f64,
    /// Smallest `C1 >= 0` with `Σ a <= C1 (r+1)²` at this radius.
    pub c1: f64,
    pub left_le_middle: bool,
    pub middle_le_right: bool,
}

/// Audit the covering step of the density bound on `Λ(x, r + 1)`.
pub fn covering_chain_audit(p: &Packing, a: &VertexFunction, x: Point3, r: f64) -> Result<CoveringChainAudit> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
    }
    let builder = VoronoiBuilder::new(p);
    let members = p.grid().within(x, r + 1.0);
    let mut value_sum = 0.0;
    let mut volume_sum = 0.0;
    for &i in &members {
        let cell = builder.cell(i)?;
        value_sum += a.get(i)?;
        volume_sum += cell.volume;
    }
    let n = members.len();
    let left = fcc_cell_volume() * n as f64;
    let middle = value_sum + volume_sum;
    let c1 = (value_sum / (r + 1.0).powi(2)).max(0.0);
    let right = c1 * (r + 1.0).powi(2) + ball_volume(r + 3.0);
    Ok(CoveringChainAudit {
        r,
        ball_count: n,
        left,
        middle,
        right,
        value_sum,
        volume_sum,
        c1,
        left_le_middle: left <= middle + 1e-9 * n.max(1) as f64,
        middle_le_right: middle <= right,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packing::{cubic_packing, fcc_packing, Window};
    use std::f64::consts::PI;

    #[test]
    fn single_ball() {
        let w = Window::origin(2.0).unwrap();
        let p = Packing::new("one", w, vec![Point3::ORIGIN]).unwrap();
        assert!((covered_volume(&p, Point3::ORIGIN, 1.0).unwrap() - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((covered_volume(&p, Point3::ORIGIN, 0.5).unwrap() - PI / 6.0).abs() < 1e-14);
        let d = finite_density(&p, Point3::ORIGIN, 1.0).unwrap();
        assert!((d.delta - 1.0).abs() < 1e-14);
        assert_eq!(d.ball_count, 1);
    }

    #[test]
    fn empty_packing_has_zero_density() {
        let p = Packing::empty("none", Window::origin(5.0).unwrap());
        let d = finite_density(&p, Point3::ORIGIN, 3.0).unwrap();
        assert_eq!(d.delta, 0.0);
        assert_eq!(d.ball_count, 0);
    }

    #[test]
    fn window_overflow() {
        let p = fcc_packing(10.0).unwrap();
        assert!(matches!(
            covered_volume(&p, Point3::ORIGIN, 9.5),
            Err(Error::WindowOverflow { .. })
        ));
        assert!(covered_volume(&p, Point3::ORIGIN, 9.0).is_ok());
    }

    #[test]
    fn bound_shape() {
        assert!(explicit_density_bound(40.0, 0.0) > explicit_density_bound(80.0, 0.0));
        assert!(explicit_density_bound(1e9, 0.0) - fcc_density() < 1e-7);
        assert!(explicit_density_bound(10.0, 1.0) > explicit_density_bound(10.0, 0.0));
    }

    #[test]
    fn fcc_bound_checks() {
        let p = fcc_packing(21.0).unwrap();
        let rows = density_bound_check(&p, Point3::ORIGIN, &[5.0, 10.0, 20.0], 0.0).unwrap();
        for row in &rows {
            assert!(row.satisfied);
            assert!(row.report.satisfies_ball_count_bound());
        }
    }

    #[test]
    fn monotone_and_additive() {
        let p = fcc_packing(12.0).unwrap();
        let probe = DensityProbe::new(&p);
        let mut prev = 0.0;
        for r in [1.0, 2.5, 4.0, 7.0, 11.0] {
            let a = probe.covered_volume(Point3::ORIGIN, r).unwrap();
            assert!(a >= prev);
            prev = a;
        }
        let (even, odd): (Vec<_>, Vec<_>) = p.centers.iter().enumerate().partition(|(i, _)| i % 2 == 0);
        let part = |v: Vec<(usize, &Point3)>| Packing::new("part", p.window, v.into_iter().map(|(_, c)| *c).collect()).unwrap();
        let x = Point3::new(0.3, -0.2, 0.1);
        let whole = covered_volume(&p, x, 8.0).unwrap();
        let split = covered_volume(&part(even), x, 8.0).unwrap() + covered_volume(&part(odd), x, 8.0).unwrap();
        assert!((whole - split).abs() < 1e-9);
    }

    #[test]
    fn monte_carlo_agrees_with_lenses() {
        let p = fcc_packing(8.0).unwrap();
        let x = Point3::new(0.2, 0.1, -0.3);
        let exact = covered_volume(&p, x, 5.0).unwrap();
        let mc = monte_carlo_covered_volume(&p, x, 5.0, 200_000, 3).unwrap();
        assert!((mc.estimate - exact).abs() <= 4.0 * mc.standard_error);
        assert_eq!(mc, monte_carlo_covered_volume(&p, x, 5.0, 200_000, 3).unwrap());
    }

    #[test]
    fn covering_chain_on_lattices() {
        let fcc = fcc_packing(11.0).unwrap();
        let audit = covering_chain_audit(&fcc, &VertexFunction::zero(&fcc), Point3::ORIGIN, 6.0).unwrap();
        assert!((audit.left - audit.middle).abs() < 1e-9 * audit.ball_count as f64);
        assert!(audit.left_le_middle && audit.middle_le_right);

        let cubic = cubic_packing(11.0).unwrap();
        let audit = covering_chain_audit(&cubic, &VertexFunction::zero(&cubic), Point3::ORIGIN, 6.0).unwrap();
        assert!(audit.left < audit.middle);
        assert!(audit.middle_le_right);

        let err = covering_chain_audit(&fcc, &VertexFunction::zero(&fcc), Point3::ORIGIN, 6.5);
        assert!(matches!(err, Err(Error::NotInterior { .. })));
    }
}
