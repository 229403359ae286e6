//! Geometry primitives: points, balls, half-spaces, convex polytopes.
//!
//! Unit of length is the ball radius. Polytopes are built by clipping a large
//! bounding box with half-spaces one at a time; faces are kept as ordered
//! vertex loops so volumes come from a fan of tetrahedra.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vertex merge tolerance.
pub const MERGE_TOL: f64 = 1e-9;
/// Constraint satisfaction tolerance for polytope vertices.
pub const CONSTRAINT_TOL: f64 = 1e-9;
/// Half-width of the bounding box used to detect unbounded intersections.
pub const BOUNDING_HALF_WIDTH: f64 = 100.0;
/// Smallest accepted |triple product| for a solid angle.
pub const DEGENERATE_TRIPLE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    #[inline]
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn dot(self, o: Point3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Point3) -> Point3 {
        Point3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    #[inline]
    pub fn distance(self, o: Point3) -> f64 {
        (self - o).norm()
    }

    #[inline]
    pub fn distance_squared(self, o: Point3) -> f64 {
        (self - o).norm_squared()
    }

    /// Unit vector in the same direction, `None` for the zero vector.
    pub fn normalized(self) -> Option<Point3> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self / n)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Some unit vector orthogonal to `self` (assumed nonzero).
    pub fn any_orthogonal(self) -> Point3 {
        let a = if self.x.abs() < 0.9 {
            Point3::new(1.0, 0.0, 0.0)
        } else {
            Point3::new(0.0, 1.0, 0.0)
        };
        self.cross(a).normalized().expect("nonzero input")
    }
}

impl From<[f64; 3]> for Point3 {
    fn from(a: [f64; 3]) -> Self {
        Point3::new(a[0], a[1], a[2])
    }
}

impl From<Point3> for [f64; 3] {
    fn from(p: Point3) -> Self {
        p.to_array()
    }
}

impl fmt::Display for Point3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

impl Add for Point3 {
    type Output = Point3;
    #[inline]
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Point3 {
    #[inline]
    fn add_assign(&mut self, o: Point3) {
        *self = *self + o;
    }
}

impl Sub for Point3 {
    type Output = Point3;
    #[inline]
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Point3 {
    type Output = Point3;
    #[inline]
    fn neg(self) -> Point3 {
        Point3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    #[inline]
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Point3 {
    type Output = Point3;
    #[inline]
    fn div(self, s: f64) -> Point3 {
        Point3::new(self.x / s, self.y / s, self.z / s)
    }
}

/// Mean of a nonempty point set.
pub fn centroid(points: &[Point3]) -> Point3 {
    let sum = points
        .iter()
        .fold(Point3::ORIGIN, |acc, &p| acc + p);
    sum / points.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Point3,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point3, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || !center.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "ball radius must be positive and finite, got {radius}"
            )));
        }
        Ok(Self { center, radius })
    }

    pub fn volume(&self) -> f64 {
        ball_volume(self.radius)
    }

    pub fn contains(&self, p: Point3) -> bool {
        self.center.distance(p) <= self.radius
    }
}

#[inline]
pub fn ball_volume(radius: f64) -> f64 {
    4.0 / 3.0 * PI * radius * radius * radius
}

/// The closed half-space `{p : normal·p <= offset}` with a unit normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace {
    pub normal: Point3,
    pub offset: f64,
}

impl HalfSpace {
    /// Normalizes `normal` and rescales `offset` to match.
    pub fn new(normal: Point3, offset: f64) -> Result<Self> {
        let len = normal.norm();
        if !(len > 0.0 && len.is_finite()) || !offset.is_finite() {
            return Err(Error::Degenerate(
                "half-space normal must be nonzero and finite".into(),
            ));
        }
        Ok(Self {
            normal: normal / len,
            offset: offset / len,
        })
    }

    /// Points at least as close to `site` as to `other`.
    pub fn bisector(site: Point3, other: Point3) -> Result<Self> {
        let d = other - site;
        let mid = (site + other) * 0.5;
        HalfSpace::new(d, d.dot(mid))
    }

    /// Positive outside, negative inside.
    #[inline]
    pub fn signed_distance(&self, p: Point3) -> f64 {
        self.normal.dot(p) - self.offset
    }

    #[inline]
    pub fn contains(&self, p: Point3, tol: f64) -> bool {
        self.signed_distance(p) <= tol
    }

    pub fn translated(&self, by: Point3) -> HalfSpace {
        HalfSpace {
            normal: self.normal,
            offset: self.offset + self.normal.dot(by),
        }
    }
}

/// One face of a [`ConvexPolytope`]: vertex indices ordered counter-clockwise
/// seen from outside, and the generating half-space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolytopeFace {
    pub halfspace: usize,
    pub vertices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexPolytope {
    halfspaces: Vec<HalfSpace>,
    vertices: Vec<Point3>,
    faces: Vec<PolytopeFace>,
    volume: f64,
}

impl ConvexPolytope {
    pub fn halfspaces(&self) -> &[HalfSpace] {
        &self.halfspaces
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    /// Faces with nonzero area; redundant half-spaces have none.
    pub fn faces(&self) -> &[PolytopeFace] {
        &self.faces
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn contains(&self, p: Point3, tol: f64) -> bool {
        self.halfspaces.iter().all(|h| h.contains(p, tol))
    }

    pub fn translated(&self, by: Point3) -> ConvexPolytope {
        ConvexPolytope {
            halfspaces: self.halfspaces.iter().map(|h| h.translated(by)).collect(),
            vertices: self.vertices.iter().map(|&v| v + by).collect(),
            faces: self.faces.clone(),
            volume: self.volume,
        }
    }

    /// Axis-aligned bounding box of the vertices.
    pub fn bounds(&self) -> (Point3, Point3) {
        let mut lo = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut hi = -lo;
        for v in &self.vertices {
            lo = Point3::new(lo.x.min(v.x), lo.y.min(v.y), lo.z.min(v.z));
            hi = Point3::new(hi.x.max(v.x), hi.y.max(v.y), hi.z.max(v.z));
        }
        (lo, hi)
    }
}

/// Volume of the intersection of two balls of radii `r1`, `r2` whose centers
/// are `d` apart.
pub fn lens_volume(d: f64, r1: f64, r2: f64) -> f64 {
    let d = d.abs();
    if d >= r1 + r2 {
        return 0.0;
    }
    if d <= (r1 - r2).abs() {
        return ball_volume(r1.min(r2));
    }
    let s = r1 + r2 - d;
    let diff = r1 - r2;
    PI * s * s * (d * d + 2.0 * d * (r1 + r2) - 3.0 * diff * diff) / (12.0 * d)
}

/// Solid angle subtended at `apex` by the triangle `abc`, in `[0, 2π]`.
pub fn solid_angle(apex: Point3, a: Point3, b: Point3, c: Point3) -> Result<f64> {
    let (a, b, c) = (a - apex, b - apex, c - apex);
    let triple = a.dot(b.cross(c));
    if triple.abs() < DEGENERATE_TRIPLE {
        return Err(Error::Degenerate(
            "solid angle of a zero-measure cone (apex coplanar with triangle)".into(),
        ));
    }
    let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
    let denom = la * lb * lc + a.dot(b) * lc + a.dot(c) * lb + b.dot(c) * la;
    Ok(2.0 * triple.abs().atan2(denom))
}

/// Max distance from `center` to a vertex of `p`.
pub fn polytope_circumradius(p: &ConvexPolytope, center: Point3) -> f64 {
    p.vertices
        .iter()
        .map(|v| v.distance(center))
        .fold(0.0, f64::max)
}

/// Where a face came from while clipping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FaceSource {
    Bounding,
    Input(usize),
}

#[derive(Debug, Clone)]
struct LoopFace {
    plane: HalfSpace,
    source: FaceSource,
    points: Vec<Point3>,
}

/// Convex polyhedron as a list of CCW face loops; the working representation
/// for half-space clipping.
#[derive(Debug, Clone)]
pub(crate) struct Clipper {
    faces: Vec<LoopFace>,
}

impl Clipper {
    /// Axis-aligned cube.
    pub(crate) fn cube(center: Point3, half_width: f64) -> Self {
        let h = half_width;
        let corner = |i: usize| {
            center
                + Point3::new(
                    if i & 1 == 0 { -h } else { h },
                    if i & 2 == 0 { -h } else { h },
                    if i & 4 == 0 { -h } else { h },
                )
        };
        // CCW seen from outside.
        let loops: [([usize; 4], Point3); 6] = [
            ([0, 2, 6, 4], Point3::new(-1.0, 0.0, 0.0)),
            ([1, 5, 7, 3], Point3::new(1.0, 0.0, 0.0)),
            ([0, 4, 5, 1], Point3::new(0.0, -1.0, 0.0)),
            ([2, 3, 7, 6], Point3::new(0.0, 1.0, 0.0)),
            ([0, 1, 3, 2], Point3::new(0.0, 0.0, -1.0)),
            ([4, 6, 7, 5], Point3::new(0.0, 0.0, 1.0)),
        ];
        let faces = loops
            .iter()
            .map(|(idx, n)| LoopFace {
                plane: HalfSpace {
                    normal: *n,
                    offset: n.dot(center) + h,
                },
                source: FaceSource::Bounding,
                points: idx.iter().map(|&i| corner(i)).collect(),
            })
            .collect();
        Self { faces }
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    fn touches_bounding_box(&self) -> bool {
        self.faces.iter().any(|f| f.source == FaceSource::Bounding)
    }

    pub(crate) fn clip(&mut self, h: &HalfSpace) {
        self.clip_tagged(h, usize::MAX)
    }

    fn clip_tagged(&mut self, h: &HalfSpace, tag: usize) {
        if self.faces.is_empty() {
            return;
        }
        let eps = CONSTRAINT_TOL;
        let (mut smin, mut smax) = (f64::INFINITY, f64::NEG_INFINITY);
        for f in &self.faces {
            for &p in &f.points {
                let s = h.signed_distance(p);
                smin = smin.min(s);
                smax = smax.max(s);
            }
        }
        if smax <= eps {
            return;
        }
        if smin >= -eps {
            self.faces.clear();
            return;
        }

        let mut cut: Vec<Point3> = Vec::new();
        let mut kept = Vec::with_capacity(self.faces.len() + 1);
        for face in self.faces.drain(..) {
            let n = face.points.len();
            let dist: Vec<f64> = face.points.iter().map(|&p| h.signed_distance(p)).collect();
            let mut out = Vec::with_capacity(n + 1);
            for i in 0..n {
                let j = (i + 1) % n;
                let (p, q) = (face.points[i], face.points[j]);
                let (sp, sq) = (dist[i], dist[j]);
                if sp <= eps {
                    out.push(p);
                    if sp >= -eps {
                        cut.push(p);
                    }
                }
                if (sp < -eps && sq > eps) || (sp > eps && sq < -eps) {
                    let t = sp / (sp - sq);
                    let x = p + (q - p) * t;
                    out.push(x);
                    cut.push(x);
                }
            }
            dedup_loop(&mut out);
            if out.len() >= 3 {
                kept.push(LoopFace {
                    plane: face.plane,
                    source: face.source,
                    points: out,
                });
            }
        }

        let cap = order_on_plane(dedup_points(cut), h.normal);
        if cap.len() >= 3 {
            kept.push(LoopFace {
                plane: *h,
                source: if tag == usize::MAX {
                    FaceSource::Bounding
                } else {
                    FaceSource::Input(tag)
                },
                points: cap,
            });
        }
        if kept.len() < 4 {
            kept.clear();
        }
        self.faces = kept;
    }

    /// Distinct vertices of the polyhedron.
    pub(crate) fn vertices(&self) -> Vec<Point3> {
        dedup_points(
            self.faces
                .iter()
                .flat_map(|f| f.points.iter().copied())
                .collect(),
        )
    }

    fn volume(&self) -> f64 {
        if self.faces.is_empty() {
            return 0.0;
        }
        let c = centroid(&self.vertices());
        let mut vol = 0.0;
        for f in &self.faces {
            let fc = centroid(&f.points) - c;
            let n = f.points.len();
            for i in 0..n {
                let a = f.points[i] - c;
                let b = f.points[(i + 1) % n] - c;
                vol += a.dot(b.cross(fc));
            }
        }
        vol / 6.0
    }
}

fn dedup_loop(points: &mut Vec<Point3>) {
    points.dedup_by(|a, b| a.distance(*b) <= MERGE_TOL);
    while points.len() > 1 && points[0].distance(*points.last().unwrap()) <= MERGE_TOL {
        points.pop();
    }
}

fn dedup_points(points: Vec<Point3>) -> Vec<Point3> {
    let mut out: Vec<Point3> = Vec::with_capacity(points.len());
    for p in points {
        if !out.iter().any(|q| q.distance(p) <= MERGE_TOL) {
            out.push(p);
        }
    }
    out
}

/// Sort coplanar points counter-clockwise around `normal`.
fn order_on_plane(mut points: Vec<Point3>, normal: Point3) -> Vec<Point3> {
    if points.len() < 3 {
        return points;
    }
    let c = centroid(&points);
    let u = normal.any_orthogonal();
    let v = normal.cross(u);
    points.sort_by(|a, b| {
        let (da, db) = (*a - c, *b - c);
        let ta = da.dot(v).atan2(da.dot(u));
        let tb = db.dot(v).atan2(db.dot(u));
        ta.total_cmp(&tb)
    });
    points
}

/// Intersect a list of half-spaces into a bounded convex polytope.
pub fn halfspace_intersection(halfspaces: &[HalfSpace]) -> Result<ConvexPolytope> {
    let mut clipper = Clipper::cube(Point3::ORIGIN, BOUNDING_HALF_WIDTH);
    for (i, h) in halfspaces.iter().enumerate() {
        if !(h.normal.is_finite() && h.offset.is_finite())
            || (h.normal.norm() - 1.0).abs() > 1e-12
        {
            return Err(Error::Degenerate(format!(
                "half-space {i} does not have a finite unit normal"
            )));
        }
        clipper.clip_tagged(h, i);
        if clipper.is_empty() {
            return Err(Error::EmptyInterior);
        }
    }
    if clipper.touches_bounding_box() {
        return Err(Error::Unbounded);
    }
    let volume = clipper.volume();
    if volume.is_nan() || volume <= 1e-12 {
        return Err(Error::EmptyInterior);
    }

    let vertices = clipper.vertices();
    let index_of = |p: Point3| {
        vertices
            .iter()
            .position(|q| q.distance(p) <= MERGE_TOL)
            .expect("face point is a polytope vertex")
    };
    let faces = clipper
        .faces
        .iter()
        .map(|f| PolytopeFace {
            halfspace: match f.source {
                FaceSource::Input(i) => i,
                FaceSource::Bounding => unreachable!("bounding faces rejected above"),
            },
            vertices: f.points.iter().map(|&p| index_of(p)).collect(),
        })
        .collect();

    Ok(ConvexPolytope {
        halfspaces: halfspaces.to_vec(),
        vertices,
        faces,
        volume,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axis_cube(h: f64) -> Vec<HalfSpace> {
        let axes = [
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, 0.0, 1.0),
        ];
        axes.iter()
            .flat_map(|&a| [HalfSpace::new(a, h).unwrap(), HalfSpace::new(-a, h).unwrap()])
            .collect()
    }

    fn fcc_neighbors() -> Vec<Point3> {
        let s = std::f64::consts::SQRT_2;
        let mut out = Vec::new();
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            for a in [-s, s] {
                for b in [-s, s] {
                    let mut c = [0.0; 3];
                    c[i] = a;
                    c[j] = b;
                    out.push(Point3::from(c));
                }
            }
        }
        out
    }

    #[test]
    fn lens_limits() {
        assert_eq!(lens_volume(3.0, 1.0, 1.0), 0.0);
        assert!((lens_volume(0.0, 1.0, 2.0) - 4.0 * PI / 3.0).abs() < 1e-15);
        assert!((lens_volume(1.0, 1.0, 2.0) - 4.0 * PI / 3.0).abs() < 1e-15);
        assert_eq!(lens_volume(2.0, 1.0, 1.0), 0.0);
        assert!((lens_volume(1.0, 1.0, 1.0) - 5.0 * PI / 12.0).abs() < 1e-14);
    }

    #[test]
    fn octant_solid_angle() {
        let o = Point3::ORIGIN;
        let w = solid_angle(
            o,
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, 0.0, 1.0),
        )
        .unwrap();
        assert!((w - PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn coplanar_solid_angle_rejected() {
        let o = Point3::ORIGIN;
        let r = solid_angle(
            o,
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(1.0, 1.0, 0.0),
        );
        assert!(matches!(r, Err(Error::Degenerate(_))));
    }

    #[test]
    fn cube_volume() {
        let p = halfspace_intersection(&axis_cube(1.0)).unwrap();
        assert!((p.volume() - 8.0).abs() < 1e-12);
        assert_eq!(p.vertices().len(), 8);
        assert_eq!(p.face_count(), 6);
        let r = polytope_circumradius(&p, Point3::ORIGIN);
        assert!((r - 3f64.sqrt()).abs() < 1e-12);
        let half = halfspace_intersection(&axis_cube(0.5)).unwrap();
        assert!((polytope_circumradius(&half, Point3::ORIGIN) - 3f64.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn rhombic_dodecahedron() {
        let hs: Vec<_> = fcc_neighbors()
            .into_iter()
            .map(|u| HalfSpace::bisector(Point3::ORIGIN, u).unwrap())
            .collect();
        let p = halfspace_intersection(&hs).unwrap();
        assert!((p.volume() - 32f64.sqrt()).abs() < 1e-9, "{}", p.volume());
        assert_eq!(p.vertices().len(), 14);
        assert_eq!(p.face_count(), 12);
        let r = polytope_circumradius(&p, Point3::ORIGIN);
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
        for v in p.vertices() {
            assert!(p.contains(*v, CONSTRAINT_TOL));
        }
    }

    #[test]
    fn redundant_halfspace_is_ignored() {
        let tet = [
            Point3::new(1.0, 1.0, 1.0),
            Point3::new(1.0, -1.0, -1.0),
            Point3::new(-1.0, 1.0, -1.0),
            Point3::new(-1.0, -1.0, 1.0),
        ];
        let mut hs: Vec<_> = tet
            .iter()
            .map(|&n| HalfSpace::new(-n, 1.0).unwrap())
            .collect();
        let base = halfspace_intersection(&hs).unwrap();
        hs.push(HalfSpace::new(Point3::new(0.0, 0.0, 1.0), 50.0).unwrap());
        let more = halfspace_intersection(&hs).unwrap();
        assert!((base.volume() - more.volume()).abs() < 1e-12);
        assert_eq!(base.vertices().len(), more.vertices().len());
        // duplicate of an existing face plane
        hs.push(hs[0]);
        let dup = halfspace_intersection(&hs).unwrap();
        assert!((base.volume() - dup.volume()).abs() < 1e-12);
        assert_eq!(dup.face_count(), 4);
    }

    #[test]
    fn unbounded_and_empty_are_errors() {
        let slab = [
            HalfSpace::new(Point3::new(0.0, 0.0, 1.0), 1.0).unwrap(),
            HalfSpace::new(Point3::new(0.0, 0.0, -1.0), 1.0).unwrap(),
        ];
        assert_eq!(halfspace_intersection(&slab), Err(Error::Unbounded));
        let mut empty = axis_cube(1.0);
        empty.push(HalfSpace::new(Point3::new(1.0, 0.0, 0.0), -2.0).unwrap());
        assert_eq!(halfspace_intersection(&empty), Err(Error::EmptyInterior));
        let mut flat = axis_cube(1.0);
        flat.push(HalfSpace::new(Point3::new(1.0, 0.0, 0.0), -1.0).unwrap());
        assert_eq!(halfspace_intersection(&flat), Err(Error::EmptyInterior));
    }

    #[test]
    fn translated_halfspaces_agree() {
        let shift = Point3::new(3.0, -2.0, 0.5);
        let hs: Vec<_> = axis_cube(1.0).iter().map(|h| h.translated(shift)).collect();
        let p = halfspace_intersection(&hs).unwrap();
        assert!((p.volume() - 8.0).abs() < 1e-12);
        assert!((polytope_circumradius(&p, shift) - 3f64.sqrt()).abs() < 1e-12);
    }
}

#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    proptest! {
        #[test]
        fn lens_is_symmetric_and_bounded(d in 0.0f64..6.0, r1 in 0.1f64..3.0, r2 in 0.1f64..3.0) {
            let v = lens_volume(d, r1, r2);
            prop_assert!((v - lens_volume(d, r2, r1)).abs() <= 1e-12 * (1.0 + v));
            prop_assert!(v >= -1e-12);
            prop_assert!(v <= ball_volume(r1.min(r2)) * (1.0 + 1e-12));
        }

        #[test]
        fn lens_shrinks_with_distance(d in 0.0f64..5.0, step in 0.0f64..1.0, r1 in 0.1f64..3.0, r2 in 0.1f64..3.0) {
            prop_assert!(lens_volume(d + step, r1, r2) <= lens_volume(d, r1, r2) + 1e-12);
        }

        #[test]
        fn solid_angle_ignores_vertex_order(
            a in prop::array::uniform3(-2.0f64..2.0),
            b in prop::array::uniform3(-2.0f64..2.0),
            c in prop::array::uniform3(-2.0f64..2.0),
        ) {
            let (a, b, c) = (Point3::from(a), Point3::from(b), Point3::from(c));
            prop_assume!(a.dot(b.cross(c)).abs() > 1e-3);
            let w = solid_angle(Point3::ORIGIN, a, b, c).unwrap();
            prop_assert!((w - solid_angle(Point3::ORIGIN, b, a, c).unwrap()).abs() < 1e-12);
            prop_assert!((w - solid_angle(Point3::ORIGIN, c, a, b).unwrap()).abs() < 1e-12);
            prop_assert!(w > 0.0 && w < 2.0 * PI);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn polytope_volume_matches_monte_carlo(seed in any::<u64>(), extra in 4usize..14) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut hs = Vec::new();
            for axis in [Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0), Point3::new(0.0, 0.0, 1.0)] {
                hs.push(HalfSpace::new(axis, 2.0).unwrap());
                hs.push(HalfSpace::new(-axis, 2.0).unwrap());
            }
            for _ in 0..extra {
                let n = Point3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                if let Some(n) = n.normalized() {
                    hs.push(HalfSpace::new(n, rng.gen_range(0.5..2.0)).unwrap());
                }
            }
            let p = halfspace_intersection(&hs).unwrap();
            for v in p.vertices() {
                prop_assert!(p.contains(*v, 1e-9));
            }
            let samples = 40_000;
            let hits = (0..samples)
                .filter(|_| {
                    let q = Point3::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
                    hs.iter().all(|h| h.contains(q, 0.0))
                })
                .count() as f64;
            let frac = hits / samples as f64;
            let se = (frac * (1.0 - frac) / samples as f64).sqrt().max(1e-4);
            prop_assert!((p.volume() / 64.0 - frac).abs() <= 5.0 * se, "{} vs {}", p.volume() / 64.0, frac);
        }
    }
}
