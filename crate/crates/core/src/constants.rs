//! Named constants of the density framework, each evaluated from its closed
//! form and cross-checked against an independent geometric construction.

use std::f64::consts::{PI, SQRT_2};

use serde::Serialize;

use crate::geom::{halfspace_intersection, solid_angle, HalfSpace, Point3};

/// Truncation parameter; the local-star neighbor radius is `2 * T0`.
pub const T0: f64 = 1.255;

/// Independent value a constant is checked against.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verification {
    pub oracle: String,
    pub value: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedConstant {
    pub name: String,
    pub value: f64,
    pub formula: String,
    pub verification: Option<Verification>,
}

impl NamedConstant {
    fn new(name: &str, value: f64, formula: &str) -> Self {
        Self {
            name: name.into(),
            value,
            formula: formula.into(),
            verification: None,
        }
    }

    fn verified_by(mut self, oracle: &str, value: f64, tolerance: f64) -> Self {
        self.verification = Some(Verification {
            oracle: oracle.into(),
            value,
            tolerance,
        });
        self
    }

    /// Constants without an oracle pass trivially.
    pub fn passes(&self) -> bool {
        self.verification
            .as_ref()
            .is_none_or(|v| (self.value - v.value).abs() <= v.tolerance)
    }
}

/// Vertices of a regular tetrahedron with edge length 2.
pub fn regular_tetrahedron() -> [Point3; 4] {
    let s = 1.0 / SQRT_2;
    [
        Point3::new(1.0, 1.0, 1.0) * s,
        Point3::new(1.0, -1.0, -1.0) * s,
        Point3::new(-1.0, 1.0, -1.0) * s,
        Point3::new(-1.0, -1.0, 1.0) * s,
    ]
}

/// Density of the regular tetrahedron of edge 2 covered by the unit balls at
/// its vertices.
pub fn delta_tet() -> f64 {
    8f64.sqrt() * (2f64.sqrt() / 5.0).atan()
}

/// `delta_tet` rebuilt from the vertex solid angles of the tetrahedron.
pub fn delta_tet_from_solid_angles() -> f64 {
    let t = regular_tetrahedron();
    let covered: f64 = (0..4)
        .map(|i| {
            let others: Vec<Point3> = (0..4).filter(|&j| j != i).map(|j| t[j]).collect();
            solid_angle(t[i], others[0], others[1], others[2]).expect("tetrahedron is not flat") / 3.0
        })
        .sum();
    let edge: f64 = 2.0;
    covered / (edge.powi(3) / (6.0 * SQRT_2))
}

/// Solid angle at a vertex of the regular octahedron, as two triangular cones.
pub fn octahedron_vertex_solid_angle() -> f64 {
    let a = SQRT_2;
    let apex = Point3::new(a, 0.0, 0.0);
    let ring = [
        Point3::new(0.0, a, 0.0),
        Point3::new(0.0, 0.0, a),
        Point3::new(0.0, -a, 0.0),
        Point3::new(0.0, 0.0, -a),
    ];
    let first = solid_angle(apex, ring[0], ring[1], ring[2]).expect("not flat");
    let second = solid_angle(apex, ring[0], ring[2], ring[3]).expect("not flat");
    first + second
}

/// Density of the regular octahedron of edge 2 covered by the unit balls at
/// its six vertices.
pub fn delta_oct() -> f64 {
    let volume = 8.0 * SQRT_2 / 3.0;
    6.0 * octahedron_vertex_solid_angle() / 3.0 / volume
}

/// Spherical excess of the octahedron's vertex cone (four dihedral angles of
/// `arccos(-1/3)`), converted to a density.
fn delta_oct_by_spherical_excess() -> f64 {
    let omega = 4.0 * (-1.0f64 / 3.0).acos() - 2.0 * PI;
    6.0 * omega / 3.0 / (8.0 * SQRT_2 / 3.0)
}

/// One "point", the unit of the local score.
pub fn pt() -> f64 {
    -PI / 3.0 + SQRT_2 * delta_tet()
}

/// Density of the face-centered cubic packing.
pub fn fcc_density() -> f64 {
    PI / 18f64.sqrt()
}

/// Volume of the regular dodecahedron with inradius 1, closed form.
pub fn dodecahedron_volume() -> f64 {
    let s5 = 5f64.sqrt();
    let edge = 2.0 / ((25.0 + 11.0 * s5) / 10.0).sqrt();
    (15.0 + 7.0 * s5) / 4.0 * edge.powi(3)
}

/// Inscribed-ball volume over the volume of the circumscribing regular
/// dodecahedron.
pub fn dodecahedral_bound() -> f64 {
    4.0 * PI / 3.0 / dodecahedron_volume()
}

/// Face normals of the regular dodecahedron (icosahedron vertex directions).
pub fn dodecahedron_face_normals() -> Vec<Point3> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut out = Vec::with_capacity(12);
    for a in [-1.0, 1.0] {
        for b in [-phi, phi] {
            out.push(Point3::new(0.0, a, b));
            out.push(Point3::new(a, b, 0.0));
            out.push(Point3::new(b, 0.0, a));
        }
    }
    out.into_iter().map(|p| p.normalized().unwrap()).collect()
}

fn dodecahedral_bound_from_hull() -> f64 {
    let hs: Vec<HalfSpace> = dodecahedron_face_normals()
        .into_iter()
        .map(|n| HalfSpace::new(n, 1.0).unwrap())
        .collect();
    let cell = halfspace_intersection(&hs).expect("dodecahedron is bounded");
    4.0 * PI / 3.0 / cell.volume()
}

/// The 12 nearest neighbors of the origin in the fcc packing.
pub fn cuboctahedron() -> Vec<Point3> {
    let s = SQRT_2;
    let mut out = Vec::with_capacity(12);
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

/// Volume of the fcc Voronoi cell built from its 12 bisectors.
pub fn rhombic_dodecahedron_volume() -> f64 {
    let hs: Vec<HalfSpace> = cuboctahedron()
        .into_iter()
        .map(|u| HalfSpace::bisector(Point3::ORIGIN, u).unwrap())
        .collect();
    halfspace_intersection(&hs)
        .expect("rhombic dodecahedron is bounded")
        .volume()
}

/// `-8 pt / (4 δ_oct) + 4π / (3 δ_oct)`, which should equal √32.
pub fn cell_volume_identity() -> f64 {
    let d = delta_oct();
    -8.0 * pt() / (4.0 * d) + 4.0 * PI / (3.0 * d)
}

/// Every named constant with its oracle attached.
pub fn all_constants() -> Vec<NamedConstant> {
    let tet_sa = delta_tet_from_solid_angles();
    vec![
        NamedConstant::new("delta_tet", delta_tet(), "sqrt(8)*atan(sqrt(2)/5)").verified_by(
            "vertex solid angles of the edge-2 regular tetrahedron",
            tet_sa,
            1e-9,
        ),
        NamedConstant::new(
            "delta_oct",
            delta_oct(),
            "(6*Omega_vertex/3)/(8*sqrt(2)/3), Omega from triple-product solid angles",
        )
        .verified_by(
            "spherical excess 4*acos(-1/3)-2*pi of the vertex cone",
            delta_oct_by_spherical_excess(),
            1e-9,
        ),
        NamedConstant::new("pt", pt(), "-pi/3 + sqrt(2)*delta_tet").verified_by(
            "-pi/3 + sqrt(2)*delta_tet from solid angles",
            -PI / 3.0 + SQRT_2 * tet_sa,
            1e-9,
        ),
        NamedConstant::new("eight_pt", 8.0 * pt(), "8*pt").verified_by(
            "8*(-pi/3 + sqrt(2)*delta_tet from solid angles)",
            8.0 * (-PI / 3.0 + SQRT_2 * tet_sa),
            1e-8,
        ),
        NamedConstant::new("fcc_density", fcc_density(), "pi/sqrt(18)").verified_by(
            "(4*pi/3) / volume of the fcc Voronoi cell from half-space intersection",
            4.0 * PI / 3.0 / rhombic_dodecahedron_volume(),
            1e-9,
        ),
        NamedConstant::new(
            "dodecahedral_bound",
            dodecahedral_bound(),
            "(4*pi/3) / volume of the regular dodecahedron with inradius 1",
        )
        .verified_by(
            "(4*pi/3) / hull volume of 12 tangent half-spaces",
            dodecahedral_bound_from_hull(),
            1e-9,
        ),
        NamedConstant::new(
            "rogers_bound",
            delta_tet(),
            "simplex bound sqrt(8)*atan(sqrt(2)/5)",
        )
        .verified_by(
            "vertex solid angles of the edge-2 regular tetrahedron",
            tet_sa,
            1e-9,
        ),
        NamedConstant::new(
            "cell_volume_identity",
            cell_volume_identity(),
            "-8*pt/(4*delta_oct) + 4*pi/(3*delta_oct)",
        )
        .verified_by("sqrt(32)", 32f64.sqrt(), 1e-9),
        NamedConstant::new("t0", T0, "1.255 (truncation parameter)"),
        NamedConstant::new("two_t0", 2.0 * T0, "2*t0"),
    ]
}
