//! Desk-scale toolkit for the density framework behind the fcc optimality
//! argument: finite packing densities, Voronoi cells and their volumes,
//! vertex-function bounds, kissing-star plane graphs, and LP-relaxation
//! branch-and-bound certificates.

pub mod constants;
pub mod density;
pub mod error;
pub mod geom;
pub mod lp;
pub mod packing;
pub mod spatial;
pub mod stargraph;
pub mod verify;
pub mod voronoi;

pub use error::{Error, Result};
pub use geom::{Ball, ConvexPolytope, HalfSpace, Point3};
pub use packing::{Packing, SaturationReport, Window};
