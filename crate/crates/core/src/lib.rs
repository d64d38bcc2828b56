//! PGL(2,q) as the stabilizer of the conic x0*x2 = x1^2 in PG(2,q).
//!
//! Involutions of the conic stabilizer are perspectivities and correspond to
//! the points off the conic. This crate classifies triangles of such
//! involutions, builds the rank-3 coset geometries they generate and checks
//! whether those geometries are regular hypertopes.

pub mod gf;
pub mod plane;
pub mod perspectivity;
pub mod grp;
pub mod geom;
pub mod triangles;
pub mod corr;
