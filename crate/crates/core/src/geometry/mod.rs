//! Domains, model problems and conforming triangle meshes.

pub mod mesh;
pub mod problem;
mod refine;

pub use mesh::{build_initial_mesh, BoundarySegment, Edge, TriMesh, P_MAX};
pub use problem::{polar_angle, Geometry, ProblemSpec, Solution};
