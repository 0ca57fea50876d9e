//! Doubly-adaptive finite element refinement.
//!
//! The classic solve, estimate, mark, refine loop for the Poisson problem
//! on triangle meshes, with a decision step in front of marking: the bulk
//! parameter `theta` (and the h/p split parameter `rho`) is chosen every
//! iteration by a Gaussian policy trained with PPO.
//!
//! Numerical code is generic over [`Real`]; the aliases at the crate root fix
//! the scalar to `f64`, which is what the environment and CLI use.

pub mod env;
pub mod error;
pub mod estimate;
pub mod fem;
pub mod geometry;
pub mod marking;
pub mod policy;
pub mod real;

pub use error::{Error, Result};
pub use real::Real;

pub type Mesh = geometry::TriMesh<f64>;
pub type Problem = geometry::ProblemSpec<f64>;
pub type Solution = fem::DiscreteSolution<f64>;
pub type ErrorField = estimate::LocalErrorField<f64>;
pub type Stats = estimate::ErrorStats<f64>;
pub type Policy = policy::PolicyParameters<f64>;
