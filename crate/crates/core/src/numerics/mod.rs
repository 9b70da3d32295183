//! Small numerical kernels shared by the solvers.

pub mod gmres;
pub mod halton;

pub use gmres::{gmres, GmresOutcome};
pub use halton::{gaussian_vectors, sphere_points, Halton};
