//! Stationary discs: graph solver, jet matching, conformal reparametrization and disc families.

pub mod conformal;
pub mod family;
pub mod graph;
pub mod jet;

pub use graph::{
    adapted_basis, fitted_radius, solve_graph_disc, stationary_residual, AdaptedFrame, GraphDisc,
    SolverConfig, SolverReport,
};
pub use jet::{jet_mismatch, match_jet, match_jet_with_report, plane_angle, JET_TOL};
pub use conformal::{
    conformal_reparametrize, harmonic_dirichlet, ConformalConfig, ConformalReport, Reparametrized,
};
pub use family::{
    disc_family, max_plane_gap, sample_planes, DiscFamily, FamilyConfig, FamilyMember, FamilySummary,
};
