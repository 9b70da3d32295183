//! Calculus on the discretized unit disc.

pub mod grid;
pub mod map;
pub mod potential;

pub use grid::{DiscGrid, Interpolator, Partials, C64};
pub use map::{
    area, compose, conformality_defect, conformality_report, energy, first_fundamental_form,
    harmonic_residual, harmonic_residual_sup, laplacian_of_composition, subharmonicity_check,
    ConformalityReport, DiscMap, Jet1, SubharmonicityReport,
};
pub use potential::{log_potential_decompose, poincare_radius, LogPotential};
