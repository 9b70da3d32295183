//! Upper and lower estimates of the Kobayashi–Royden pseudometric, integrated
//! distances and boundary diagnostics.

pub mod barrier;
pub mod distance;
pub mod domain;
pub mod hyperbolicity;
pub mod lower;
pub mod probes;
pub mod upper;

pub use barrier::{
    barrier_certificate, c_constant, localize, n_constant, BarrierCertificate, BarrierConfig, BarrierFunction, BarrierKind,
    Cutoff, Localization,
};
pub use domain::{strictness_on, DomainSpec, DomainSummary, Shape};
pub use upper::{royden_upper, UpperConfig, UpperEstimate};
pub use lower::{metric_estimate, royden_lower, Constant, ConstantsLedger, LowerEstimate, MetricEstimate};
pub use distance::{build_path_graph, edge_weight, kobayashi_distance, DistanceResult, GraphConfig, PathGraph};
pub use probes::{
    approach_path, boundary_scan, holder_probe, kobayashi_ball_probe, linear_fit, negative_harmonic_schwarz, outward_normal,
    poisson_negative, tangent_to, BallProbeReport, BallViolation, BoundaryScanReport, HolderReport, ScanRow, SchwarzCheck, XiMode,
    LANDING_TOLERANCE,
};
pub use hyperbolicity::{hyperbolicity_diagnostics, DistanceRoute, DepthRow, DiscConstants, HyperbolicityConfig, HyperbolicityReport, Stability};
