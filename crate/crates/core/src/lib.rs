//! Downlink coverage of a single LEO shell: stochastic geometry, analytic
//! coverage expressions and bounds, and a Monte Carlo simulator.
//!
//! Distances are kilometres, angles radians and SIR thresholds linear unless
//! a name says otherwise.

pub mod analytic;
pub mod bounds;
pub mod channel;
pub mod curve;
pub mod error;
pub mod geometry;
pub mod montecarlo;
pub mod parallel;
pub mod quadrature;
pub mod special;
pub mod units;

pub use analytic::{coverage_exact, laplace, laplace_derivatives, laplace_eta, AnalyticConfig};
pub use bounds::{
    coverage_bound, coverage_closed_form, coverage_lower_closed, coverage_lower_homogeneous, optimal_density,
    rho_homogeneous, BoundParams, StepModelConfig,
};
pub use channel::{nakagami_ccdf, BeamGainModel, ChannelModel, LosModel};
pub use curve::{CoverageCurve, MethodTag, SirGrid};
pub use error::{Error, Result};
pub use geometry::{cap_area, max_slant_range, ShellGeometry, EARTH_RADIUS_KM};
pub use montecarlo::{
    estimate_coverage, simulate, Association, ConstellationSpec, McEstimate, MonteCarloConfig, Snapshot, WalkerStar,
};
pub use quadrature::Tolerance;
