//! Load-aware cell association in K-tier heterogeneous cellular networks.
//!
//! Two independent routes to the same quantities:
//!
//! * [`analytic`] evaluates the stochastic-geometry formulas (SINR coverage,
//!   load and ratio distributions, the tier-association fixed point and the
//!   average ergodic rate) by numerical quadrature and series summation.
//! * [`sim`] samples Poisson networks with Rayleigh fading, runs the
//!   load-aware association rule through best-response dynamics and measures
//!   the same quantities empirically, together with the classical baselines.
//!
//! [`experiments`] wires both into parameter sweeps and CSV output; [`model`]
//! holds the shared configuration types.

pub mod analytic;
pub mod experiments;
pub mod model;
pub mod sim;
pub mod stats;

pub use model::{
    dbm_to_watts, validate, AssociationScheme, NetworkModel, RateMetric, Scheme, TierParams,
    ValidatedModel,
};
