//! Monte Carlo simulation of K-tier Poisson networks.
//!
//! A replication samples every BS tier and the users on a torus window,
//! draws block Rayleigh fading, computes the SINR of each user towards the
//! nearest BS of every tier (interference from the same tier only) and then
//! associates users under one of the schemes in [`crate::model::Scheme`].

pub mod assoc;
pub mod geometry;
pub mod metrics;
pub mod snapshot;
pub mod validation;

use thiserror::Error;

pub use assoc::{associate, pairwise_preferences, Assignment, AssociationOptions};
pub use geometry::{sample_ppp, Point, SpatialIndex, Window};
pub use metrics::{
    estimate_coverage, estimate_metrics, map_replications, Estimate, MetricsTable, Replication,
    SimSettings,
};
pub use snapshot::{sinr, Candidates, Fading, Snapshot};
pub use validation::{
    estimate_cell_area_distribution, validate_thinning, CellAreaSample, ThinningReport,
};

/// Tier numbers are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("tier {tier} has no BS in the window")]
    NoBsInTier { tier: usize },
    #[error("user {mu} coincides with BS {bs} of tier {tier}")]
    CoincidentPoints { mu: usize, tier: usize, bs: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
