//! Analytic performance model of the load-aware association rule.
//!
//! The pipeline, bottom-up:
//!
//! 1. [`sinr`]: per-tier SINR law of the nearest BS (coverage CCDF, PDF, and
//!    the PDF of ln(1+SINR)).
//! 2. [`load`]: negative-binomial load of a BS serving a thinned user PPP,
//!    and the CDF of the load ratio (N_k+1)/(N_j+1).
//! 3. [`ratio`]: distribution of ln(1+SINR_k)/ln(1+SINR_j).
//! 4. [`fixed_point`]: tier association probabilities T_k, which enter the
//!    load distributions and are therefore solved self-consistently.
//! 5. [`rate`]: conditional and average ergodic rates.

pub mod fixed_point;
pub mod load;
pub mod quad;
pub mod rate;
pub mod ratio;
pub mod sinr;

use thiserror::Error;

pub use fixed_point::{
    solve_tier_probabilities, FixedPointSettings, Normalization, PairEvaluator, TierProbabilities,
};
pub use load::{load_cdf, load_pmf, load_ratio_cdf, LoadDistribution};
pub use rate::{
    average_ergodic_rate, average_ergodic_rate_with, ergodic_rate_conditional,
    ergodic_rate_equal_share, per_tier_rates, RateReport,
};
pub use ratio::{sinr_ratio_ccdf, sinr_ratio_pdf, RatioTable};
pub use sinr::{coverage_probability, lnsinr_pdf, sinr_pdf, varphi, varphi_prime, SinrLaw};

/// Tolerances for every integral and series in this module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    /// Infinite sums stop once the remaining probability mass is below this.
    pub series_tail_tol: f64,
}

impl Default for QuadSettings {
    fn default() -> Self {
        QuadSettings {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            max_subdivisions: 2000,
            series_tail_tol: 1e-10,
        }
    }
}

impl QuadSettings {
    pub fn check(&self) -> Result<(), AnalyticError> {
        let ok = self.rel_tol > 0.0
            && self.abs_tol > 0.0
            && self.series_tail_tol > 0.0
            && self.max_subdivisions >= 10;
        if ok {
            Ok(())
        } else {
            Err(AnalyticError::InvalidArgument(format!(
                "quadrature settings out of range: {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticError {
    #[error("quadrature did not reach tolerance: estimate {estimate:e}, error {error:e} after {subdivisions} subdivisions")]
    QuadratureFailure {
        estimate: f64,
        error: f64,
        subdivisions: usize,
    },
    #[error("fixed point did not converge in {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        last: Box<TierProbabilities>,
    },
    #[error("non-finite {context} value at {at}")]
    NonFinite { context: &'static str, at: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub(crate) fn check_tier(
    model: &crate::model::NetworkModel,
    k: usize,
) -> Result<(), AnalyticError> {
    if k < model.tiers.len() {
        Ok(())
    } else {
        Err(AnalyticError::InvalidArgument(format!(
            "tier index {k} out of range for a {}-tier model",
            model.tiers.len()
        )))
    }
}
