//! Ergodic rates.
//!
//! ℜ_k = B_k·E[ln(1+SINR_k)] = B_k ∫₀^∞ P_c^k(e^t − 1) dt and
//! ℜ̄ = Σ_k T_k·ℜ_k, all in nats/s.

use super::fixed_point::{FixedPointSettings, PairEvaluator, TierProbabilities};
use super::load::LoadDistribution;
use super::sinr::SinrLaw;
use super::{check_tier, AnalyticError, QuadSettings};
use crate::model::{NetworkModel, RateMetric};

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    /// ℜ_k [nats/s].
    pub per_tier_rate: Vec<f64>,
    /// ℜ̄ = Σ_k T_k·ℜ_k [nats/s].
    pub average_rate: f64,
    pub tier_probs: TierProbabilities,
    pub metric: RateMetric,
}

/// ℜ_k = B_k·∫₀^∞ P_c^k(e^t − 1) dt [nats/s], using the full tier bandwidth.
pub fn ergodic_rate_conditional(
    model: &NetworkModel,
    k: usize,
    q: &QuadSettings,
) -> Result<f64, AnalyticError> {
    check_tier(model, k)?;
    let se = SinrLaw::for_tier(model, k)?.spectral_efficiency(q)?;
    Ok(model.tiers[k].bandwidth * se)
}

/// B_k·E[1/(N_k+1)]·∫₀^∞ P_c^k(e^t − 1) dt: the rate when the tier bandwidth
/// is split equally between the tagged user and the N_k others.
pub fn ergodic_rate_equal_share(
    model: &NetworkModel,
    k: usize,
    t_k: f64,
    q: &QuadSettings,
) -> Result<f64, AnalyticError> {
    let full = ergodic_rate_conditional(model, k, q)?;
    let load = LoadDistribution::for_tier(model, k, t_k, q.series_tail_tol)?;
    Ok(full * load.mean_inverse_load())
}

/// Per-tier rates for given tier probabilities.
pub fn per_tier_rates(
    model: &NetworkModel,
    t: &[f64],
    metric: RateMetric,
    q: &QuadSettings,
) -> Result<Vec<f64>, AnalyticError> {
    if t.len() != model.num_tiers() {
        return Err(AnalyticError::InvalidArgument(format!(
            "expected {} tier probabilities, got {}",
            model.num_tiers(),
            t.len()
        )));
    }
    // Tiers that share a SINR law share the integral.
    let mut cache: Vec<(SinrLaw, f64)> = Vec::new();
    let mut out = Vec::with_capacity(t.len());
    for (k, &tk) in t.iter().enumerate() {
        let law = SinrLaw::for_tier(model, k)?;
        let se = match cache.iter().find(|(l, _)| *l == law) {
            Some(&(_, se)) => se,
            None => {
                let se = law.spectral_efficiency(q)?;
                cache.push((law, se));
                se
            }
        };
        let share = match metric {
            RateMetric::FullBand => 1.0,
            RateMetric::EqualShare => {
                LoadDistribution::for_tier(model, k, tk.clamp(0.0, 1.0), q.series_tail_tol)?
                    .mean_inverse_load()
            }
        };
        out.push(model.tiers[k].bandwidth * se * share);
    }
    Ok(out)
}

/// Solves the tier probabilities and weights the per-tier rates by them.
pub fn average_ergodic_rate(
    model: &NetworkModel,
    q: &QuadSettings,
    metric: RateMetric,
    settings: &FixedPointSettings,
) -> Result<RateReport, AnalyticError> {
    let tier_probs = super::solve_tier_probabilities(model, q, settings)?;
    rate_report(model, tier_probs, metric, q)
}

/// [`average_ergodic_rate`] reusing prebuilt ratio tables.
pub fn average_ergodic_rate_with(
    evaluator: &PairEvaluator,
    model: &NetworkModel,
    q: &QuadSettings,
    metric: RateMetric,
    settings: &FixedPointSettings,
) -> Result<RateReport, AnalyticError> {
    let tier_probs = evaluator.solve(model, settings)?;
    rate_report(model, tier_probs, metric, q)
}

fn rate_report(
    model: &NetworkModel,
    tier_probs: TierProbabilities,
    metric: RateMetric,
    q: &QuadSettings,
) -> Result<RateReport, AnalyticError> {
    let per_tier_rate = per_tier_rates(model, &tier_probs.t, metric, q)?;
    let average_rate = per_tier_rate
        .iter()
        .zip(&tier_probs.t)
        .map(|(r, t)| r * t)
        .sum();
    Ok(RateReport {
        per_tier_rate,
        average_rate,
        tier_probs,
        metric,
    })
}
