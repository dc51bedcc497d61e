//! Tier association probabilities.
//!
//! A user picks tier k when its load-shared rate beats every other tier.
//! Treating the pairwise comparisons as independent gives
//!
//! ```text
//! T_k = Π_{j≠k} Pr(N_{k/j} < (B_k/B_j)·Z_{k/j}),
//! ```
//!
//! with N_{k/j} = (N_k+1)/(N_j+1) and Z_{k/j} = ln(1+SINR_k)/ln(1+SINR_j).
//! Each factor is the outer integral ∫ F_{N_{k/j}}(b·x) f_Z(x) dx. Because
//! the load ratio is discrete it is evaluated as the equivalent double sum
//!
//! ```text
//! Σ_n Σ_t Pr(N_k = n)·Pr(N_j = t)·Pr(Z > (n+1)/(b(t+1))),
//! ```
//!
//! which avoids integrating across the jumps of F_{N_{k/j}}. The loads depend
//! on T through the thinned user intensities, so T solves a fixed point.
//!
//! The independence step does not keep Σ_k T_k = 1. By default each map
//! evaluation is renormalized onto the simplex and the raw sum is reported
//! as [`TierProbabilities::sum_deviation`]; [`Normalization::None`] iterates
//! the raw products instead.

use std::collections::HashMap;

use super::load::LoadDistribution;
use super::ratio::RatioTable;
use super::sinr::SinrLaw;
use super::{AnalyticError, QuadSettings};
use crate::model::NetworkModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// Divide the product vector by its sum before each damped update.
    #[default]
    Simplex,
    /// Iterate the raw products.
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    pub normalization: Normalization,
    /// Starting point; uniform when `None`.
    pub initial: Option<Vec<f64>>,
}

impl Default for FixedPointSettings {
    fn default() -> Self {
        FixedPointSettings {
            tol: 1e-6,
            max_iter: 200,
            damping: 0.5,
            normalization: Normalization::Simplex,
            initial: None,
        }
    }
}

/// Solution of the tier-association fixed point.
#[derive(Debug, Clone, PartialEq)]
pub struct TierProbabilities {
    pub t: Vec<f64>,
    /// Raw products Π_j Pr(·) at the final iterate, before normalization.
    pub products: Vec<f64>,
    /// Largest component change in the last update.
    pub residual: f64,
    /// |Σ_k products_k − 1|: how far the pairwise-independence products are
    /// from a probability vector.
    pub sum_deviation: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Tabulated SINR-ratio laws for every ordered tier pair of a model.
///
/// Tables depend only on the SINR laws, not on T or on the bandwidths, so
/// one evaluator serves every fixed-point iteration and bandwidth split.
#[derive(Debug, Clone)]
pub struct PairEvaluator {
    laws: Vec<SinrLaw>,
    tables: Vec<RatioTable>,
    /// For each ordered pair (k, j): the table index and whether it is
    /// stored as (j, k), in which case Pr(Z_{k/j} > z) = 1 − Pr(Z_{j/k} > 1/z).
    index: HashMap<(usize, usize), (usize, bool)>,
    quad: QuadSettings,
}

impl PairEvaluator {
    pub fn new(model: &NetworkModel, q: &QuadSettings) -> Result<Self, AnalyticError> {
        q.check()?;
        let laws = (0..model.num_tiers())
            .map(|k| SinrLaw::for_tier(model, k))
            .collect::<Result<Vec<_>, _>>()?;
        let mut tables: Vec<RatioTable> = Vec::new();
        let mut index = HashMap::new();
        for k in 0..laws.len() {
            for j in 0..laws.len() {
                if k == j {
                    continue;
                }
                let (a, b) = (laws[k], laws[j]);
                let found = tables.iter().enumerate().find_map(|(i, t)| {
                    let (n, d) = t.laws();
                    if n == a && d == b {
                        Some((i, false))
                    } else if n == b && d == a {
                        Some((i, true))
                    } else {
                        None
                    }
                });
                let entry = match found {
                    Some(e) => e,
                    None => {
                        tables.push(RatioTable::build(a, b, q)?);
                        (tables.len() - 1, false)
                    }
                };
                index.insert((k, j), entry);
            }
        }
        Ok(PairEvaluator {
            laws,
            tables,
            index,
            quad: *q,
        })
    }

    pub fn num_tiers(&self) -> usize {
        self.laws.len()
    }

    /// Pr(ln(1+SINR_k)/ln(1+SINR_j) > z).
    pub fn ratio_ccdf(&self, k: usize, j: usize, z: f64) -> Result<f64, AnalyticError> {
        let &(i, flipped) = self.index.get(&(k, j)).ok_or_else(|| {
            AnalyticError::InvalidArgument(format!("no ratio table for tiers ({k}, {j})"))
        })?;
        if flipped {
            Ok(1.0 - self.tables[i].ccdf(1.0 / z)?)
        } else {
            self.tables[i].ccdf(z)
        }
    }

    /// Pr((N_k+1)/(N_j+1) < b·Z_{k/j}) for given load laws.
    pub fn pair_probability(
        &self,
        k: usize,
        j: usize,
        bandwidth_ratio: f64,
        nk: &LoadDistribution,
        nj: &LoadDistribution,
    ) -> Result<f64, AnalyticError> {
        let mut total = 0.0;
        for (t, &wt) in nj.pmf_table().iter().enumerate() {
            if wt == 0.0 {
                continue;
            }
            let denom = bandwidth_ratio * (t as f64 + 1.0);
            let mut inner = 0.0;
            for (n, &wn) in nk.pmf_table().iter().enumerate() {
                if wn == 0.0 {
                    continue;
                }
                inner += wn * self.ratio_ccdf(k, j, (n as f64 + 1.0) / denom)?;
            }
            total += wt * inner;
        }
        Ok(total.clamp(0.0, 1.0))
    }

    fn loads(&self, model: &NetworkModel, t: &[f64]) -> Vec<LoadDistribution> {
        t.iter()
            .enumerate()
            .map(|(k, &tk)| {
                LoadDistribution::new(
                    tk.clamp(0.0, 1.0) * model.mu_density,
                    model.tiers[k].density,
                    model.cell_area_shape,
                    self.quad.series_tail_tol,
                )
            })
            .collect()
    }

    /// The product map T ↦ (Π_{j≠k} Pr(C_k > C_j))_k.
    pub fn products(&self, model: &NetworkModel, t: &[f64]) -> Result<Vec<f64>, AnalyticError> {
        let k_count = self.num_tiers();
        let loads = self.loads(model, t);
        let mut out = vec![1.0; k_count];
        for (k, slot) in out.iter_mut().enumerate() {
            for j in 0..k_count {
                if j == k {
                    continue;
                }
                let b = model.tiers[k].bandwidth / model.tiers[j].bandwidth;
                *slot *= self.pair_probability(k, j, b, &loads[k], &loads[j])?;
            }
        }
        Ok(out)
    }

    pub fn solve(
        &self,
        model: &NetworkModel,
        settings: &FixedPointSettings,
    ) -> Result<TierProbabilities, AnalyticError> {
        let k_count = self.num_tiers();
        if k_count != model.num_tiers() {
            return Err(AnalyticError::InvalidArgument(
                "evaluator was built for a different model".into(),
            ));
        }
        if !(settings.damping > 0.0 && settings.damping <= 1.0) || settings.max_iter == 0 {
            return Err(AnalyticError::InvalidArgument(format!(
                "damping must lie in (0, 1] and max_iter must be positive: {settings:?}"
            )));
        }
        let mut t = match &settings.initial {
            Some(v) if v.len() == k_count && v.iter().all(|x| (0.0..=1.0).contains(x)) => v.clone(),
            Some(v) => {
                return Err(AnalyticError::InvalidArgument(format!(
                    "initial point must have {k_count} components in [0, 1], got {v:?}"
                )))
            }
            None => vec![1.0 / k_count as f64; k_count],
        };
        let mut residual = f64::INFINITY;
        let mut products = vec![1.0; k_count];
        for iteration in 1..=settings.max_iter {
            products = self.products(model, &t)?;
            let raw_sum: f64 = products.iter().sum();
            let target: Vec<f64> = match settings.normalization {
                Normalization::Simplex if raw_sum > 0.0 => {
                    products.iter().map(|p| p / raw_sum).collect()
                }
                Normalization::Simplex => {
                    return Err(AnalyticError::NonFinite {
                        context: "tier probability sum",
                        at: raw_sum,
                    })
                }
                Normalization::None => products.clone(),
            };
            residual = 0.0;
            for (tk, target_k) in t.iter_mut().zip(&target) {
                let next = (1.0 - settings.damping) * *tk + settings.damping * target_k;
                residual = f64::max(residual, (next - *tk).abs());
                *tk = next.clamp(0.0, 1.0);
            }
            if residual <= settings.tol {
                return Ok(TierProbabilities {
                    sum_deviation: (raw_sum - 1.0).abs(),
                    t,
                    products,
                    residual,
                    iterations: iteration,
                    converged: true,
                });
            }
        }
        let raw_sum: f64 = products.iter().sum();
        Err(AnalyticError::NoConvergence {
            iterations: settings.max_iter,
            residual,
            last: Box::new(TierProbabilities {
                t,
                sum_deviation: (raw_sum - 1.0).abs(),
                products,
                residual,
                iterations: settings.max_iter,
                converged: false,
            }),
        })
    }
}

/// Solves for the tier association probabilities T_1..T_K.
pub fn solve_tier_probabilities(
    model: &NetworkModel,
    q: &QuadSettings,
    settings: &FixedPointSettings,
) -> Result<TierProbabilities, AnalyticError> {
    if model.num_tiers() == 1 {
        return Ok(TierProbabilities {
            t: vec![1.0],
            products: vec![1.0],
            residual: 0.0,
            sum_deviation: 0.0,
            iterations: 1,
            converged: true,
        });
    }
    PairEvaluator::new(model, q)?.solve(model, settings)
}
