//! Load of a typical BS.
//!
//! Users associated with tier k form a thinned PPP of intensity T_k·λ_u.
//! With a Gamma(c, cλ_k) cell area, the user count N of a tier-k BS is
//! negative binomial:
//!
//! ```text
//! Pr(N = n) = Γ(n+c)/(Γ(n+1)Γ(c)) · p^n (1−p)^c,   p = T_kλ_u/(T_kλ_u + cλ_k)
//! ```

use statrs::function::gamma::ln_gamma;

use super::{check_tier, AnalyticError, QuadSettings};
use crate::model::NetworkModel;

/// Truncated negative-binomial load distribution of a tier-k BS.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadDistribution {
    /// Success probability p of the negative binomial.
    p: f64,
    shape: f64,
    pmf: Vec<f64>,
    cdf: Vec<f64>,
}

impl LoadDistribution {
    /// `users` is the thinned user intensity T_k·λ_u and `bs_density` is λ_k,
    /// both per unit area. The table stops once the remaining mass drops
    /// below `tail_tol`.
    pub fn new(users: f64, bs_density: f64, shape: f64, tail_tol: f64) -> Self {
        let p = if users <= 0.0 {
            0.0
        } else {
            users / (users + shape * bs_density)
        };
        let mut pmf = Vec::new();
        let mut cdf = Vec::new();
        let mut term = ln_pmf(p, shape, 0).exp();
        let mut acc = 0.0;
        let mut n = 0usize;
        loop {
            acc += term;
            pmf.push(term);
            cdf.push(acc);
            // Past the mode the terms decrease, so the tail is bounded by 1 − acc.
            let past_mode = (n as f64) >= p * (shape - 1.0) / (1.0 - p);
            if (1.0 - acc <= tail_tol && past_mode) || p == 0.0 {
                break;
            }
            if term == 0.0 && past_mode {
                break;
            }
            term *= p * (n as f64 + shape) / (n as f64 + 1.0);
            n += 1;
        }
        LoadDistribution { p, shape, pmf, cdf }
    }

    pub fn for_tier(
        model: &NetworkModel,
        k: usize,
        t_k: f64,
        tail_tol: f64,
    ) -> Result<Self, AnalyticError> {
        success_probability(model, k, t_k)?;
        Ok(LoadDistribution::new(
            t_k * model.mu_density,
            model.tiers[k].density,
            model.cell_area_shape,
            tail_tol,
        ))
    }

    /// Number of tabulated terms; the mass beyond is below the tail tolerance.
    pub fn len(&self) -> usize {
        self.pmf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pmf.is_empty()
    }

    pub fn pmf_table(&self) -> &[f64] {
        &self.pmf
    }

    pub fn pmf(&self, n: usize) -> f64 {
        self.pmf
            .get(n)
            .copied()
            .unwrap_or_else(|| ln_pmf(self.p, self.shape, n).exp())
    }

    /// Pr(N ≤ l), zero for l < 0.
    pub fn cdf(&self, l: i64) -> f64 {
        if l < 0 {
            return 0.0;
        }
        let l = l as u64;
        if l < self.cdf.len() as u64 {
            self.cdf[l as usize]
        } else {
            *self.cdf.last().expect("table is never empty")
        }
    }

    /// Exact mean c·p/(1−p) = T_kλ_u/λ_k.
    pub fn mean(&self) -> f64 {
        self.shape * self.p / (1.0 - self.p)
    }

    /// E[1/(N+1)] from the tabulated terms.
    pub fn mean_inverse_load(&self) -> f64 {
        self.pmf
            .iter()
            .enumerate()
            .map(|(n, p)| p / (n as f64 + 1.0))
            .sum()
    }
}

fn ln_pmf(p: f64, c: f64, n: usize) -> f64 {
    if p == 0.0 {
        return if n == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    let n = n as f64;
    ln_gamma(n + c) - ln_gamma(n + 1.0) - ln_gamma(c) + n * p.ln() + c * (-p).ln_1p()
}

fn success_probability(model: &NetworkModel, k: usize, t_k: f64) -> Result<f64, AnalyticError> {
    check_tier(model, k)?;
    if !(0.0..=1.0).contains(&t_k) {
        return Err(AnalyticError::InvalidArgument(format!(
            "tier probability must lie in [0, 1], got {t_k}"
        )));
    }
    let users = t_k * model.mu_density;
    Ok(users / (users + model.cell_area_shape * model.tiers[k].density))
}

/// Pr(N_k = n) when a fraction `t_k` of users associates with tier k.
/// Evaluated in log space.
pub fn load_pmf(model: &NetworkModel, k: usize, t_k: f64, n: u64) -> Result<f64, AnalyticError> {
    let p = success_probability(model, k, t_k)?;
    Ok(ln_pmf(p, model.cell_area_shape, n as usize).exp())
}

/// Pr(N_k ≤ l), summed with the ratio recurrence
/// pmf(n+1) = pmf(n)·p·(n+c)/(n+1).
pub fn load_cdf(model: &NetworkModel, k: usize, t_k: f64, l: u64) -> Result<f64, AnalyticError> {
    let p = success_probability(model, k, t_k)?;
    let c = model.cell_area_shape;
    let mut term = ln_pmf(p, c, 0).exp();
    let mut acc = term;
    for n in 0..l {
        term *= p * (n as f64 + c) / (n as f64 + 1.0);
        acc += term;
        if term == 0.0 && n as f64 > p * c {
            break;
        }
    }
    Ok(acc.min(1.0))
}

/// Pr((N_k+1)/(N_j+1) < x) = Σ_t F_{N_k}(⌊(t+1)x − 1⌋)·Pr(N_j = t).
///
/// `t` holds the tier association probabilities of all tiers. The sum over t
/// stops once the remaining N_j mass is below `q.series_tail_tol`.
pub fn load_ratio_cdf(
    model: &NetworkModel,
    k: usize,
    j: usize,
    t: &[f64],
    x: f64,
    q: &QuadSettings,
) -> Result<f64, AnalyticError> {
    if k == j {
        return Err(AnalyticError::InvalidArgument(
            "load ratio needs two distinct tiers".into(),
        ));
    }
    if t.len() != model.tiers.len() {
        return Err(AnalyticError::InvalidArgument(format!(
            "expected {} tier probabilities, got {}",
            model.tiers.len(),
            t.len()
        )));
    }
    if x.is_nan() || x < 0.0 {
        return Err(AnalyticError::InvalidArgument(format!(
            "load ratio CDF needs x >= 0, got {x}"
        )));
    }
    let nk = LoadDistribution::for_tier(model, k, t[k], q.series_tail_tol)?;
    let nj = LoadDistribution::for_tier(model, j, t[j], q.series_tail_tol)?;
    Ok(ratio_cdf(&nk, &nj, x))
}

pub(crate) fn ratio_cdf(nk: &LoadDistribution, nj: &LoadDistribution, x: f64) -> f64 {
    let mut acc = 0.0;
    for (t, &w) in nj.pmf_table().iter().enumerate() {
        let bound = ((t as f64 + 1.0) * x - 1.0).floor();
        let l = if bound >= i64::MAX as f64 {
            i64::MAX
        } else {
            bound as i64
        };
        acc += nk.cdf(l) * w;
    }
    acc.clamp(0.0, 1.0)
}
