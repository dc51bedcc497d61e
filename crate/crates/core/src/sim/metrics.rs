//! Replicated Monte Carlo estimates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::assoc::{associate, pairwise_preferences, AssociationOptions};
use super::geometry::Window;
use super::snapshot::{Candidates, Fading, Snapshot};
use super::SimError;
use crate::model::{AssociationScheme, NetworkModel, RateMetric};
use crate::stats::mean_se;

/// Attempts per replication before an empty tier is reported.
pub const MAX_RESAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    /// Standard error of the mean across replications.
    pub se: f64,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let (mean, se) = mean_se(xs);
        Estimate { mean, se }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSettings {
    pub replications: usize,
    pub seed: u64,
    /// Auto-sized from the model when `None`.
    pub window: Option<Window>,
    pub assoc: AssociationOptions,
}

impl SimSettings {
    pub fn new(replications: usize, seed: u64) -> Self {
        SimSettings {
            replications,
            seed,
            window: None,
            assoc: AssociationOptions::default(),
        }
    }

    fn window(&self, model: &NetworkModel) -> Result<Window, SimError> {
        match self.window {
            Some(w) => Ok(w),
            None => Window::auto_sized(model),
        }
    }
}

/// Everything drawn for one replication.
#[derive(Debug, Clone)]
pub struct Replication {
    pub index: u64,
    pub snapshot: Snapshot,
    pub fading: Fading,
    pub candidates: Candidates,
    pub order_seed: u64,
    /// Snapshots discarded because a tier was empty or points coincided.
    pub resamples: usize,
}

impl Replication {
    /// Replication `index` of `seed` draws from ChaCha stream `index`, so
    /// replications are independent of each other and of scheduling.
    pub fn sample(
        model: &NetworkModel,
        window: Window,
        seed: u64,
        index: u64,
    ) -> Result<Self, SimError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let mut last = None;
        for attempt in 0..MAX_RESAMPLES {
            let snapshot = match Snapshot::sample(model, window, seed, &mut rng) {
                Ok(s) => s,
                Err(e @ SimError::NoBsInTier { .. }) => {
                    last = Some(e);
                    continue;
                }
                Err(e) => return Err(e),
            };
            let fading = Fading::new(rng.random(), model.num_tiers());
            let order_seed = rng.random();
            match Candidates::compute(model, &snapshot, &fading) {
                Ok(candidates) => {
                    return Ok(Replication {
                        index,
                        snapshot,
                        fading,
                        candidates,
                        order_seed,
                        resamples: attempt,
                    })
                }
                Err(e @ SimError::CoincidentPoints { .. }) => last = Some(e),
                Err(e) => return Err(e),
            }
        }
        Err(last.expect("at least one attempt"))
    }
}

/// Runs `f` on every replication, in parallel, returning results in
/// replication order.
pub fn map_replications<T, F>(
    model: &NetworkModel,
    settings: &SimSettings,
    f: F,
) -> Result<Vec<T>, SimError>
where
    T: Send,
    F: Fn(&Replication) -> Result<T, SimError> + Sync,
{
    if settings.replications == 0 {
        return Err(SimError::InvalidArgument(
            "replications must be >= 1".into(),
        ));
    }
    let window = settings.window(model)?;
    (0..settings.replications as u64)
        .into_par_iter()
        .map(|i| f(&Replication::sample(model, window, settings.seed, i)?))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsTable {
    pub scheme: AssociationScheme,
    pub replications: usize,
    pub users: usize,
    /// Fraction of users served by each tier.
    pub tier_share: Vec<Estimate>,
    pub rate_full_band: Estimate,
    pub rate_equal_share: Estimate,
    /// Mean rate of the users served by each tier.
    pub tier_rate_full_band: Vec<Estimate>,
    pub tier_rate_equal_share: Vec<Estimate>,
    /// Pooled empirical distribution of the per-BS load of each tier.
    pub load_pmf: Vec<Vec<f64>>,
    /// `pairwise[k][j]`: fraction of users whose tier-k candidate offers a
    /// strictly higher load-shared rate than the tier-j one, at the final
    /// assignment.
    pub pairwise: Vec<Vec<Estimate>>,
    /// Fraction of replications whose best-response dynamics converged.
    pub converged_fraction: f64,
    pub mean_rounds: f64,
    pub resamples: usize,
}

impl MetricsTable {
    /// Average rate under the scheme's own metric.
    pub fn average_rate(&self) -> Estimate {
        match self.scheme.rate_metric {
            RateMetric::FullBand => self.rate_full_band,
            RateMetric::EqualShare => self.rate_equal_share,
        }
    }

    pub fn tier_rate(&self) -> &[Estimate] {
        match self.scheme.rate_metric {
            RateMetric::FullBand => &self.tier_rate_full_band,
            RateMetric::EqualShare => &self.tier_rate_equal_share,
        }
    }
}

struct RepStats {
    users: usize,
    share: Vec<f64>,
    rate_full: f64,
    rate_equal: f64,
    tier_full: Vec<Option<f64>>,
    tier_equal: Vec<Option<f64>>,
    loads: Vec<Vec<u32>>,
    pairwise: Vec<Vec<f64>>,
    converged: bool,
    rounds: usize,
    resamples: usize,
}

/// Simulates `settings.replications` snapshots under `scheme`.
pub fn estimate_metrics(
    model: &NetworkModel,
    scheme: AssociationScheme,
    settings: &SimSettings,
) -> Result<MetricsTable, SimError> {
    let k_count = model.num_tiers();
    let reps = map_replications(model, settings, |rep| {
        let a = associate(
            model,
            &rep.snapshot,
            &rep.candidates,
            scheme,
            rep.order_seed,
            &settings.assoc,
        )?;
        let n = a.num_users();
        let mut share = vec![0.0; k_count];
        let mut tier_full = vec![0.0; k_count];
        let mut tier_equal = vec![0.0; k_count];
        let (mut rate_full, mut rate_equal) = (0.0, 0.0);
        for m in 0..n {
            let k = a.assoc[m].0;
            let full = a.rate(model, m, RateMetric::FullBand);
            let equal = a.rate(model, m, RateMetric::EqualShare);
            share[k] += 1.0;
            tier_full[k] += full;
            tier_equal[k] += equal;
            rate_full += full;
            rate_equal += equal;
        }
        let per_tier = |sums: Vec<f64>| -> Vec<Option<f64>> {
            sums.iter()
                .zip(&share)
                .map(|(s, c)| (*c > 0.0).then(|| s / c))
                .collect()
        };
        let tier_full = per_tier(tier_full);
        let tier_equal = per_tier(tier_equal);
        let denom = (n as f64).max(1.0);
        Ok(RepStats {
            users: n,
            share: share.iter().map(|c| c / denom).collect(),
            rate_full: rate_full / denom,
            rate_equal: rate_equal / denom,
            tier_full,
            tier_equal,
            pairwise: pairwise_preferences(model, &rep.candidates, &a),
            loads: a.load,
            converged: a.converged,
            rounds: a.rounds,
            resamples: rep.resamples,
        })
    })?;

    // Replications without users carry no rate or share information.
    let with_users: Vec<&RepStats> = reps.iter().filter(|r| r.users > 0).collect();
    let collect = |f: &dyn Fn(&RepStats) -> Option<f64>| -> Estimate {
        let xs: Vec<f64> = with_users.iter().filter_map(|r| f(r)).collect();
        Estimate::from_samples(&xs)
    };
    let tier_share = (0..k_count)
        .map(|k| collect(&|r| Some(r.share[k])))
        .collect();
    let tier_rate_full_band = (0..k_count).map(|k| collect(&|r| r.tier_full[k])).collect();
    let tier_rate_equal_share = (0..k_count)
        .map(|k| collect(&|r| r.tier_equal[k]))
        .collect();
    let pairwise = (0..k_count)
        .map(|k| {
            (0..k_count)
                .map(|j| collect(&|r| Some(r.pairwise[k][j])))
                .collect()
        })
        .collect();

    let mut load_pmf = Vec::with_capacity(k_count);
    for k in 0..k_count {
        let mut hist: Vec<f64> = Vec::new();
        let mut total = 0.0;
        for r in &reps {
            for &l in &r.loads[k] {
                let l = l as usize;
                if hist.len() <= l {
                    hist.resize(l + 1, 0.0);
                }
                hist[l] += 1.0;
                total += 1.0;
            }
        }
        if total > 0.0 {
            hist.iter_mut().for_each(|h| *h /= total);
        }
        load_pmf.push(hist);
    }

    let count = reps.len() as f64;
    Ok(MetricsTable {
        scheme,
        replications: reps.len(),
        users: reps.iter().map(|r| r.users).sum(),
        tier_share,
        rate_full_band: collect(&|r| Some(r.rate_full)),
        rate_equal_share: collect(&|r| Some(r.rate_equal)),
        tier_rate_full_band,
        tier_rate_equal_share,
        load_pmf,
        pairwise,
        converged_fraction: reps.iter().filter(|r| r.converged).count() as f64 / count,
        mean_rounds: reps.iter().map(|r| r.rounds as f64).sum::<f64>() / count,
        resamples: reps.iter().map(|r| r.resamples).sum(),
    })
}

/// Empirical Pr(SINR of the nearest tier-k BS > x), as `[tier][threshold]`.
pub fn estimate_coverage(
    model: &NetworkModel,
    thresholds: &[f64],
    settings: &SimSettings,
) -> Result<Vec<Vec<Estimate>>, SimError> {
    let k_count = model.num_tiers();
    let reps = map_replications(model, settings, |rep| {
        let c = &rep.candidates;
        let n = c.num_users();
        let mut hits = vec![vec![0usize; thresholds.len()]; k_count];
        for m in 0..n {
            for (k, row) in hits.iter_mut().enumerate() {
                let s = c.sinr(m, k);
                for (slot, &x) in row.iter_mut().zip(thresholds) {
                    if s > x {
                        *slot += 1;
                    }
                }
            }
        }
        Ok((n, hits))
    })?;
    Ok((0..k_count)
        .map(|k| {
            (0..thresholds.len())
                .map(|t| {
                    let xs: Vec<f64> = reps
                        .iter()
                        .filter(|(n, _)| *n > 0)
                        .map(|(n, h)| h[k][t] as f64 / *n as f64)
                        .collect();
                    Estimate::from_samples(&xs)
                })
                .collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Scheme, TierParams};

    fn small_model() -> NetworkModel {
        let tier = |d: f64, p: f64, bw: f64| TierParams {
            density: d,
            tx_power: p,
            bandwidth: bw,
            cre_bias: 1.0,
        };
        NetworkModel {
            tiers: vec![tier(1e-6, 10.0, 1e7), tier(4e-6, 1.0, 5e6)],
            alpha: 4.0,
            noise_power: 0.0,
            mu_density: 2e-5,
            cell_area_shape: 3.575,
        }
    }

    fn settings(reps: usize) -> SimSettings {
        SimSettings {
            window: Some(Window::new(4000.0).unwrap()),
            ..SimSettings::new(reps, 42)
        }
    }

    #[test]
    fn identical_runs_are_bit_identical() {
        let m = small_model();
        let scheme = AssociationScheme::new(Scheme::Proposed, RateMetric::EqualShare);
        let a = estimate_metrics(&m, scheme, &settings(1)).unwrap();
        let b = estimate_metrics(&m, scheme, &settings(1)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let m = small_model();
        let scheme = AssociationScheme::new(Scheme::Proposed, RateMetric::EqualShare);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| estimate_metrics(&m, scheme, &settings(6)).unwrap())
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn assignments_are_consistent() {
        let m = small_model();
        for scheme in Scheme::ALL {
            let s = AssociationScheme::new(scheme, RateMetric::EqualShare);
            let t = estimate_metrics(&m, s, &settings(3)).unwrap();
            let share: f64 = t.tier_share.iter().map(|e| e.mean).sum();
            assert!((share - 1.0).abs() < 1e-12, "{scheme:?}");
            assert!(t.rate_equal_share.mean <= t.rate_full_band.mean);
            assert!(t.mean_rounds >= 1.0);
        }
    }

    #[test]
    fn zero_replications_rejected() {
        let m = small_model();
        let s = AssociationScheme::new(Scheme::MaxSinr, RateMetric::FullBand);
        assert!(estimate_metrics(&m, s, &settings(0)).is_err());
    }

    #[test]
    fn empty_tier_after_resampling() {
        let mut m = small_model();
        m.tiers[1].density = 1e-40;
        let s = AssociationScheme::new(Scheme::MaxSinr, RateMetric::FullBand);
        assert_eq!(
            estimate_metrics(&m, s, &settings(1)).unwrap_err(),
            SimError::NoBsInTier { tier: 2 }
        );
    }
}
