//! Empirical checks of the approximations behind the load model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Gamma};

use super::geometry::{sample_ppp, Point, SpatialIndex, Window};
use super::metrics::SimSettings;
use super::SimError;
use crate::analytic::LoadDistribution;
use crate::model::{per_km2_to_per_m2, NetworkModel};
use crate::stats::{ks_distance, total_variation, variance};

/// Expected number of cells per replication in the cell-area estimator.
pub const CELLS_PER_REPLICATION: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellAreaSample {
    pub tier: usize,
    /// λ_k·S for every sampled cell.
    pub normalized_areas: Vec<f64>,
}

impl CellAreaSample {
    pub fn mean(&self) -> f64 {
        self.normalized_areas.iter().sum::<f64>() / self.normalized_areas.len() as f64
    }

    pub fn variance(&self) -> f64 {
        variance(&self.normalized_areas)
    }

    /// Kolmogorov–Smirnov distance to Gamma(shape, rate = shape).
    pub fn ks_to_gamma(&self, shape: f64) -> Result<f64, SimError> {
        let g = Gamma::new(shape, shape)
            .map_err(|e| SimError::InvalidArgument(format!("gamma law: {e}")))?;
        Ok(ks_distance(&self.normalized_areas, |x| g.cdf(x)))
    }
}

/// Voronoi cell areas of tier k, measured by counting the points of a
/// uniform probe lattice that fall closest to each BS.
///
/// Each replication uses a torus window holding about
/// [`CELLS_PER_REPLICATION`] cells; the lattice is shifted by a random
/// offset per replication.
pub fn estimate_cell_area_distribution(
    model: &NetworkModel,
    k: usize,
    replications: usize,
    probes_per_km2: f64,
    seed: u64,
) -> Result<CellAreaSample, SimError> {
    let tier = model
        .tiers
        .get(k)
        .ok_or_else(|| SimError::InvalidArgument(format!("tier index {k} out of range")))?;
    if replications == 0 {
        return Err(SimError::InvalidArgument(
            "replications must be >= 1".into(),
        ));
    }
    let probe_density = per_km2_to_per_m2(probes_per_km2);
    if probe_density.is_nan() || probe_density <= tier.density {
        return Err(SimError::InvalidArgument(format!(
            "probe density {probes_per_km2}/km² must exceed the BS density"
        )));
    }
    let lambda = tier.density;
    let window = Window::new((CELLS_PER_REPLICATION / lambda).sqrt())?;
    let side = window.side_length();
    let grid = (side * probe_density.sqrt()).ceil() as usize;
    let spacing = side / grid as f64;
    let cell_weight = lambda * spacing * spacing;

    let per_rep: Vec<Vec<f64>> = (0..replications as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(rep);
            let mut bs = sample_ppp(lambda, &window, &mut rng);
            while bs.is_empty() {
                bs = sample_ppp(lambda, &window, &mut rng);
            }
            let (ox, oy) = (rng.random::<f64>() * spacing, rng.random::<f64>() * spacing);
            let index = SpatialIndex::new(&bs, window);
            let mut counts = vec![0u64; bs.len()];
            for i in 0..grid {
                for j in 0..grid {
                    let p = Point {
                        x: ox + i as f64 * spacing,
                        y: oy + j as f64 * spacing,
                    };
                    let (b, _) = index.nearest(p).expect("non-empty index");
                    counts[b] += 1;
                }
            }
            counts.iter().map(|&c| c as f64 * cell_weight).collect()
        })
        .collect();
    Ok(CellAreaSample {
        tier: k,
        normalized_areas: per_rep.into_iter().flatten().collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThinningReport {
    pub tier: usize,
    pub t_k: f64,
    /// Empirical per-BS load distribution.
    pub empirical: Vec<f64>,
    /// Negative-binomial load law for the same T_k.
    pub analytic: Vec<f64>,
    pub total_variation: f64,
    pub cells: usize,
}

/// Assigns every user to tier k with probability `t[k]`, independently,
/// then to its nearest tier-k BS, and compares the per-BS load histogram
/// with the negative-binomial load law.
pub fn validate_thinning(
    model: &NetworkModel,
    t: &[f64],
    settings: &SimSettings,
) -> Result<Vec<ThinningReport>, SimError> {
    let k_count = model.num_tiers();
    if t.len() != k_count || t.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(SimError::InvalidArgument(format!(
            "need {k_count} tier probabilities in [0, 1], got {t:?}"
        )));
    }
    if settings.replications == 0 {
        return Err(SimError::InvalidArgument(
            "replications must be >= 1".into(),
        ));
    }
    let window = match settings.window {
        Some(w) => w,
        None => Window::auto_sized(model)?,
    };
    let total: f64 = t.iter().sum();
    let per_rep: Vec<Vec<Vec<u32>>> = (0..settings.replications as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
            rng.set_stream(rep);
            let bs: Vec<Vec<Point>> = model
                .tiers
                .iter()
                .map(|tier| {
                    let mut pts = sample_ppp(tier.density, &window, &mut rng);
                    while pts.is_empty() {
                        pts = sample_ppp(tier.density, &window, &mut rng);
                    }
                    pts
                })
                .collect();
            let mu = sample_ppp(model.mu_density, &window, &mut rng);
            let indices: Vec<SpatialIndex> =
                bs.iter().map(|b| SpatialIndex::new(b, window)).collect();
            let mut loads: Vec<Vec<u32>> = bs.iter().map(|b| vec![0; b.len()]).collect();
            for p in mu {
                // Probabilities that do not sum to one are renormalized.
                let mut u = rng.random::<f64>() * total;
                let mut k = k_count - 1;
                for (i, &tk) in t.iter().enumerate() {
                    if u < tk {
                        k = i;
                        break;
                    }
                    u -= tk;
                }
                let (b, _) = indices[k].nearest(p).expect("non-empty tier");
                loads[k][b] += 1;
            }
            loads
        })
        .collect();

    let mut reports = Vec::with_capacity(k_count);
    for k in 0..k_count {
        let mut hist: Vec<f64> = Vec::new();
        let mut cells = 0usize;
        for rep in &per_rep {
            for &l in &rep[k] {
                let l = l as usize;
                if hist.len() <= l {
                    hist.resize(l + 1, 0.0);
                }
                hist[l] += 1.0;
                cells += 1;
            }
        }
        hist.iter_mut().for_each(|h| *h /= cells as f64);
        let t_k = t[k] / total;
        let law = LoadDistribution::new(
            t_k * model.mu_density,
            model.tiers[k].density,
            model.cell_area_shape,
            1e-12,
        );
        let analytic = law.pmf_table().to_vec();
        reports.push(ThinningReport {
            tier: k + 1,
            t_k,
            total_variation: total_variation(&hist, &analytic),
            empirical: hist,
            analytic,
            cells,
        });
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TierParams;

    fn model() -> NetworkModel {
        NetworkModel {
            tiers: vec![TierParams {
                density: 1e-6,
                tx_power: 1.0,
                bandwidth: 1e6,
                cre_bias: 1.0,
            }],
            alpha: 4.0,
            noise_power: 0.0,
            mu_density: 1e-5,
            cell_area_shape: 3.575,
        }
    }

    #[test]
    fn areas_partition_the_window() {
        let s = estimate_cell_area_distribution(&model(), 0, 2, 200.0, 5).unwrap();
        // Per replication the areas sum to λL² exactly, so the pooled mean is
        // λL²/N_cells, close to one.
        assert!((s.mean() - 1.0).abs() < 0.1);
        assert!(s.normalized_areas.iter().all(|a| *a >= 0.0));
    }

    #[test]
    fn cell_area_is_deterministic() {
        let a = estimate_cell_area_distribution(&model(), 0, 2, 50.0, 9).unwrap();
        let b = estimate_cell_area_distribution(&model(), 0, 2, 50.0, 9).unwrap();
        assert_eq!(a, b);
        assert!(estimate_cell_area_distribution(&model(), 0, 2, 0.5, 9).is_err());
        assert!(estimate_cell_area_distribution(&model(), 3, 2, 50.0, 9).is_err());
    }

    #[test]
    fn thinning_rejects_bad_probabilities() {
        let s = SimSettings::new(1, 0);
        assert!(validate_thinning(&model(), &[1.5], &s).is_err());
        assert!(validate_thinning(&model(), &[0.5, 0.5], &s).is_err());
    }

    #[test]
    fn single_tier_thinning_is_close() {
        let s = SimSettings::new(20, 3);
        let r = validate_thinning(&model(), &[1.0], &s).unwrap();
        let mass: f64 = r[0].empirical.iter().sum();
        assert!((mass - 1.0).abs() < 1e-12);
        assert!(r[0].total_variation < 0.1, "{}", r[0].total_variation);
    }
}
