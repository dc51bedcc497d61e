//! User association: the load-aware rule and the classical baselines.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::snapshot::{path_gain, Candidates, Snapshot};
use super::SimError;
use crate::model::{AssociationScheme, NetworkModel, RateMetric, Scheme};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssociationOptions {
    /// Cap on best-response sweeps.
    pub max_rounds: usize,
    /// Include the fading gain in the CRE received power.
    pub cre_with_fading: bool,
}

impl Default for AssociationOptions {
    fn default() -> Self {
        AssociationOptions {
            max_rounds: 100,
            cre_with_fading: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// (tier, BS index) of every user.
    pub assoc: Vec<(usize, usize)>,
    /// `load[k][i]`: users served by BS i of tier k.
    pub load: Vec<Vec<u32>>,
    /// SINR of every user on its serving link.
    pub sinr: Vec<f64>,
    /// Rate of every user under `rate_metric` [nats/s].
    pub per_mu_rate: Vec<f64>,
    pub rate_metric: RateMetric,
    /// False when best-response dynamics hit the round cap.
    pub converged: bool,
    pub rounds: usize,
}

impl Assignment {
    fn from_choice(
        model: &NetworkModel,
        snapshot: &Snapshot,
        cand: &Candidates,
        tiers: Vec<usize>,
        metric: RateMetric,
        converged: bool,
        rounds: usize,
    ) -> Self {
        let mut load: Vec<Vec<u32>> = snapshot.bs.iter().map(|b| vec![0; b.len()]).collect();
        let assoc: Vec<(usize, usize)> = tiers
            .iter()
            .enumerate()
            .map(|(m, &k)| (k, cand.bs(m, k)))
            .collect();
        for &(k, i) in &assoc {
            load[k][i] += 1;
        }
        let sinr: Vec<f64> = tiers
            .iter()
            .enumerate()
            .map(|(m, &k)| cand.sinr(m, k))
            .collect();
        let mut out = Assignment {
            assoc,
            load,
            sinr,
            per_mu_rate: Vec::new(),
            rate_metric: metric,
            converged,
            rounds,
        };
        out.per_mu_rate = (0..tiers.len())
            .map(|m| out.rate(model, m, metric))
            .collect();
        out
    }

    /// Rate of user m: B_k·ln(1+SINR) for the full band, divided by the
    /// final load of its BS (itself included) for the equal share.
    pub fn rate(&self, model: &NetworkModel, m: usize, metric: RateMetric) -> f64 {
        let (k, i) = self.assoc[m];
        let full = model.tiers[k].bandwidth * self.sinr[m].ln_1p();
        match metric {
            RateMetric::FullBand => full,
            RateMetric::EqualShare => full / f64::from(self.load[k][i]),
        }
    }

    pub fn num_users(&self) -> usize {
        self.assoc.len()
    }
}

/// Utility B_k/(N+1)·ln(1+SINR) of a candidate with N other users.
fn utility(model: &NetworkModel, k: usize, others: u32, sinr: f64) -> f64 {
    model.tiers[k].bandwidth * sinr.ln_1p() / (f64::from(others) + 1.0)
}

fn argmax_tier<F: Fn(usize) -> f64>(k_count: usize, score: F) -> usize {
    // Strict comparison keeps the lowest tier on ties.
    let mut best = 0;
    let mut best_v = score(0);
    for k in 1..k_count {
        let v = score(k);
        if v > best_v {
            best = k;
            best_v = v;
        }
    }
    best
}

/// Associates every user of a snapshot. `order_seed` fixes the sweep order
/// of the best-response dynamics.
pub fn associate(
    model: &NetworkModel,
    snapshot: &Snapshot,
    cand: &Candidates,
    scheme: AssociationScheme,
    order_seed: u64,
    opts: &AssociationOptions,
) -> Result<Assignment, SimError> {
    if let Some(k) = snapshot.bs.iter().position(Vec::is_empty) {
        return Err(SimError::NoBsInTier { tier: k + 1 });
    }
    let k_count = snapshot.num_tiers();
    let n = cand.num_users();
    let metric = scheme.rate_metric;
    let max_sinr: Vec<usize> = (0..n)
        .map(|m| argmax_tier(k_count, |k| cand.sinr(m, k)))
        .collect();
    let pick = |f: &dyn Fn(usize, usize) -> f64| -> Vec<usize> {
        (0..n).map(|m| argmax_tier(k_count, |k| f(m, k))).collect()
    };
    let biased_rss = |m: usize, k: usize, bias: f64| {
        let t = &model.tiers[k];
        let mut rx = bias * t.tx_power * path_gain(cand.dist2(m, k), model.alpha);
        if opts.cre_with_fading {
            rx *= cand.gain(m, k);
        }
        rx
    };
    let tiers = match scheme.variant {
        Scheme::MaxSinr => max_sinr,
        Scheme::MaxRss => pick(&|m, k| biased_rss(m, k, 1.0)),
        Scheme::Cre => pick(&|m, k| biased_rss(m, k, model.tiers[k].cre_bias)),
        Scheme::NearestBs => pick(&|m, k| -cand.dist2(m, k)),
        Scheme::Proposed => {
            return Ok(best_response(
                model, snapshot, cand, max_sinr, metric, order_seed, opts,
            ));
        }
    };
    Ok(Assignment::from_choice(
        model, snapshot, cand, tiers, metric, true, 1,
    ))
}

fn best_response(
    model: &NetworkModel,
    snapshot: &Snapshot,
    cand: &Candidates,
    mut tiers: Vec<usize>,
    metric: RateMetric,
    order_seed: u64,
    opts: &AssociationOptions,
) -> Assignment {
    let k_count = snapshot.num_tiers();
    let n = tiers.len();
    let mut load: Vec<Vec<u32>> = snapshot.bs.iter().map(|b| vec![0; b.len()]).collect();
    for (m, &k) in tiers.iter().enumerate() {
        load[k][cand.bs(m, k)] += 1;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(order_seed));

    let mut converged = false;
    let mut rounds = 0;
    while rounds < opts.max_rounds {
        rounds += 1;
        let mut changed = false;
        for &m in &order {
            let cur = tiers[m];
            let cur_u = utility(
                model,
                cur,
                load[cur][cand.bs(m, cur)] - 1,
                cand.sinr(m, cur),
            );
            let mut best: Option<(usize, f64)> = None;
            for k in 0..k_count {
                if k == cur {
                    continue;
                }
                let u = utility(model, k, load[k][cand.bs(m, k)], cand.sinr(m, k));
                let better = match best {
                    None => true,
                    // Lower tiers are visited first, so ties keep them.
                    Some((_, bu)) => u > bu,
                };
                if better {
                    best = Some((k, u));
                }
            }
            if let Some((k, u)) = best {
                if u > cur_u {
                    load[cur][cand.bs(m, cur)] -= 1;
                    load[k][cand.bs(m, k)] += 1;
                    debug_assert!(
                        utility(model, k, load[k][cand.bs(m, k)] - 1, cand.sinr(m, k)) > cur_u
                    );
                    tiers[m] = k;
                    changed = true;
                }
            }
        }
        if !changed {
            converged = true;
            break;
        }
    }
    Assignment::from_choice(model, snapshot, cand, tiers, metric, converged, rounds)
}

/// Fraction of users for which tier k's candidate beats tier j's, with loads
/// taken from the assignment and the user itself excluded from its own BS.
pub fn pairwise_preferences(
    model: &NetworkModel,
    cand: &Candidates,
    assignment: &Assignment,
) -> Vec<Vec<f64>> {
    let k_count = cand.num_tiers();
    let n = cand.num_users();
    let mut wins = vec![vec![0.0; k_count]; k_count];
    let mut u = vec![0.0; k_count];
    for m in 0..n {
        for (k, slot) in u.iter_mut().enumerate() {
            let i = cand.bs(m, k);
            let mut others = assignment.load[k][i];
            if assignment.assoc[m] == (k, i) {
                others -= 1;
            }
            *slot = utility(model, k, others, cand.sinr(m, k));
        }
        for k in 0..k_count {
            for j in 0..k_count {
                if k != j && u[k] > u[j] {
                    wins[k][j] += 1.0;
                }
            }
        }
    }
    if n > 0 {
        for row in &mut wins {
            for v in row.iter_mut() {
                *v /= n as f64;
            }
        }
    }
    wins
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TierParams;
    use crate::sim::geometry::{Point, Window};
    use crate::sim::snapshot::Fading;

    fn two_tier() -> NetworkModel {
        let t = |bw: f64| TierParams {
            density: 1e-6,
            tx_power: 1.0,
            bandwidth: bw,
            cre_bias: 1.0,
        };
        NetworkModel {
            tiers: vec![t(10.0), t(10.0)],
            alpha: 4.0,
            noise_power: 1e-12,
            mu_density: 1e-6,
            cell_area_shape: 3.575,
        }
    }

    fn snapshot(mu: Vec<Point>) -> Snapshot {
        Snapshot {
            window: Window::new(10_000.0).unwrap(),
            bs: vec![
                vec![Point { x: 100.0, y: 100.0 }],
                vec![Point { x: 130.0, y: 100.0 }],
            ],
            mu,
            seed: 0,
        }
    }

    fn scheme(v: Scheme) -> AssociationScheme {
        AssociationScheme::new(v, RateMetric::EqualShare)
    }

    #[test]
    fn lone_user_maximizes_full_band_rate() {
        let model = two_tier();
        let s = snapshot(vec![Point { x: 110.0, y: 100.0 }]);
        let c = Candidates::compute(&model, &s, &Fading::new(3, 2)).unwrap();
        let a = associate(
            &model,
            &s,
            &c,
            scheme(Scheme::Proposed),
            0,
            &Default::default(),
        )
        .unwrap();
        let want = argmax_tier(2, |k| model.tiers[k].bandwidth * c.sinr(0, k).ln_1p());
        assert_eq!(a.assoc[0].0, want);
        assert!(a.converged);
    }

    #[test]
    fn second_user_moves_to_the_idle_tier() {
        // Both users sit next to the tier-1 BS. Sharing it halves the rate,
        // which drops below the tier-2 alternative for one of them.
        let model = two_tier();
        let s = snapshot(vec![
            Point { x: 105.0, y: 100.0 },
            Point { x: 106.0, y: 100.0 },
        ]);
        let c = Candidates::compute(&model, &s, &Fading::new(8, 2)).unwrap();

        // Exhaustive check: the pure equilibria are the assignments in which
        // no user gains by moving.
        let mut equilibria = Vec::new();
        for code in 0..4usize {
            let tiers = [code & 1, code >> 1];
            let mut ok = true;
            for m in 0..2 {
                let other = tiers[1 - m];
                let u = |k: usize| {
                    let shared = u32::from(other == k);
                    utility(&model, k, shared, c.sinr(m, k))
                };
                if u(1 - tiers[m]) > u(tiers[m]) {
                    ok = false;
                }
            }
            if ok {
                equilibria.push(tiers);
            }
        }
        assert!(!equilibria.is_empty());
        assert!(equilibria.iter().all(|t| t[0] != t[1]), "{equilibria:?}");

        let a = associate(
            &model,
            &s,
            &c,
            scheme(Scheme::Proposed),
            1,
            &Default::default(),
        )
        .unwrap();
        let got = [a.assoc[0].0, a.assoc[1].0];
        assert!(equilibria.contains(&got));
        assert_eq!(a.load.iter().flatten().sum::<u32>(), 2);
        // MaxSINR stacks both users on tier 1 when its links are stronger.
        let ms = associate(
            &model,
            &s,
            &c,
            scheme(Scheme::MaxSinr),
            1,
            &Default::default(),
        )
        .unwrap();
        if c.sinr(0, 0) > c.sinr(0, 1) && c.sinr(1, 0) > c.sinr(1, 1) {
            assert_eq!(ms.load[0][0], 2);
        }
    }

    #[test]
    fn baselines_follow_their_rules() {
        let mut model = two_tier();
        model.tiers[1].tx_power = 100.0;
        let s = snapshot(vec![Point { x: 110.0, y: 100.0 }]);
        let c = Candidates::compute(&model, &s, &Fading::new(3, 2)).unwrap();
        let run = |v| {
            associate(&model, &s, &c, scheme(v), 0, &Default::default())
                .unwrap()
                .assoc[0]
                .0
        };
        assert_eq!(run(Scheme::NearestBs), 0);
        // 10 m vs 20 m at α = 4: a 16× path-loss gap, beaten by 100× power.
        // A bias of 5 on tier 1 is not enough to undo that; 1000 is.
        assert_eq!(run(Scheme::MaxRss), 1);
        model.tiers[0].cre_bias = 5.0;
        let cre = associate(&model, &s, &c, scheme(Scheme::Cre), 0, &Default::default()).unwrap();
        assert_eq!(cre.assoc[0].0, 1);
        model.tiers[0].cre_bias = 1000.0;
        let cre = associate(&model, &s, &c, scheme(Scheme::Cre), 0, &Default::default()).unwrap();
        assert_eq!(cre.assoc[0].0, 0);
    }

    #[test]
    fn rates_follow_the_metric() {
        let model = two_tier();
        let s = snapshot(vec![
            Point { x: 105.0, y: 100.0 },
            Point { x: 104.0, y: 100.0 },
        ]);
        let c = Candidates::compute(&model, &s, &Fading::new(2, 2)).unwrap();
        let a = associate(
            &model,
            &s,
            &c,
            AssociationScheme::new(Scheme::NearestBs, RateMetric::FullBand),
            0,
            &Default::default(),
        )
        .unwrap();
        assert_eq!(a.load[0][0], 2);
        for m in 0..2 {
            let full = a.rate(&model, m, RateMetric::FullBand);
            assert_eq!(a.per_mu_rate[m], full);
            assert_eq!(a.rate(&model, m, RateMetric::EqualShare), full / 2.0);
        }
    }
}
