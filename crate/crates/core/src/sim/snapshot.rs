//! Network realizations, fading and link SINR.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use super::geometry::{sample_ppp, Point, Window};
use super::SimError;
use crate::model::NetworkModel;

/// One realization of every BS tier and of the users.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub window: Window,
    /// `bs[k]` holds the tier-k BS positions.
    pub bs: Vec<Vec<Point>>,
    pub mu: Vec<Point>,
    /// Seed of the generator the snapshot was drawn from.
    pub seed: u64,
}

impl Snapshot {
    /// Draws all tiers, then the users, from `rng`.
    pub fn sample<R: Rng + ?Sized>(
        model: &NetworkModel,
        window: Window,
        seed: u64,
        rng: &mut R,
    ) -> Result<Self, SimError> {
        let bs: Vec<Vec<Point>> = model
            .tiers
            .iter()
            .map(|t| sample_ppp(t.density, &window, rng))
            .collect();
        let mu = sample_ppp(model.mu_density, &window, rng);
        if let Some(k) = bs.iter().position(Vec::is_empty) {
            return Err(SimError::NoBsInTier { tier: k + 1 });
        }
        Ok(Snapshot {
            window,
            bs,
            mu,
            seed,
        })
    }

    pub fn num_tiers(&self) -> usize {
        self.bs.len()
    }
}

/// Block Rayleigh fading: an Exp(1) power gain per user–BS link.
///
/// The gains of user m towards tier k come from their own ChaCha stream, so
/// any single link can be regenerated without storing the full matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fading {
    pub seed: u64,
    num_tiers: usize,
}

impl Fading {
    pub fn new(seed: u64, num_tiers: usize) -> Self {
        Fading { seed, num_tiers }
    }

    /// Gains h_{k,0}, h_{k,1}, … seen by user `mu` in tier `k`, in BS order.
    pub fn gains(&self, mu: usize, k: usize) -> impl Iterator<Item = f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream((mu * self.num_tiers + k) as u64);
        std::iter::repeat_with(move || rng.sample::<f64, _>(Exp1))
    }

    /// Gain of a single link.
    pub fn gain(&self, mu: usize, k: usize, i: usize) -> f64 {
        self.gains(mu, k).nth(i).expect("infinite iterator")
    }
}

/// r^{−α} from the squared distance.
#[inline]
pub(crate) fn path_gain(d2: f64, alpha: f64) -> f64 {
    if alpha == 4.0 {
        1.0 / (d2 * d2)
    } else {
        d2.powf(-0.5 * alpha)
    }
}

/// SINR of user `mu` served by BS `i` of tier `k`; interference comes from
/// every other tier-k BS in the window.
pub fn sinr(
    model: &NetworkModel,
    snapshot: &Snapshot,
    fading: &Fading,
    mu: usize,
    k: usize,
    i: usize,
) -> Result<f64, SimError> {
    let user = *snapshot
        .mu
        .get(mu)
        .ok_or_else(|| SimError::InvalidArgument(format!("user index {mu} out of range")))?;
    let tier = snapshot
        .bs
        .get(k)
        .ok_or_else(|| SimError::InvalidArgument(format!("tier index {k} out of range")))?;
    if i >= tier.len() {
        return Err(SimError::InvalidArgument(format!(
            "BS index {i} out of range for tier {}",
            k + 1
        )));
    }
    let mut signal = 0.0;
    let mut interference = 0.0;
    for (b, (p, h)) in tier.iter().zip(fading.gains(mu, k)).enumerate() {
        let d2 = snapshot.window.dist2(user, *p);
        if d2 == 0.0 {
            return Err(SimError::CoincidentPoints {
                mu,
                tier: k + 1,
                bs: b,
            });
        }
        let rx = h * path_gain(d2, model.alpha);
        if b == i {
            signal = rx;
        } else {
            interference += rx;
        }
    }
    let power = model.tiers[k].tx_power;
    Ok(power * signal / (power * interference + model.noise_power))
}

/// Nearest BS of every tier for every user, with the link SINR.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidates {
    num_tiers: usize,
    bs: Vec<usize>,
    dist2: Vec<f64>,
    gain: Vec<f64>,
    sinr: Vec<f64>,
}

impl Candidates {
    pub fn compute(
        model: &NetworkModel,
        snapshot: &Snapshot,
        fading: &Fading,
    ) -> Result<Self, SimError> {
        let k_count = snapshot.num_tiers();
        let n = snapshot.mu.len();
        let mut out = Candidates {
            num_tiers: k_count,
            bs: Vec::with_capacity(n * k_count),
            dist2: Vec::with_capacity(n * k_count),
            gain: Vec::with_capacity(n * k_count),
            sinr: Vec::with_capacity(n * k_count),
        };
        let mut d2s = Vec::new();
        for (m, &user) in snapshot.mu.iter().enumerate() {
            for (k, tier) in snapshot.bs.iter().enumerate() {
                d2s.clear();
                d2s.extend(tier.iter().map(|p| snapshot.window.dist2(user, *p)));
                let (near, near_d2) = d2s
                    .iter()
                    .copied()
                    .enumerate()
                    .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
                if near_d2 == 0.0 {
                    return Err(SimError::CoincidentPoints {
                        mu: m,
                        tier: k + 1,
                        bs: near,
                    });
                }
                let mut signal = 0.0;
                let mut gain = 0.0;
                let mut interference = 0.0;
                for (b, (&d2, h)) in d2s.iter().zip(fading.gains(m, k)).enumerate() {
                    let rx = h * path_gain(d2, model.alpha);
                    if b == near {
                        signal = rx;
                        gain = h;
                    } else {
                        interference += rx;
                    }
                }
                let power = model.tiers[k].tx_power;
                out.bs.push(near);
                out.dist2.push(near_d2);
                out.gain.push(gain);
                out.sinr
                    .push(power * signal / (power * interference + model.noise_power));
            }
        }
        Ok(out)
    }

    pub fn num_users(&self) -> usize {
        self.bs.len() / self.num_tiers.max(1)
    }

    pub fn num_tiers(&self) -> usize {
        self.num_tiers
    }

    /// Index of the nearest tier-k BS of user m.
    pub fn bs(&self, m: usize, k: usize) -> usize {
        self.bs[m * self.num_tiers + k]
    }

    pub fn dist2(&self, m: usize, k: usize) -> f64 {
        self.dist2[m * self.num_tiers + k]
    }

    /// Fading gain of the link to the nearest tier-k BS.
    pub fn gain(&self, m: usize, k: usize) -> f64 {
        self.gain[m * self.num_tiers + k]
    }

    pub fn sinr(&self, m: usize, k: usize) -> f64 {
        self.sinr[m * self.num_tiers + k]
    }
}
