//! Network configuration shared by the analytic and simulation paths.
//!
//! Everything is stored in SI units: densities in 1/m², powers in W and
//! bandwidths in Hz. Human-facing units (1/km², dBm, MHz) are converted once,
//! on the way in, by [`TierParams::from_config_units`] and [`config`].

pub mod config;

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Square metres per square kilometre.
pub const M2_PER_KM2: f64 = 1.0e6;

/// Voronoi cell-area gamma shape used when a config does not override it.
pub const DEFAULT_CELL_AREA_SHAPE: f64 = 3.575;

/// Converts a power level in dBm to watts.
pub fn dbm_to_watts(p_dbm: f64) -> f64 {
    10f64.powf((p_dbm - 30.0) / 10.0)
}

/// Converts a per-km² density to per-m².
pub fn per_km2_to_per_m2(density: f64) -> f64 {
    density / M2_PER_KM2
}

/// One tier of base stations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TierParams {
    /// BS intensity [1/m²].
    pub density: f64,
    /// Transmit power [W].
    pub tx_power: f64,
    /// Bandwidth [Hz].
    pub bandwidth: f64,
    /// Linear bias applied by the cell range expansion baseline.
    pub cre_bias: f64,
}

impl TierParams {
    pub fn from_config_units(
        density_per_km2: f64,
        power_dbm: f64,
        bandwidth_mhz: f64,
        cre_bias: f64,
    ) -> Self {
        TierParams {
            density: per_km2_to_per_m2(density_per_km2),
            tx_power: dbm_to_watts(power_dbm),
            bandwidth: bandwidth_mhz * 1.0e6,
            cre_bias,
        }
    }
}

/// K-tier network with a common path-loss exponent and a PPP of mobile users.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkModel {
    pub tiers: Vec<TierParams>,
    /// Path-loss exponent.
    pub alpha: f64,
    /// Noise power [W]; zero gives the interference-limited regime.
    pub noise_power: f64,
    /// Mobile-user intensity [1/m²].
    pub mu_density: f64,
    /// Shape of the gamma law approximating normalized Voronoi cell areas.
    pub cell_area_shape: f64,
}

/// Bandwidth allocations across three tiers, named by their ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpectrumCase {
    /// 15 / 10 / 5 MHz.
    B1B2B3,
    /// 15 / 5 / 10 MHz.
    B1B3B2,
    /// 5 / 15 / 10 MHz.
    B2B3B1,
    /// 5 / 10 / 15 MHz.
    B3B2B1,
}

impl SpectrumCase {
    pub const ALL: [SpectrumCase; 4] = [
        SpectrumCase::B1B2B3,
        SpectrumCase::B1B3B2,
        SpectrumCase::B2B3B1,
        SpectrumCase::B3B2B1,
    ];

    /// Bandwidths of tiers 1..3 in MHz.
    pub fn bandwidths_mhz(self) -> [f64; 3] {
        match self {
            SpectrumCase::B1B2B3 => [15.0, 10.0, 5.0],
            SpectrumCase::B1B3B2 => [15.0, 5.0, 10.0],
            SpectrumCase::B2B3B1 => [5.0, 15.0, 10.0],
            SpectrumCase::B3B2B1 => [5.0, 10.0, 15.0],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SpectrumCase::B1B2B3 => "B1>B2>B3",
            SpectrumCase::B1B3B2 => "B1>B3>B2",
            SpectrumCase::B2B3B1 => "B2>B3>B1",
            SpectrumCase::B3B2B1 => "B3>B2>B1",
        }
    }
}

impl fmt::Display for SpectrumCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SpectrumCase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s.chars().filter(|c| c.is_ascii_digit()).collect();
        match key.as_str() {
            "123" => Ok(SpectrumCase::B1B2B3),
            "132" => Ok(SpectrumCase::B1B3B2),
            "231" => Ok(SpectrumCase::B2B3B1),
            "321" => Ok(SpectrumCase::B3B2B1),
            _ => Err(format!(
                "unknown spectrum case `{s}` (expected one of B1>B2>B3, B1>B3>B2, B2>B3>B1, B3>B2>B1)"
            )),
        }
    }
}

impl NetworkModel {
    /// Three-tier macro/pico/femto network: λ₂ = 2λ₁, λ₃ = 20λ₁, λ_u = 50λ₁,
    /// powers 53/33/23 dBm, α = 4, no noise, bandwidths from `case`.
    pub fn three_tier(lambda1_per_km2: f64, case: SpectrumCase) -> Self {
        let b = case.bandwidths_mhz();
        let tiers = vec![
            TierParams::from_config_units(lambda1_per_km2, 53.0, b[0], 1.0),
            TierParams::from_config_units(2.0 * lambda1_per_km2, 33.0, b[1], 1.0),
            TierParams::from_config_units(20.0 * lambda1_per_km2, 23.0, b[2], 1.0),
        ];
        NetworkModel {
            tiers,
            alpha: 4.0,
            noise_power: 0.0,
            mu_density: per_km2_to_per_m2(50.0 * lambda1_per_km2),
            cell_area_shape: DEFAULT_CELL_AREA_SHAPE,
        }
    }

    /// [`NetworkModel::three_tier`] with λ₁ = 0.2/km² and (B1>B2>B3).
    pub fn reference_default() -> Self {
        Self::three_tier(0.2, SpectrumCase::B1B2B3)
    }

    pub fn num_tiers(&self) -> usize {
        self.tiers.len()
    }

    /// Replaces the three tier bandwidths by a named allocation.
    ///
    /// Panics if the model does not have exactly three tiers.
    pub fn with_spectrum_case(mut self, case: SpectrumCase) -> Self {
        assert_eq!(
            self.tiers.len(),
            3,
            "spectrum cases are defined for three tiers"
        );
        for (tier, mhz) in self.tiers.iter_mut().zip(case.bandwidths_mhz()) {
            tier.bandwidth = mhz * 1.0e6;
        }
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_noise_power(mut self, noise_power: f64) -> Self {
        self.noise_power = noise_power;
        self
    }
}

/// A single violated model invariant. Tier numbers are 1-based.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("path-loss exponent must exceed 2, got {alpha}")]
    InvalidAlpha { alpha: f64 },
    #[error("tier {tier}: density must be positive, got {value}")]
    NonPositiveDensity { tier: usize, value: f64 },
    #[error("tier {tier}: transmit power must be positive, got {value}")]
    NonPositivePower { tier: usize, value: f64 },
    #[error("tier {tier}: bandwidth must be positive, got {value}")]
    NonPositiveBandwidth { tier: usize, value: f64 },
    #[error("tier {tier}: CRE bias must be positive, got {value}")]
    NonPositiveBias { tier: usize, value: f64 },
    #[error("noise power must be non-negative, got {value}")]
    NegativeNoise { value: f64 },
    #[error("mobile-user density must be positive, got {value}")]
    NonPositiveUserDensity { value: f64 },
    #[error("cell-area shape must be positive, got {value}")]
    NonPositiveCellAreaShape { value: f64 },
    #[error("network needs at least one tier")]
    NoTiers,
}

/// Every invariant violation found in a model.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ValidationErrors(pub Vec<ModelError>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

/// A [`NetworkModel`] whose invariants have been checked.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedModel(NetworkModel);

impl ValidatedModel {
    pub fn into_inner(self) -> NetworkModel {
        self.0
    }
}

impl Deref for ValidatedModel {
    type Target = NetworkModel;

    fn deref(&self) -> &NetworkModel {
        &self.0
    }
}

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

/// Checks every invariant and reports all violations, not just the first.
pub fn validate(model: NetworkModel) -> Result<ValidatedModel, ValidationErrors> {
    let mut errors = Vec::new();
    if !(model.alpha.is_finite() && model.alpha > 2.0) {
        errors.push(ModelError::InvalidAlpha { alpha: model.alpha });
    }
    if !(model.noise_power.is_finite() && model.noise_power >= 0.0) {
        errors.push(ModelError::NegativeNoise {
            value: model.noise_power,
        });
    }
    if !positive(model.mu_density) {
        errors.push(ModelError::NonPositiveUserDensity {
            value: model.mu_density,
        });
    }
    if !positive(model.cell_area_shape) {
        errors.push(ModelError::NonPositiveCellAreaShape {
            value: model.cell_area_shape,
        });
    }
    if model.tiers.is_empty() {
        errors.push(ModelError::NoTiers);
    }
    for (i, t) in model.tiers.iter().enumerate() {
        let tier = i + 1;
        if !positive(t.density) {
            errors.push(ModelError::NonPositiveDensity {
                tier,
                value: t.density,
            });
        }
        if !positive(t.tx_power) {
            errors.push(ModelError::NonPositivePower {
                tier,
                value: t.tx_power,
            });
        }
        if !positive(t.bandwidth) {
            errors.push(ModelError::NonPositiveBandwidth {
                tier,
                value: t.bandwidth,
            });
        }
        if !positive(t.cre_bias) {
            errors.push(ModelError::NonPositiveBias {
                tier,
                value: t.cre_bias,
            });
        }
    }
    if errors.is_empty() {
        Ok(ValidatedModel(model))
    } else {
        Err(ValidationErrors(errors))
    }
}

/// Association rule used by the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Maximize B/(N+1)·ln(1+SINR) over the nearest BS of each tier.
    Proposed,
    /// Cell range expansion: biased mean received power.
    Cre,
    MaxRss,
    MaxSinr,
    NearestBs,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::Proposed,
        Scheme::Cre,
        Scheme::MaxRss,
        Scheme::MaxSinr,
        Scheme::NearestBs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::Cre => "cre",
            Scheme::MaxRss => "max_rss",
            Scheme::MaxSinr => "max_sinr",
            Scheme::NearestBs => "nearest",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scheme::ALL
            .into_iter()
            .find(|v| v.name() == s || (s == "nearest_bs" && *v == Scheme::NearestBs))
            .ok_or_else(|| {
                format!(
                    "unknown scheme `{s}` (expected proposed, cre, max_rss, max_sinr or nearest)"
                )
            })
    }
}

/// How a user's rate is computed from its link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateMetric {
    /// B_k·ln(1+SINR): the whole tier bandwidth.
    #[default]
    FullBand,
    /// B_k/N·ln(1+SINR): bandwidth split equally among the N users of the BS.
    EqualShare,
}

impl RateMetric {
    pub fn name(self) -> &'static str {
        match self {
            RateMetric::FullBand => "full_band",
            RateMetric::EqualShare => "equal_share",
        }
    }
}

impl fmt::Display for RateMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RateMetric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full_band" => Ok(RateMetric::FullBand),
            "equal_share" => Ok(RateMetric::EqualShare),
            _ => Err(format!(
                "unknown rate metric `{s}` (expected full_band or equal_share)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AssociationScheme {
    pub variant: Scheme,
    pub rate_metric: RateMetric,
}

impl AssociationScheme {
    pub fn new(variant: Scheme, rate_metric: RateMetric) -> Self {
        AssociationScheme {
            variant,
            rate_metric,
        }
    }
}
