//! TOML configuration files.
//!
//! ```toml
//! [network]
//! alpha = 4.0
//! noise_dbm = "zero"          # or a number, e.g. -104.0
//! mu_density_per_km2 = 10.0
//! cell_area_shape = 3.575     # optional
//!
//! [[tier]]
//! density_per_km2 = 0.2
//! power_dbm = 53.0
//! bandwidth_mhz = 15.0
//! cre_bias = 1.0              # optional
//! ```
//!
//! Unknown keys are rejected.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    dbm_to_watts, per_km2_to_per_m2, validate, NetworkModel, SpectrumCase, TierParams,
    ValidatedModel, ValidationErrors, DEFAULT_CELL_AREA_SHAPE,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{message}")]
    Parse {
        message: String,
        /// The offending key, when the error is an unknown field.
        key: Option<String>,
    },
    #[error("invalid model: {0}")]
    Invalid(#[from] ValidationErrors),
    #[error("unknown config path `{0}`")]
    UnknownPath(String),
    #[error("{0}")]
    Unsupported(String),
}

/// Noise power: a dBm level or the keyword `"zero"`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum NoiseSetting {
    #[default]
    Zero,
    Dbm(f64),
}

impl NoiseSetting {
    pub fn watts(self) -> f64 {
        match self {
            NoiseSetting::Zero => 0.0,
            NoiseSetting::Dbm(x) => dbm_to_watts(x),
        }
    }
}

impl fmt::Display for NoiseSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseSetting::Zero => f.write_str("zero"),
            NoiseSetting::Dbm(x) => write!(f, "{x}"),
        }
    }
}

impl Serialize for NoiseSetting {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            NoiseSetting::Zero => s.serialize_str("zero"),
            NoiseSetting::Dbm(x) => s.serialize_f64(*x),
        }
    }
}

impl<'de> Deserialize<'de> for NoiseSetting {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Int(i64),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(x) => Ok(NoiseSetting::Dbm(x)),
            Raw::Int(x) => Ok(NoiseSetting::Dbm(x as f64)),
            Raw::Word(w) if w == "zero" => Ok(NoiseSetting::Zero),
            Raw::Word(w) => Err(serde::de::Error::custom(format!(
                "noise_dbm must be a number or \"zero\", got \"{w}\""
            ))),
        }
    }
}

fn default_shape() -> f64 {
    DEFAULT_CELL_AREA_SHAPE
}

fn default_bias() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub alpha: f64,
    #[serde(default)]
    pub noise_dbm: NoiseSetting,
    pub mu_density_per_km2: f64,
    #[serde(default = "default_shape")]
    pub cell_area_shape: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TierSection {
    pub density_per_km2: f64,
    pub power_dbm: f64,
    pub bandwidth_mhz: f64,
    #[serde(default = "default_bias")]
    pub cre_bias: f64,
}

/// A configuration in human units, as read from disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub network: NetworkSection,
    #[serde(default)]
    pub tier: Vec<TierSection>,
}

fn unknown_field(message: &str) -> Option<String> {
    let start = message.find("unknown field `")? + "unknown field `".len();
    let len = message[start..].find('`')?;
    Some(message[start..start + len].to_string())
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| {
            let message = e.to_string();
            ConfigError::Parse {
                key: unknown_field(&message),
                message: message.trim_end().to_string(),
            }
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    /// The three-tier reference network in config units.
    pub fn reference_default() -> Self {
        let b = SpectrumCase::B1B2B3.bandwidths_mhz();
        let l1 = 0.2;
        ConfigFile {
            network: NetworkSection {
                alpha: 4.0,
                noise_dbm: NoiseSetting::Zero,
                mu_density_per_km2: 50.0 * l1,
                cell_area_shape: DEFAULT_CELL_AREA_SHAPE,
            },
            tier: vec![
                TierSection {
                    density_per_km2: l1,
                    power_dbm: 53.0,
                    bandwidth_mhz: b[0],
                    cre_bias: 1.0,
                },
                TierSection {
                    density_per_km2: 2.0 * l1,
                    power_dbm: 33.0,
                    bandwidth_mhz: b[1],
                    cre_bias: 1.0,
                },
                TierSection {
                    density_per_km2: 20.0 * l1,
                    power_dbm: 23.0,
                    bandwidth_mhz: b[2],
                    cre_bias: 1.0,
                },
            ],
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Converts to SI units without checking invariants.
    pub fn to_network_model(&self) -> NetworkModel {
        NetworkModel {
            tiers: self
                .tier
                .iter()
                .map(|t| {
                    TierParams::from_config_units(
                        t.density_per_km2,
                        t.power_dbm,
                        t.bandwidth_mhz,
                        t.cre_bias,
                    )
                })
                .collect(),
            alpha: self.network.alpha,
            noise_power: self.network.noise_dbm.watts(),
            mu_density: per_km2_to_per_m2(self.network.mu_density_per_km2),
            cell_area_shape: self.network.cell_area_shape,
        }
    }

    pub fn to_model(&self) -> Result<ValidatedModel, ConfigError> {
        Ok(validate(self.to_network_model())?)
    }

    pub fn apply_spectrum_case(&mut self, case: SpectrumCase) -> Result<(), ConfigError> {
        if self.tier.len() != 3 {
            return Err(ConfigError::Unsupported(format!(
                "spectrum case {case} needs exactly 3 tiers, config has {}",
                self.tier.len()
            )));
        }
        for (t, mhz) in self.tier.iter_mut().zip(case.bandwidths_mhz()) {
            t.bandwidth_mhz = mhz;
        }
        Ok(())
    }

    /// Looks up a numeric field by dotted path, e.g. `network.alpha` or
    /// `tier[2].density_per_km2` (tiers are numbered from 1).
    pub fn field_mut(&mut self, path: &str) -> Result<&mut f64, ConfigError> {
        let unknown = || ConfigError::UnknownPath(path.to_string());
        let (section, field) = path.split_once('.').ok_or_else(unknown)?;
        if section == "network" {
            return match field {
                "alpha" => Ok(&mut self.network.alpha),
                "mu_density_per_km2" => Ok(&mut self.network.mu_density_per_km2),
                "cell_area_shape" => Ok(&mut self.network.cell_area_shape),
                "noise_dbm" => {
                    if self.network.noise_dbm == NoiseSetting::Zero {
                        self.network.noise_dbm = NoiseSetting::Dbm(f64::NEG_INFINITY);
                    }
                    match &mut self.network.noise_dbm {
                        NoiseSetting::Dbm(x) => Ok(x),
                        NoiseSetting::Zero => unreachable!(),
                    }
                }
                _ => Err(unknown()),
            };
        }
        let index = section
            .strip_prefix("tier[")
            .and_then(|s| s.strip_suffix(']'))
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(unknown)?;
        if index == 0 || index > self.tier.len() {
            return Err(unknown());
        }
        let tier = &mut self.tier[index - 1];
        match field {
            "density_per_km2" => Ok(&mut tier.density_per_km2),
            "power_dbm" => Ok(&mut tier.power_dbm),
            "bandwidth_mhz" => Ok(&mut tier.bandwidth_mhz),
            "cre_bias" => Ok(&mut tier.cre_bias),
            _ => Err(unknown()),
        }
    }

    pub fn set(&mut self, path: &str, value: f64) -> Result<(), ConfigError> {
        *self.field_mut(path)? = value;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
[network]
alpha = 4.0
noise_dbm = "zero"
mu_density_per_km2 = 10.0

[[tier]]
density_per_km2 = 0.2
power_dbm = 53.0
bandwidth_mhz = 15.0

[[tier]]
density_per_km2 = 0.4
power_dbm = 33
bandwidth_mhz = 10.0
cre_bias = 4.0

[[tier]]
density_per_km2 = 4.0
power_dbm = 23.0
bandwidth_mhz = 5.0
"#;

    #[test]
    fn parses_and_converts_units() {
        let cfg = ConfigFile::parse(SAMPLE).unwrap();
        let m = cfg.to_model().unwrap();
        assert_eq!(m.num_tiers(), 3);
        assert!((m.tiers[0].density - 2e-7).abs() < 1e-20);
        assert!((m.tiers[1].tx_power - 1.995_262_314_968_88).abs() < 1e-12);
        assert_eq!(m.tiers[2].bandwidth, 5.0e6);
        assert_eq!(m.tiers[1].cre_bias, 4.0);
        assert_eq!(m.tiers[0].cre_bias, 1.0);
        assert_eq!(m.noise_power, 0.0);
        assert_eq!(m.cell_area_shape, DEFAULT_CELL_AREA_SHAPE);
        assert_eq!(
            *m,
            NetworkModel::reference_default().tiers_with_bias(1, 4.0)
        );
    }

    impl NetworkModel {
        fn tiers_with_bias(mut self, i: usize, bias: f64) -> Self {
            self.tiers[i].cre_bias = bias;
            self
        }
    }

    #[test]
    fn unknown_key_is_named() {
        let text = SAMPLE.replace("alpha = 4.0", "alpha = 4.0\nalhpa = 3.0");
        match ConfigFile::parse(&text) {
            Err(ConfigError::Parse { key, .. }) => assert_eq!(key.as_deref(), Some("alhpa")),
            other => panic!("expected parse error, got {other:?}"),
        }
        let text = SAMPLE.replace("cre_bias = 4.0", "cre_bais = 4.0");
        match ConfigFile::parse(&text) {
            Err(ConfigError::Parse { key, .. }) => assert_eq!(key.as_deref(), Some("cre_bais")),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn noise_in_dbm() {
        let text = SAMPLE.replace("noise_dbm = \"zero\"", "noise_dbm = -90.0");
        let m = ConfigFile::parse(&text).unwrap().to_model().unwrap();
        assert!((m.noise_power - 1e-12).abs() < 1e-24);
        let bad = SAMPLE.replace("noise_dbm = \"zero\"", "noise_dbm = \"none\"");
        assert!(ConfigFile::parse(&bad).is_err());
    }

    #[test]
    fn dotted_paths() {
        let mut cfg = ConfigFile::parse(SAMPLE).unwrap();
        cfg.set("tier[2].density_per_km2", 0.7).unwrap();
        cfg.set("network.alpha", 3.5).unwrap();
        assert_eq!(cfg.tier[1].density_per_km2, 0.7);
        assert_eq!(cfg.network.alpha, 3.5);
        assert!(matches!(
            cfg.set("tier[4].power_dbm", 1.0),
            Err(ConfigError::UnknownPath(_))
        ));
        assert!(matches!(
            cfg.set("network.beta", 1.0),
            Err(ConfigError::UnknownPath(_))
        ));
        cfg.set("network.noise_dbm", -100.0).unwrap();
        assert_eq!(cfg.network.noise_dbm, NoiseSetting::Dbm(-100.0));
    }

    #[test]
    fn invalid_values_surface_all_errors() {
        let text = SAMPLE
            .replace("alpha = 4.0", "alpha = 2.0")
            .replace("density_per_km2 = 0.4", "density_per_km2 = 0.0");
        match ConfigFile::parse(&text).unwrap().to_model() {
            Err(ConfigError::Invalid(errs)) => assert_eq!(errs.0.len(), 2),
            other => panic!("expected invalid model, got {other:?}"),
        }
    }

    #[test]
    fn default_round_trips_through_toml() {
        let cfg = ConfigFile::reference_default();
        assert_eq!(ConfigFile::parse(&cfg.to_toml()).unwrap(), cfg);
        assert_eq!(*cfg.to_model().unwrap(), NetworkModel::reference_default());
    }
}
