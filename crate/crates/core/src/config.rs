//! Flat TOML configuration shared by every module.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::BacksteppingGains;
use crate::dob::DobConfig;
use crate::dynamics::{Model, PhysParams};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config value {key} = {value}: {reason}")]
    Invalid {
        key: &'static str,
        value: f64,
        reason: &'static str,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub mass: f64,
    pub arm: f64,
    pub gravity: f64,
    pub jx: f64,
    pub jy: f64,
    pub jz: f64,
    pub kf: f64,
    pub km: f64,
    pub dt: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    pub k5: f64,
    pub k6: f64,
    pub kz_p: f64,
    pub kz_d: f64,
    pub kxy_p: f64,
    pub kxy_d: f64,
    pub dob_enabled: bool,
    /// Zero disables the rolloff.
    pub d_rolloff_rad_s: f64,
    /// Applied-estimate clamp as a multiple of hover thrust; zero disables
    /// compensation while the observer still runs.
    pub estimate_sat: f64,
    /// Load plateau per weight class (N, negative pulls down).
    pub base_plateau: f64,
    pub n_classes: usize,
    pub n_taps: usize,
    pub model: Model,
}

impl Default for Config {
    fn default() -> Self {
        let p = PhysParams::default();
        let g = BacksteppingGains::default();
        let d = DobConfig::default();
        Self {
            mass: p.mass,
            arm: p.arm,
            gravity: p.gravity,
            jx: p.jx,
            jy: p.jy,
            jz: p.jz,
            kf: p.kf,
            km: p.km,
            dt: 0.01,
            k1: g.k[0],
            k2: g.k[1],
            k3: g.k[2],
            k4: g.k[3],
            k5: g.k[4],
            k6: g.k[5],
            kz_p: g.kz_p,
            kz_d: g.kz_d,
            kxy_p: g.kxy_p,
            kxy_d: g.kxy_d,
            dob_enabled: d.enabled,
            d_rolloff_rad_s: d.rolloff.unwrap_or(0.0),
            estimate_sat: d.estimate_sat,
            base_plateau: -1.5,
            n_classes: 5,
            n_taps: 8,
            model: Model::Full,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Config = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("mass", self.mass),
            ("arm", self.arm),
            ("gravity", self.gravity),
            ("jx", self.jx),
            ("jy", self.jy),
            ("jz", self.jz),
            ("kf", self.kf),
            ("km", self.km),
            ("dt", self.dt),
            ("k1", self.k1),
            ("k2", self.k2),
            ("k3", self.k3),
            ("k4", self.k4),
            ("k5", self.k5),
            ("k6", self.k6),
            ("kz_p", self.kz_p),
            ("kz_d", self.kz_d),
            ("kxy_p", self.kxy_p),
            ("kxy_d", self.kxy_d),
        ];
        for (key, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(ConfigError::Invalid {
                    key,
                    value,
                    reason: "must be positive and finite",
                });
            }
        }
        if !(self.estimate_sat.is_finite() && self.estimate_sat >= 0.0) {
            return Err(ConfigError::Invalid {
                key: "estimate_sat",
                value: self.estimate_sat,
                reason: "must be zero (estimate never applied) or positive",
            });
        }
        if !(self.d_rolloff_rad_s.is_finite() && self.d_rolloff_rad_s >= 0.0) {
            return Err(ConfigError::Invalid {
                key: "d_rolloff_rad_s",
                value: self.d_rolloff_rad_s,
                reason: "must be zero (off) or positive",
            });
        }
        if self.d_rolloff_rad_s >= std::f64::consts::PI / self.dt {
            return Err(ConfigError::Invalid {
                key: "d_rolloff_rad_s",
                value: self.d_rolloff_rad_s,
                reason: "must lie below the Nyquist frequency",
            });
        }
        if !self.base_plateau.is_finite() {
            return Err(ConfigError::Invalid {
                key: "base_plateau",
                value: self.base_plateau,
                reason: "must be finite",
            });
        }
        if self.n_classes == 0 {
            return Err(ConfigError::Invalid {
                key: "n_classes",
                value: 0.0,
                reason: "need at least one class",
            });
        }
        if self.n_taps == 0 {
            return Err(ConfigError::Invalid {
                key: "n_taps",
                value: 0.0,
                reason: "need at least one tap",
            });
        }
        Ok(())
    }

    pub fn phys(&self) -> PhysParams {
        PhysParams {
            mass: self.mass,
            arm: self.arm,
            gravity: self.gravity,
            jx: self.jx,
            jy: self.jy,
            jz: self.jz,
            kf: self.kf,
            km: self.km,
        }
    }

    pub fn gains(&self) -> BacksteppingGains {
        BacksteppingGains {
            k: [self.k1, self.k2, self.k3, self.k4, self.k5, self.k6],
            kz_p: self.kz_p,
            kz_d: self.kz_d,
            kxy_p: self.kxy_p,
            kxy_d: self.kxy_d,
        }
    }

    pub fn dob(&self) -> DobConfig {
        DobConfig {
            enabled: self.dob_enabled,
            rolloff: (self.d_rolloff_rad_s > 0.0).then_some(self.d_rolloff_rad_s),
            estimate_sat: self.estimate_sat,
        }
    }
}
