use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::activations::Activation;
use crate::capacity::{EstimatorConfig, Ridge, DEFAULT_RELATIVE_RIDGE};
use crate::dynamics::default_washout;
use crate::ensembles::Ensemble;
use crate::error::{Error, Result};

/// `(delta, d)` used to place the automatic grid for activations that are
/// not piecewise sigmoids. Plot bounds only.
pub const AUTO_GRID_DELTA: f64 = 0.1;
pub const AUTO_GRID_D: f64 = 10.0;

/// Strings through `Display`/`FromStr`, so configs say `activation = "tanh"`.
mod as_str {
    use super::*;

    pub fn serialize<T: Display, S: Serializer>(
        value: &T,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(value)
    }

    pub fn deserialize<'de, T, D>(d: D) -> std::result::Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GridScale {
    #[default]
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaBounds {
    /// `[min sigma_lower, max sigma_upper]` over every reservoir in the sweep.
    Auto,
    Explicit(f64, f64),
}

impl Serialize for SigmaBounds {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            SigmaBounds::Auto => s.serialize_str("auto"),
            SigmaBounds::Explicit(lo, hi) => [lo, hi].serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for SigmaBounds {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Word(String),
            Pair([f64; 2]),
        }
        match Repr::deserialize(d)? {
            Repr::Word(w) if w.eq_ignore_ascii_case("auto") => Ok(SigmaBounds::Auto),
            Repr::Word(w) => Err(serde::de::Error::custom(format!(
                "sigma bounds must be \"auto\" or [lower, upper], got \"{w}\""
            ))),
            Repr::Pair([lo, hi]) => Ok(SigmaBounds::Explicit(lo, hi)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaGrid {
    pub count: usize,
    #[serde(default)]
    pub scale: GridScale,
    pub bounds: SigmaBounds,
}

impl SigmaGrid {
    /// Log-spaced points from `lo` to `hi`, both included.
    pub fn points(&self, lo: f64, hi: f64) -> Vec<f64> {
        log_grid(lo, hi, self.count)
    }
}

pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|k| {
            if k == 0 {
                lo
            } else if k + 1 == count {
                hi
            } else {
                (a + (b - a) * k as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}

fn default_n() -> usize {
    30
}
fn default_norm() -> f64 {
    0.95
}
fn default_length() -> usize {
    100_000
}
fn default_replications() -> usize {
    10
}
fn default_ridge() -> f64 {
    DEFAULT_RELATIVE_RIDGE
}
fn default_true() -> bool {
    true
}

/// Parameters of a sigma sweep. Loaded from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_norm")]
    pub spectral_norm: f64,
    #[serde(with = "as_str")]
    pub ensemble: Ensemble,
    #[serde(with = "as_str")]
    pub activation: Activation,
    pub sigma_grid: SigmaGrid,
    #[serde(default = "default_length")]
    pub trajectory_length: usize,
    /// Defaults to `max(1000, 10 n)`.
    #[serde(default)]
    pub washout: Option<usize>,
    /// Reservoir redraws per grid point.
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub tau_max: Option<usize>,
    /// Relative ridge scale.
    #[serde(default = "default_ridge")]
    pub ridge: f64,
    #[serde(default = "default_true")]
    pub early_stop: bool,
    #[serde(default)]
    pub base_seed: u64,
    /// Reuse one reservoir per replication across the whole grid.
    #[serde(default)]
    pub fixed_reservoir: bool,
}

impl SweepConfig {
    /// Desk-scale defaults for a given ensemble and activation.
    pub fn new(ensemble: Ensemble, activation: Activation) -> Self {
        Self {
            n: default_n(),
            spectral_norm: default_norm(),
            ensemble,
            activation,
            sigma_grid: SigmaGrid {
                count: 12,
                scale: GridScale::Log,
                bounds: SigmaBounds::Auto,
            },
            trajectory_length: default_length(),
            washout: None,
            replications: default_replications(),
            tau_max: None,
            ridge: default_ridge(),
            early_stop: true,
            base_seed: 0,
            fixed_reservoir: false,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serde(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.n == 0 {
            return fail("n must be at least 1".into());
        }
        if !(self.spectral_norm > 0.0 && self.spectral_norm < 1.0) {
            return fail(format!(
                "spectral_norm must lie in (0, 1), got {}",
                self.spectral_norm
            ));
        }
        if self.sigma_grid.count < 2 {
            return fail(format!(
                "sigma_grid.count must be at least 2, got {}",
                self.sigma_grid.count
            ));
        }
        if let SigmaBounds::Explicit(lo, hi) = self.sigma_grid.bounds {
            if !(lo > 0.0 && lo < hi && hi.is_finite()) {
                return fail(format!(
                    "sigma bounds need 0 < lower < upper, got [{lo}, {hi}]"
                ));
            }
        }
        if self.replications == 0 {
            return fail("replications must be at least 1".into());
        }
        if self.trajectory_length <= self.n + 1 {
            return fail("trajectory_length must exceed n + 1".into());
        }
        if let Some(t) = self.tau_max {
            if t == 0 || t + self.n >= self.trajectory_length {
                return fail(format!("tau_max = {t} is out of range"));
            }
        }
        if !(self.ridge >= 0.0) {
            return fail(format!("ridge must be nonnegative, got {}", self.ridge));
        }
        if matches!(self.ensemble, Ensemble::Custom) {
            return fail("custom ensembles cannot be swept".into());
        }
        Ok(())
    }

    pub fn washout(&self) -> usize {
        self.washout.unwrap_or_else(|| default_washout(self.n))
    }

    pub fn estimator(&self) -> EstimatorConfig {
        EstimatorConfig {
            tau_max: self.tau_max,
            ridge: Ridge::Relative(self.ridge),
            early_stop: self.early_stop,
        }
    }

    /// `(delta, d)` that place the automatic grid.
    pub fn grid_threshold_params(&self) -> (f64, f64) {
        self.activation
            .piecewise_params()
            .unwrap_or((AUTO_GRID_DELTA, AUTO_GRID_D))
    }
}
