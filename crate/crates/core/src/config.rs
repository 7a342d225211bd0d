//! Mechanism design parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One mechanism design problem: correct-release probability `eta`,
/// noise half-width `D`, privacy parameter `epsilon`, and optionally the
/// maximum true count `N` (only needed for the data-dependent LP).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConfigRepr", into = "ConfigRepr")]
pub struct MechanismConfig {
    eta: f64,
    d: u64,
    epsilon: f64,
    max_count: Option<u64>,
}

#[derive(Serialize, Deserialize)]
struct ConfigRepr {
    eta: f64,
    #[serde(rename = "D")]
    d: u64,
    epsilon: f64,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    max_count: Option<u64>,
}

impl TryFrom<ConfigRepr> for MechanismConfig {
    type Error = Error;

    fn try_from(r: ConfigRepr) -> Result<Self> {
        let cfg = MechanismConfig::new(r.eta, r.d, r.epsilon)?;
        match r.max_count {
            Some(n) => cfg.with_max_count(n),
            None => Ok(cfg),
        }
    }
}

impl From<MechanismConfig> for ConfigRepr {
    fn from(c: MechanismConfig) -> Self {
        ConfigRepr {
            eta: c.eta,
            d: c.d,
            epsilon: c.epsilon,
            max_count: c.max_count,
        }
    }
}

impl MechanismConfig {
    pub fn new(eta: f64, d: u64, epsilon: f64) -> Result<Self> {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "eta must lie in the open interval (0, 1), got {eta}"
            )));
        }
        if d == 0 {
            return Err(Error::InvalidConfig("D must be at least 1".into()));
        }
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be finite and non-negative, got {epsilon}"
            )));
        }
        Ok(MechanismConfig {
            eta,
            d,
            epsilon,
            max_count: None,
        })
    }

    pub fn with_max_count(mut self, max_count: u64) -> Result<Self> {
        if max_count == 0 {
            return Err(Error::InvalidConfig("N must be at least 1".into()));
        }
        self.max_count = Some(max_count);
        Ok(self)
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Probability of releasing a wrong count, `1 - eta`.
    pub fn eta_bar(&self) -> f64 {
        1.0 - self.eta
    }

    pub fn d(&self) -> u64 {
        self.d
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn max_count(&self) -> Option<u64> {
        self.max_count
    }

    /// `E = e^epsilon`.
    pub fn e(&self) -> f64 {
        self.epsilon.exp()
    }

    /// `B = 2 / (1 - eta)`.
    pub fn b(&self) -> f64 {
        2.0 / self.eta_bar()
    }

    /// `C = 2 eta / (1 - eta)`.
    pub fn c(&self) -> f64 {
        2.0 * self.eta / self.eta_bar()
    }
}
