//! Physical parameters of the driven two-level emitter.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of a laser-driven two-level atom observed by a photodetector.
///
/// `gamma` sets the time unit; `omega` and `delta` are angular frequencies in
/// the same unit system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomParams {
    /// Rabi frequency.
    pub omega: f64,
    /// Laser-atom detuning.
    pub delta: f64,
    /// Spontaneous decay rate.
    pub gamma: f64,
    /// Detector efficiency in (0, 1].
    pub eta: f64,
}

impl AtomParams {
    pub fn new(omega: f64, delta: f64, gamma: f64, eta: f64) -> Result<Self> {
        let p = Self { omega, delta, gamma, eta };
        p.validate()?;
        Ok(p)
    }

    /// Resonant drive, unit decay rate and perfect detection.
    pub fn resonant(omega: f64) -> Result<Self> {
        Self::new(omega, 0.0, 1.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.omega, self.delta, self.gamma, self.eta]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter(format!("non-finite value in {self:?}")));
        }
        if self.gamma <= 0.0 {
            return Err(Error::InvalidParameter(format!("gamma must be > 0, got {}", self.gamma)));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::InvalidParameter(format!("eta must lie in (0, 1], got {}", self.eta)));
        }
        if self.omega < 0.0 {
            return Err(Error::InvalidParameter(format!("omega must be >= 0, got {}", self.omega)));
        }
        Ok(())
    }

    pub fn with_eta(self, eta: f64) -> Result<Self> {
        Self::new(self.omega, self.delta, self.gamma, eta)
    }

    /// Copy of `self` with the selected parameter replaced.
    pub fn with_theta(self, theta: Theta, value: f64) -> Result<Self> {
        let mut p = self;
        match theta {
            Theta::Omega => p.omega = value,
            Theta::Delta => p.delta = value,
        }
        p.validate()?;
        Ok(p)
    }

    pub fn theta(&self, theta: Theta) -> f64 {
        match theta {
            Theta::Omega => self.omega,
            Theta::Delta => self.delta,
        }
    }

    /// Largest angular frequency in the problem; sets integrator and grid scales.
    pub fn fastest_rate(&self) -> f64 {
        let generalized = self.omega.hypot(self.delta);
        generalized.max(self.gamma)
    }

    /// Default RK4 step, `1e-3 / max(omega, |delta|, gamma)`.
    pub fn default_dt(&self) -> f64 {
        1e-3 / self.omega.max(self.delta.abs()).max(self.gamma)
    }
}

/// Scalar parameter selected for estimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Theta {
    Omega,
    Delta,
}

impl Theta {
    pub fn name(self) -> &'static str {
        match self {
            Theta::Omega => "omega",
            Theta::Delta => "delta",
        }
    }
}

impl fmt::Display for Theta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Theta {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "omega" => Ok(Theta::Omega),
            "delta" => Ok(Theta::Delta),
            other => Err(Error::InvalidParameter(format!(
                "unknown parameter '{other}', expected 'omega' or 'delta'"
            ))),
        }
    }
}
