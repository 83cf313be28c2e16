use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical constants of the plate equation.
///
/// `beta` weighs bending, `tau` external stretching, `a` self-stretching and
/// `epsilon` is the aspect ratio of the device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub beta: f64,
    pub tau: f64,
    pub a: f64,
    pub epsilon: f64,
}

impl ModelParams {
    pub fn new(beta: f64, tau: f64, a: f64, epsilon: f64) -> Result<Self> {
        let p = ModelParams {
            beta,
            tau,
            a,
            epsilon,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::param(
                "beta",
                format!("must be > 0, got {}", self.beta),
            ));
        }
        if !(self.tau.is_finite() && self.tau >= 0.0) {
            return Err(Error::param(
                "tau",
                format!("must be >= 0, got {}", self.tau),
            ));
        }
        if !(self.a.is_finite() && self.a >= 0.0) {
            return Err(Error::param("a", format!("must be >= 0, got {}", self.a)));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::param(
                "epsilon",
                format!("must be > 0, got {}", self.epsilon),
            ));
        }
        Ok(())
    }

    pub fn eps2(&self) -> f64 {
        self.epsilon * self.epsilon
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            beta: 1.0,
            tau: 0.0,
            a: 0.0,
            epsilon: 0.5,
        }
    }
}
