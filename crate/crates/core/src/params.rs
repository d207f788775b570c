use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Budget split and error parameters for one release.
///
/// After the dedup remap the median utility and the interval utility both
/// have sensitivity 1 and the median utility is 1-Lipschitz, which is what
/// [`PrivacyParams::new`] fills in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyParams {
    pub eps_total: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub beta_total: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub step: i64,
    pub delta_u: f64,
    pub delta_q: f64,
    pub lipschitz: f64,
}

impl PrivacyParams {
    pub fn new(eps1: f64, eps2: f64, beta1: f64, beta2: f64, step: i64) -> Result<Self> {
        let params = PrivacyParams {
            eps_total: eps1 + eps2,
            eps1,
            eps2,
            beta_total: beta1 + beta2,
            beta1,
            beta2,
            step,
            delta_u: 1.0,
            delta_q: 1.0,
            lipschitz: 1.0,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("eps1", self.eps1)?;
        positive("eps2", self.eps2)?;
        positive("eps_total", self.eps_total)?;
        positive("delta_u", self.delta_u)?;
        positive("delta_q", self.delta_q)?;
        positive("lipschitz", self.lipschitz)?;
        if ((self.eps1 + self.eps2) - self.eps_total).abs() > 1e-9 * self.eps_total {
            return Err(Error::InvalidParameter(format!(
                "eps1 + eps2 = {} does not match eps_total = {}",
                self.eps1 + self.eps2,
                self.eps_total
            )));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(b > 0.0 && b < 1.0) {
                return Err(Error::InvalidParameter(format!("{name} must lie in (0, 1), got {b}")));
            }
        }
        if !(self.beta_total > 0.0 && self.beta_total < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must lie in (0, 1), got {}",
                self.beta_total
            )));
        }
        if self.beta1 + self.beta2 > self.beta_total * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "beta1 + beta2 = {} exceeds beta = {}",
                self.beta1 + self.beta2,
                self.beta_total
            )));
        }
        if self.step < 1 {
            return Err(Error::InvalidParameter(format!("step must be >= 1, got {}", self.step)));
        }
        Ok(())
    }
}
