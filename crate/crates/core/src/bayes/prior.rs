//! Prior densities for the toxicity and efficacy coefficients.
//!
//! * `alpha0`, `beta0`: Cauchy(0, 10)
//! * `beta1`, `beta2`: Cauchy(0, 2.5)
//! * `alpha1`, `alpha2`: Gamma(shape 0.5, rate 0.5)
//! * `beta3`, `beta4` when included: inverse-moment (iMOM) prior
//!
//! Coefficients excluded by the model carry a point mass at zero and simply do
//! not contribute.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::BayesError;
use crate::{EfficacyParams, ToxicityParams};

pub const INTERCEPT_SCALE: f64 = 10.0;
pub const SLOPE_SCALE: f64 = 2.5;
pub const GAMMA_SHAPE: f64 = 0.5;
pub const GAMMA_RATE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IMomHyperparams {
    pub k: f64,
    pub nu: f64,
    pub tau: f64,
}

impl Default for IMomHyperparams {
    fn default() -> Self {
        Self {
            k: 1.0,
            nu: 1.0,
            tau: 0.3,
        }
    }
}

impl IMomHyperparams {
    pub fn validate(&self) -> Result<(), BayesError> {
        for (name, v) in [("k", self.k), ("nu", self.nu), ("tau", self.tau)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(BayesError::InvalidConfig(format!("iMOM {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// `ln(k tau^{nu/2} / Gamma(nu / 2k))`.
    fn log_norm(&self) -> f64 {
        self.k.ln() + 0.5 * self.nu * self.tau.ln() - ln_gamma(self.nu / (2.0 * self.k))
    }

    /// Log density of the iMOM prior; `-inf` at zero.
    pub fn log_density(&self, beta: f64) -> f64 {
        if beta == 0.0 {
            return f64::NEG_INFINITY;
        }
        let b2 = beta * beta;
        self.log_norm() - (self.nu + 1.0) * beta.abs().ln() - (self.tau / b2).powf(self.k)
    }

    pub fn density(&self, beta: f64) -> f64 {
        self.log_density(beta).exp()
    }
}

pub fn cauchy_log_density(x: f64, scale: f64) -> f64 {
    let z = x / scale;
    -(PI * scale).ln() - (z * z).ln_1p()
}

pub fn gamma_log_density(x: f64, shape: f64, rate: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
}

/// Precomputed prior used inside the sampler.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PriorTerms {
    cauchy_wide: f64,
    cauchy_narrow: f64,
    gamma_norm: f64,
    imom: IMomHyperparams,
    imom_norm: f64,
}

impl PriorTerms {
    pub(crate) fn new(imom: IMomHyperparams) -> Self {
        Self {
            cauchy_wide: -(PI * INTERCEPT_SCALE).ln(),
            cauchy_narrow: -(PI * SLOPE_SCALE).ln(),
            gamma_norm: GAMMA_SHAPE * GAMMA_RATE.ln() - ln_gamma(GAMMA_SHAPE),
            imom,
            imom_norm: imom.log_norm(),
        }
    }

    pub(crate) fn intercept(&self, x: f64) -> f64 {
        let z = x / INTERCEPT_SCALE;
        self.cauchy_wide - (z * z).ln_1p()
    }

    pub(crate) fn slope(&self, x: f64) -> f64 {
        let z = x / SLOPE_SCALE;
        self.cauchy_narrow - (z * z).ln_1p()
    }

    /// Gamma prior on `alpha = exp(u)` plus the `ln |d alpha / d u| = u` Jacobian.
    pub(crate) fn log_slope_on_log_scale(&self, u: f64) -> f64 {
        let x = u.exp();
        self.gamma_norm + (GAMMA_SHAPE - 1.0) * u - GAMMA_RATE * x + u
    }

    pub(crate) fn quadratic(&self, beta: f64) -> f64 {
        if beta == 0.0 {
            return f64::NEG_INFINITY;
        }
        let h = &self.imom;
        self.imom_norm - (h.nu + 1.0) * beta.abs().ln() - (h.tau / (beta * beta)).powf(h.k)
    }
}

/// Joint log prior density on the natural parameter scale.
pub fn log_prior(tox: &ToxicityParams, eff: &EfficacyParams, hyper: &IMomHyperparams) -> f64 {
    if !(tox.alpha1 > 0.0 && tox.alpha2 > 0.0) {
        return f64::NEG_INFINITY;
    }
    let terms = PriorTerms::new(*hyper);
    let mut lp = terms.intercept(tox.alpha0)
        + gamma_log_density(tox.alpha1, GAMMA_SHAPE, GAMMA_RATE)
        + gamma_log_density(tox.alpha2, GAMMA_SHAPE, GAMMA_RATE)
        + terms.intercept(eff.beta[0])
        + terms.slope(eff.beta[1])
        + terms.slope(eff.beta[2]);
    if eff.model.quadratic_a() {
        lp += terms.quadratic(eff.beta[3]);
    }
    if eff.model.quadratic_b() {
        lp += terms.quadratic(eff.beta[4]);
    }
    lp
}
