//! Safety, efficacy and overall utility of a dose combination.

use serde::{Deserialize, Serialize};

use super::{DoseError, DosePair, EfficacyParams, ToxicityParams};
use crate::scalar::Scalar;

/// `(eta0, eta1, eta2, eta3)` together with the toxicity ceiling `p_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct UtilityParams<T> {
    pub eta0: T,
    pub eta1: T,
    pub eta2: T,
    pub eta3: T,
    #[serde(rename = "pT")]
    pub p_t: T,
}

impl<T: Scalar> UtilityParams<T> {
    pub fn validate(&self) -> Result<(), DoseError> {
        let bad = |field, message: &str| {
            Err(DoseError::Validation {
                field,
                message: message.to_string(),
            })
        };
        if !(self.p_t > T::zero() && self.p_t < T::one()) {
            return bad("pT", "must lie in (0, 1)");
        }
        if !(self.eta2 > T::zero()) {
            return bad("eta2", "must be positive");
        }
        let tol = T::lit(1e-6);
        if (self.eta1 + self.eta3).abs() > tol {
            return bad("eta1", "eta1 + eta3 must be 0");
        }
        if (self.eta1 * self.eta2.exp() + self.eta3 - T::one()).abs() > tol {
            return bad("eta1", "eta1 * exp(eta2) + eta3 must be 1");
        }
        Ok(())
    }

    /// Truncated linear safety utility; 1 at `p = 0`, `eta0` at `p = p_t`, 0 above.
    pub fn safety(&self, p: T) -> T {
        if p > self.p_t {
            T::zero()
        } else {
            T::one() - (T::one() - self.eta0) / self.p_t * p
        }
    }

    /// Exponential efficacy utility; 0 at `q = 0`, 1 at `q = 1`.
    pub fn efficacy(&self, q: T) -> T {
        self.eta1 * (self.eta2 * q).exp() + self.eta3
    }

    pub fn combine(&self, p: T, q: T) -> T {
        let s = self.safety(p);
        if s == T::zero() {
            return T::zero();
        }
        s * self.efficacy(q)
    }

    pub fn overall(&self, x: &DosePair<T>, tox: &ToxicityParams<T>, eff: &EfficacyParams<T>) -> T {
        self.combine(tox.prob(x), eff.prob(x))
    }
}

pub fn utility_safety<T: Scalar>(p: T, u: &UtilityParams<T>) -> T {
    u.safety(p)
}

pub fn utility_efficacy<T: Scalar>(q: T, u: &UtilityParams<T>) -> T {
    u.efficacy(q)
}

pub fn overall_utility<T: Scalar>(
    x: &DosePair<T>,
    tox: &ToxicityParams<T>,
    eff: &EfficacyParams<T>,
    u: &UtilityParams<T>,
) -> T {
    u.overall(x, tox, eff)
}
