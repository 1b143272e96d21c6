//! Dose-toxicity (linear logistic) and dose-efficacy (quadratic logistic) links.

use serde::{Deserialize, Serialize};

use super::{DoseError, DosePair};
use crate::scalar::{logistic, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelId {
    /// Linear in both agents.
    M1,
    /// Quadratic in agent A.
    M2,
    /// Quadratic in agent B.
    M3,
    /// Quadratic in both.
    M4,
}

impl ModelId {
    pub const ALL: [ModelId; 4] = [ModelId::M1, ModelId::M2, ModelId::M3, ModelId::M4];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn quadratic_a(self) -> bool {
        matches!(self, ModelId::M2 | ModelId::M4)
    }

    pub fn quadratic_b(self) -> bool {
        matches!(self, ModelId::M3 | ModelId::M4)
    }

    pub fn from_terms(quadratic_a: bool, quadratic_b: bool) -> Self {
        match (quadratic_a, quadratic_b) {
            (false, false) => ModelId::M1,
            (true, false) => ModelId::M2,
            (false, true) => ModelId::M3,
            (true, true) => ModelId::M4,
        }
    }
}

impl std::fmt::Display for ModelId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "M{}", self.index() + 1)
    }
}

/// `logit p(x) = alpha0 + alpha1 * xa + alpha2 * xb`, with positive slopes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToxicityParams<T> {
    pub alpha0: T,
    pub alpha1: T,
    pub alpha2: T,
}

impl<T: Scalar> ToxicityParams<T> {
    pub fn new(alpha0: T, alpha1: T, alpha2: T) -> Result<Self, DoseError> {
        if !(alpha1 > T::zero() && alpha2 > T::zero()) {
            return Err(DoseError::Validation {
                field: "alpha",
                message: format!("toxicity slopes must be positive (alpha1={alpha1}, alpha2={alpha2})"),
            });
        }
        Ok(Self { alpha0, alpha1, alpha2 })
    }

    pub fn linear_predictor(&self, x: &DosePair<T>) -> T {
        self.alpha0 + self.alpha1 * x.a + self.alpha2 * x.b
    }

    pub fn prob(&self, x: &DosePair<T>) -> T {
        logistic(self.linear_predictor(x))
    }
}

/// `logit q(x) = b0 + b1 xa + b2 xb + b3 xa^2 + b4 xb^2`, with `b3`/`b4`
/// pinned to zero when `model` leaves the quadratic term out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficacyParams<T> {
    pub model: ModelId,
    pub beta: [T; 5],
}

impl<T: Scalar> EfficacyParams<T> {
    pub fn new(model: ModelId, beta: [T; 5]) -> Result<Self, DoseError> {
        if !model.quadratic_a() && beta[3] != T::zero() {
            return Err(DoseError::Validation {
                field: "beta3",
                message: format!("beta3 must be 0 under {model}"),
            });
        }
        if !model.quadratic_b() && beta[4] != T::zero() {
            return Err(DoseError::Validation {
                field: "beta4",
                message: format!("beta4 must be 0 under {model}"),
            });
        }
        Ok(Self { model, beta })
    }

    pub fn linear_predictor(&self, x: &DosePair<T>) -> T {
        let b = &self.beta;
        b[0] + b[1] * x.a + b[2] * x.b + b[3] * x.a * x.a + b[4] * x.b * x.b
    }

    pub fn prob(&self, x: &DosePair<T>) -> T {
        logistic(self.linear_predictor(x))
    }
}

pub fn toxicity_prob<T: Scalar>(tox: &ToxicityParams<T>, x: &DosePair<T>) -> T {
    tox.prob(x)
}

pub fn efficacy_prob<T: Scalar>(eff: &EfficacyParams<T>, x: &DosePair<T>) -> T {
    eff.prob(x)
}
