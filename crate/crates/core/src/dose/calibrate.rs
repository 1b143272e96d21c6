//! Utility-parameter elicitation from two equally desirable toxicity/efficacy pairs.
//!
//! The pairs `(0, q1)` and `(p_t, q2)` share utility `u_star`. With
//! `eta1 = 1 / (e^eta2 - 1)` and `eta3 = -eta1` the efficacy scale is pinned to
//! `[0, 1]`, the first pair reduces to `(e^{eta2 q1} - 1) / (e^eta2 - 1) = u_star`
//! (monotone decreasing in `eta2`, bisected), and the second pair gives `eta0`.

use serde::{Deserialize, Serialize};

use super::{DoseError, UtilityParams};
use crate::scalar::Scalar;

const ETA2_LO: f64 = 1e-6;
const ETA2_HI: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSpec<T> {
    #[serde(rename = "pT")]
    pub p_t: T,
    #[serde(rename = "q1")]
    pub q1_star: T,
    #[serde(rename = "q2")]
    pub q2_star: T,
    #[serde(rename = "U")]
    pub u_star: T,
}

impl<T: Scalar> CalibrationSpec<T> {
    pub fn validate(&self) -> Result<(), DoseError> {
        let check = |ok: bool, field: &'static str, message: &str| {
            if ok {
                Ok(())
            } else {
                Err(DoseError::Validation {
                    field,
                    message: message.to_string(),
                })
            }
        };
        let (zero, one) = (T::zero(), T::one());
        check(self.p_t > zero && self.p_t < one, "pT", "must lie in (0, 1)")?;
        check(self.q1_star > zero && self.q1_star < one, "q1", "must lie in (0, 1)")?;
        check(self.q2_star > zero && self.q2_star < one, "q2", "must lie in (0, 1)")?;
        check(self.q1_star < self.q2_star, "q2", "must exceed q1")?;
        check(self.u_star > zero && self.u_star < one, "U", "must lie in (0, 1)")
    }
}

/// Residuals of the four defining equations at `eta`.
pub fn calibration_residuals<T: Scalar>(spec: &CalibrationSpec<T>, eta: &UtilityParams<T>) -> [T; 4] {
    [
        eta.safety(T::zero()) * eta.efficacy(spec.q1_star) - spec.u_star,
        eta.safety(spec.p_t) * eta.efficacy(spec.q2_star) - spec.u_star,
        eta.eta1 + eta.eta3,
        eta.eta1 * eta.eta2.exp() + eta.eta3 - T::one(),
    ]
}

fn residual_tolerance<T: Scalar>() -> T {
    T::lit(1e-8).max(T::epsilon() * T::lit(200.0))
}

/// Normalized efficacy utility for a given `eta2`.
fn scaled_efficacy<T: Scalar>(eta2: T, q: T) -> T {
    (eta2 * q).exp_m1() / eta2.exp_m1()
}

pub fn calibrate_eta<T: Scalar>(spec: &CalibrationSpec<T>) -> Result<UtilityParams<T>, DoseError> {
    spec.validate()?;
    let f = |eta2: T| scaled_efficacy(eta2, spec.q1_star) - spec.u_star;
    let (mut lo, mut hi) = (T::lit(ETA2_LO), T::lit(ETA2_HI));
    let (f_lo, f_hi) = (f(lo), f(hi));
    if !(f_lo > T::zero() && f_hi < T::zero()) {
        return Err(DoseError::Calibration {
            message: format!(
                "no root for eta2 in ({ETA2_LO}, {ETA2_HI}); U* must lie strictly between 0 and q1*"
            ),
            residuals: [f_lo.to_f64().unwrap_or(f64::NAN), f_hi.to_f64().unwrap_or(f64::NAN), 0.0, 0.0],
        });
    }
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let eta2 = (lo + hi) * T::lit(0.5);
    let eta1 = T::one() / eta2.exp_m1();
    let mut eta = UtilityParams {
        eta0: T::zero(),
        eta1,
        eta2,
        eta3: -eta1,
        p_t: spec.p_t,
    };
    eta.eta0 = spec.u_star / eta.efficacy(spec.q2_star);
    let residuals = calibration_residuals(spec, &eta);
    let tol = residual_tolerance::<T>();
    if residuals.iter().any(|r| !(r.abs() < tol)) {
        return Err(DoseError::Calibration {
            message: "solution does not satisfy the calibration equations".into(),
            residuals: residuals.map(|r| r.to_f64().unwrap_or(f64::NAN)),
        });
    }
    Ok(eta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(p_t: f64, q1: f64, q2: f64, u: f64) -> CalibrationSpec<f64> {
        CalibrationSpec {
            p_t,
            q1_star: q1,
            q2_star: q2,
            u_star: u,
        }
    }

    #[test]
    fn reproduces_published_eta() {
        let eta = calibrate_eta(&spec(0.3, 0.45, 0.85, 0.3)).unwrap();
        let got = [eta.eta0, eta.eta1, eta.eta2, eta.eta3];
        let want = [0.396, 0.385, 1.280, -0.385];
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-3, "{got:?}");
        }
        assert!((eta.eta1 + eta.eta3).abs() < 1e-15);
        eta.validate().unwrap();
    }

    #[test]
    fn residuals_vanish_on_other_inputs() {
        for s in [spec(0.3, 0.5, 0.9, 0.35), spec(0.25, 0.3, 0.6, 0.1), spec(0.4, 0.8, 0.95, 0.79)] {
            let eta = calibrate_eta(&s).unwrap();
            for r in calibration_residuals(&s, &eta) {
                assert!(r.abs() < 1e-8, "{s:?}: {r}");
            }
        }
    }

    #[test]
    fn utility_above_q1_has_no_positive_eta2() {
        // U* >= q1* forces eta2 <= 0, outside the admissible branch
        let err = calibrate_eta(&spec(0.3, 0.2, 0.6, 0.3)).unwrap_err();
        assert!(matches!(err, DoseError::Calibration { .. }));
    }

    #[test]
    fn rejects_invalid_spec() {
        assert!(calibrate_eta(&spec(1.5, 0.45, 0.85, 0.3)).is_err());
        assert!(calibrate_eta(&spec(0.3, 0.85, 0.45, 0.3)).is_err());
    }

    #[test]
    fn calibrates_in_f32() {
        let s = CalibrationSpec::<f32> {
            p_t: 0.3,
            q1_star: 0.45,
            q2_star: 0.85,
            u_star: 0.3,
        };
        let eta = calibrate_eta(&s).unwrap();
        assert!((eta.eta2 - 1.280).abs() < 1e-3);
    }
}
