use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};

/// Floating point type the dose-model math is written against: `f32` or `f64`.
pub trait Scalar: Float + FromPrimitive + Debug + Display + Default + Send + Sync + 'static {
    /// Converts an `f64` literal into this scalar type.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Logistic (inverse-logit) function.
pub fn logistic<T: Scalar>(eta: T) -> T {
    if eta >= T::zero() {
        T::one() / (T::one() + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (T::one() + e)
    }
}

/// `ln(logistic(eta))` without cancellation for large `|eta|`.
pub fn log_logistic<T: Scalar>(eta: T) -> T {
    -softplus(-eta)
}

/// `ln(1 + e^x)`.
pub fn softplus<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn logit<T: Scalar>(p: T) -> T {
    (p / (T::one() - p)).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logistic_is_symmetric() {
        for &x in &[-30.0, -2.0, 0.0, 0.7, 40.0] {
            let s: f64 = logistic(x) + logistic(-x);
            assert!((s - 1.0).abs() < 1e-15);
        }
        assert_eq!(logistic(0.0f32), 0.5);
    }

    #[test]
    fn log_logistic_matches_naive_in_range() {
        for &x in &[-5.0f64, -0.3, 0.0, 2.5] {
            assert!((log_logistic(x) - logistic(x).ln()).abs() < 1e-14);
        }
        // naive form underflows here
        assert!((log_logistic(-800.0f64) + 800.0).abs() < 1e-9);
    }

    #[test]
    fn logit_inverts_logistic() {
        let p = 0.3f64;
        assert!((logistic(logit(p)) - p).abs() < 1e-15);
    }
}
