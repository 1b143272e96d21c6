//! Dose scaling, dose-response links, utilities and utility calibration.
//!
//! Everything here is generic over [`Scalar`](crate::Scalar) so the same code
//! serves `f32` and `f64`; the rest of the crate works in `f64` through the
//! aliases at the crate root.

mod calibrate;
mod config;
mod grid;
mod response;
mod utility;

use thiserror::Error;

pub use calibrate::{calibrate_eta, calibration_residuals, CalibrationSpec};
pub use config::{GridConfig, TradeOff};
pub use grid::{AgentScale, DoseGrid, DosePair, Level};
pub use response::{efficacy_prob, toxicity_prob, EfficacyParams, ModelId, ToxicityParams};
pub use utility::{overall_utility, utility_efficacy, utility_safety, UtilityParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DoseError {
    #[error("invalid {field}: {message}")]
    Validation { field: &'static str, message: String },
    #[error("dose ({a}, {b}) is already on the grid")]
    DuplicateDose { a: f64, b: f64 },
    #[error("calibration failed: {message} (residuals {residuals:?})")]
    Calibration { message: String, residuals: [f64; 4] },
}

impl DoseError {
    pub fn field(&self) -> Option<&'static str> {
        match self {
            DoseError::Validation { field, .. } => Some(field),
            _ => None,
        }
    }
}
