//! Dual-agent dose-combination finding with adaptive model selection,
//! adaptive dose insertion and adaptive cohort division.
//!
//! * [`dose`]: dose scaling, response links, utilities, calibration (generic over the scalar).
//! * [`bayes`]: priors, likelihood, Metropolis-Hastings fits and model selection.
//! * [`decision`]: optimal-dose estimation, insertion, and the escalation rules.
//! * [`sim`]: virtual trials and operating characteristics.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bayes;
pub mod decision;
pub mod dose;
pub mod scalar;
pub mod seed;
pub mod sim;

pub use scalar::Scalar;

pub use dose::{DoseError, Level, ModelId};

pub type DoseGrid = dose::DoseGrid<f64>;
pub type DosePair = dose::DosePair<f64>;
pub type ToxicityParams = dose::ToxicityParams<f64>;
pub type EfficacyParams = dose::EfficacyParams<f64>;
pub type UtilityParams = dose::UtilityParams<f64>;
pub type CalibrationSpec = dose::CalibrationSpec<f64>;
pub type GridConfig = dose::GridConfig<f64>;
