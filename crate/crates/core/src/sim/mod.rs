//! Virtual trials: true scenario curves, an accrual clock, replicate runs and
//! operating characteristics.

mod design;
mod oc;
mod scenario;
mod trial;

use thiserror::Error;

pub use design::{ArrivalProcess, DesignSpec, McmcProfile, TimeModel};
pub use oc::{
    aggregate, duration_comparison, render_table, replicate_seed, run_replicates, DoseOc, DurationComparison,
    DurationPair, MeanSd, OperatingCharacteristics,
};
pub use scenario::{simulate_cohort_outcomes, ScenarioSpec, TrueEfficacy};
pub use trial::{run_trial, Allocation, TrialRecord};

use crate::decision::DecisionError;
use crate::DoseError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Dose(#[from] DoseError),
    #[error(transparent)]
    Decision(#[from] DecisionError),
    #[error("simulation stalled at day {0:.1}: no arrivals or completions pending")]
    Stalled(f64),
}
