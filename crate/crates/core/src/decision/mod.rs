//! Dose-finding decisions: optimal-dose estimation, dose insertion, the
//! escalation rules and the event-sourced trial state they act on.

mod bodc;
mod conduct;
mod config;
mod engine;
mod insertion;
mod state;

use thiserror::Error;

pub use bodc::{draw_argmax, draw_utility, estimate_bodc, BodcSample, DrawOptimum, SearchRegion, COARSE_POINTS};
pub use conduct::{complete_cohort, decision_seed, enroll, finalize, fit_state, verify_log, Mismatch, Step};
pub use config::DesignConfig;
pub use engine::{decide, is_dose_toxic, reuse_threshold, select_final, stage1_next, summarize_dose, DoseSummary, DoseView, Outcome};
pub use insertion::{clip_insertion, in_excluded_region, insertion_indicator, skips_untried, InsertionAssessment};
pub use state::{
    Cohort, Decision, DecisionKind, EventPayload, FitSummary, Stage, TrialEvent, TrialSettings, TrialState,
    SCHEMA_VERSION,
};

use crate::bayes::BayesError;
use crate::DoseError;

#[derive(Debug, Error)]
pub enum DecisionError {
    #[error("{field}: {message}")]
    Validation { field: &'static str, message: String },
    #[error(transparent)]
    Dose(#[from] DoseError),
    #[error(transparent)]
    Bayes(#[from] BayesError),
    #[error("inconsistent event: {0}")]
    Replay(String),
    #[error("cohort capacity exceeded ({0} patients)")]
    Capacity(u32),
    #[error("unknown cohort {0}")]
    UnknownCohort(u32),
    #[error("trial is closed")]
    Closed,
}

impl DecisionError {
    pub fn field(&self) -> Option<&'static str> {
        match self {
            DecisionError::Validation { field, .. } => Some(field),
            DecisionError::Dose(e) => e.field(),
            _ => None,
        }
    }
}
