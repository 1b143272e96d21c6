//! Wire types.

use serde::{Deserialize, Serialize};

use aaa_core::bayes::IMomHyperparams;
use aaa_core::decision::{Decision, DesignConfig, DoseView, Stage, TrialEvent, TrialState, SCHEMA_VERSION};
use aaa_core::dose::TradeOff;
use aaa_core::sim::McmcProfile;
use aaa_core::{DosePair, Level, ModelId};

/// Body of `POST /trials`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CreateTrial {
    #[serde(flatten)]
    pub design: DesignConfig,
    pub calibration: TradeOff<f64>,
    pub raw_a: Vec<f64>,
    pub raw_b: Vec<f64>,
    #[serde(default)]
    pub imom: Option<IMomHyperparams>,
    /// Falls back to the server's profile.
    #[serde(default)]
    pub mcmc: Option<McmcProfile>,
    #[serde(default = "yes")]
    pub acd: bool,
    /// Root seed of every fit; drawn at random when absent.
    #[serde(default)]
    pub seed: Option<u64>,
}

fn yes() -> bool {
    true
}

/// Body of `POST /trials/{id}/outcomes`. The cohort is named either by id
/// or by its raw dose pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeRequest {
    #[serde(default)]
    pub cohort: Option<u32>,
    #[serde(default)]
    pub dose: Option<DosePair>,
    pub y: u32,
    pub z: u32,
    #[serde(default)]
    pub n: Option<u32>,
    /// Study day; defaults to the time of the last event.
    #[serde(default)]
    pub time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CreatedTrial {
    pub schema_version: u32,
    pub id: String,
    pub recommendation: RecommendationView,
}

/// A cohort awaiting outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OpenCohort {
    pub cohort: u32,
    pub dose: DosePair,
    pub raw: DosePair,
    pub level: Level,
    pub n: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BodcView {
    pub mean: DosePair,
    pub mean_raw: DosePair,
    pub disc_radius: Option<f64>,
    pub r_hat: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RecommendationView {
    pub schema_version: u32,
    pub trial_id: String,
    pub stage: Stage,
    /// Latest decision; absent before the first outcomes.
    pub decision: Option<Decision>,
    /// Cohorts that should be treated and followed up next.
    pub open_cohorts: Vec<OpenCohort>,
    pub per_dose: Vec<DoseView>,
    pub bodc: Option<BodcView>,
    pub model_posteriors: Option<[f64; 4]>,
    pub selected_model: Option<ModelId>,
    pub insert: Option<bool>,
    pub selection: Option<DosePair>,
    pub selection_raw: Option<DosePair>,
    pub terminated_early: bool,
}

impl RecommendationView {
    pub fn of(id: &str, state: &TrialState) -> Self {
        let summary = state.events.iter().rev().find_map(|e| match &e.payload {
            aaa_core::decision::EventPayload::DecisionIssued { summary, .. } => summary.as_ref(),
            _ => None,
        });
        let open_cohorts = state
            .open_cohorts()
            .filter_map(|c| {
                Some(OpenCohort {
                    cohort: c.id,
                    dose: c.dose,
                    raw: state.grid.to_raw(&c.dose),
                    level: state.grid.level_of(&c.dose)?,
                    n: c.enrolled,
                })
            })
            .collect();
        Self {
            schema_version: SCHEMA_VERSION,
            trial_id: id.into(),
            stage: state.stage,
            decision: state.last_decision.clone(),
            open_cohorts,
            per_dose: summary.map(|s| s.per_dose.clone()).unwrap_or_default(),
            bodc: summary.and_then(|s| {
                s.bodc_mean.map(|m| BodcView {
                    mean: m,
                    mean_raw: state.grid.to_raw(&m),
                    disc_radius: s.disc_radius,
                    r_hat: s.r_hat,
                })
            }),
            model_posteriors: summary.map(|s| s.model_posteriors),
            selected_model: summary.map(|s| s.selected),
            insert: summary.and_then(|s| s.insert),
            selection: state.selection,
            selection_raw: state.selection.map(|d| state.grid.to_raw(&d)),
            terminated_early: state.terminated_early,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AssignedView {
    pub dose: DosePair,
    pub raw: DosePair,
    pub n: u32,
}

/// Serializable fold of a trial's events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StateSnapshot {
    pub stage: Stage,
    pub raw_a: Vec<f64>,
    pub raw_b: Vec<f64>,
    pub std_a: Vec<f64>,
    pub std_b: Vec<f64>,
    pub excluded: Vec<Level>,
    pub inserted: Vec<DosePair>,
    pub assigned: Vec<AssignedView>,
    pub n1: u32,
    pub n2: u32,
    pub cohorts: Vec<aaa_core::decision::Cohort>,
    pub decisions: u32,
    pub selection: Option<DosePair>,
    pub terminated_early: bool,
}

impl From<&TrialState> for StateSnapshot {
    fn from(s: &TrialState) -> Self {
        let mut excluded: Vec<Level> = s.grid.excluded.iter().copied().collect();
        excluded.sort();
        Self {
            stage: s.stage,
            raw_a: s.grid.raw_a.clone(),
            raw_b: s.grid.raw_b.clone(),
            std_a: s.grid.std_a.clone(),
            std_b: s.grid.std_b.clone(),
            excluded,
            inserted: s.grid.inserted.clone(),
            assigned: s
                .assigned
                .iter()
                .map(|&(dose, n)| AssignedView {
                    dose,
                    raw: s.grid.to_raw(&dose),
                    n,
                })
                .collect(),
            n1: s.n1,
            n2: s.n2,
            cohorts: s.cohorts.clone(),
            decisions: s.decisions,
            selection: s.selection,
            terminated_early: s.terminated_early,
        }
    }
}

/// Body of `GET /trials/{id}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrialView {
    pub schema_version: u32,
    pub id: String,
    pub state: StateSnapshot,
    pub events: Vec<TrialEvent>,
}
