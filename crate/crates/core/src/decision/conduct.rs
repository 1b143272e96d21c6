//! Drives a [`TrialState`] from cohort completions: fit, decide, log, open cohorts.

use serde::{Deserialize, Serialize};

use super::engine::{decide, select_final};
use super::state::{Decision, DecisionKind, EventPayload, TrialEvent, TrialState};
use super::DecisionError;
use crate::bayes::{fit_models, ModelFit, McmcConfig};
use crate::seed::derive_seed;
use crate::DosePair;

/// Seed for the `index`-th fit of a trial.
pub fn decision_seed(root: u64, index: u32) -> u64 {
    derive_seed(root, index as u64)
}

pub fn fit_state(state: &TrialState, seed: u64) -> Result<ModelFit, DecisionError> {
    let cfg = McmcConfig {
        seed,
        ..state.settings.mcmc.clone()
    };
    Ok(fit_models(&state.data, &state.settings.imom, &cfg)?)
}

/// What a completion led to.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub decision: Option<Decision>,
    /// Cohorts opened as a result.
    pub opened: Vec<u32>,
    pub fit: Option<ModelFit>,
    pub closed: bool,
}

/// Records the outcomes of a cohort that finished follow-up and acts on them.
pub fn complete_cohort(state: &mut TrialState, cohort: u32, y: u32, z: u32, time: f64) -> Result<Step, DecisionError> {
    let c = state
        .cohorts
        .get(cohort as usize)
        .ok_or(DecisionError::UnknownCohort(cohort))?;
    let (dose, n) = (c.dose, c.enrolled);
    state.append(time, EventPayload::OutcomesRecorded { cohort, dose, y, z, n })?;
    let mut step = Step {
        decision: None,
        opened: Vec::new(),
        fit: None,
        closed: false,
    };
    if state.remaining_capacity() > 0 {
        let seed = decision_seed(state.settings.mcmc.seed, state.decisions);
        let fit = fit_state(state, seed)?;
        let out = decide(state, &fit, &dose, seed)?;
        state.append(
            time,
            EventPayload::DecisionIssued {
                decision: out.decision.clone(),
                summary: Some(out.summary),
                seed,
            },
        )?;
        for e in out.effects {
            state.append(time, e)?;
        }
        match out.decision.kind {
            DecisionKind::TerminateTrial => {
                state.append(time, EventPayload::TrialClosed { selection: None, early: true })?;
                step.closed = true;
            }
            DecisionKind::TerminateCohort => {}
            _ => {
                for d in &out.decision.doses {
                    step.opened.extend(state.open_cohort(time, *d)?);
                }
            }
        }
        step.decision = Some(out.decision);
        step.fit = Some(fit);
    }
    if !step.closed && state.open_cohorts().next().is_none() {
        let fit = finalize(state, time)?;
        step.fit = Some(fit);
        step.closed = true;
    }
    Ok(step)
}

/// Closes the trial with the final selection.
pub fn finalize(state: &mut TrialState, time: f64) -> Result<ModelFit, DecisionError> {
    let fit = fit_state(state, decision_seed(state.settings.mcmc.seed, state.decisions))?;
    let selection = select_final(state, &fit);
    state.append(time, EventPayload::TrialClosed { selection, early: false })?;
    Ok(fit)
}

/// Enrolls `count` patients into an enrolling cohort.
pub fn enroll(state: &mut TrialState, cohort: u32, count: u32, time: f64) -> Result<(), DecisionError> {
    state.append(time, EventPayload::PatientsEnrolled { cohort, count })
}

/// A logged decision that re-deciding from the log did not reproduce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Mismatch {
    pub seq: u64,
    pub logged: String,
    pub recomputed: String,
}

/// Re-derives every decision and the final selection from the log, using the
/// seeds it records, and reports where they differ.
pub fn verify_log(events: &[TrialEvent]) -> Result<Vec<Mismatch>, DecisionError> {
    let mut state = TrialState::replay(events.get(..1).unwrap_or_default())?;
    let mut mismatches = Vec::new();
    let mut last_dose: Option<DosePair> = None;
    let mut i = 1;
    while i < events.len() {
        let e = &events[i];
        match &e.payload {
            EventPayload::OutcomesRecorded { dose, .. } => last_dose = Some(*dose),
            EventPayload::DecisionIssued { decision, seed, .. } => {
                let dose = last_dose.ok_or_else(|| DecisionError::Replay("decision before any outcomes".into()))?;
                let expected_seed = decision_seed(state.settings.mcmc.seed, state.decisions);
                let fit = fit_state(&state, *seed)?;
                let out = decide(&state, &fit, &dose, *seed)?;
                let logged_effects: Vec<&EventPayload> = events[i + 1..]
                    .iter()
                    .map(|e| &e.payload)
                    .take(out.effects.len())
                    .collect();
                let effects_match = logged_effects.len() == out.effects.len()
                    && logged_effects.iter().zip(&out.effects).all(|(a, b)| *a == b);
                if *seed != expected_seed || out.decision != *decision || !effects_match {
                    mismatches.push(Mismatch {
                        seq: e.seq,
                        logged: serde_json::to_string(decision).unwrap_or_default(),
                        recomputed: serde_json::to_string(&out.decision).unwrap_or_default(),
                    });
                }
            }
            EventPayload::TrialClosed { selection, early: false } => {
                let fit = fit_state(&state, decision_seed(state.settings.mcmc.seed, state.decisions))?;
                let expected = select_final(&state, &fit);
                if expected != *selection {
                    mismatches.push(Mismatch {
                        seq: e.seq,
                        logged: format!("{selection:?}"),
                        recomputed: format!("{expected:?}"),
                    });
                }
            }
            _ => {}
        }
        state.append(e.time, e.payload.clone())?;
        if e.seq != i as u64 + 1 {
            return Err(DecisionError::Replay(format!("event {} has seq {}", i + 1, e.seq)));
        }
        i += 1;
    }
    Ok(mismatches)
}
